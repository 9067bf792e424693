use std::process::exit;

fn main() {
    exit(cayham::cli::run());
}
