fn main() {
    std::process::exit(sirkit_cli::run(std::env::args()));
}
