fn main() {
    std::process::exit(pondera_cli::main_with(std::env::args().collect()));
}
