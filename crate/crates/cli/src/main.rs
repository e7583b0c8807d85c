fn main() {
    std::process::exit(strongweights_cli::run(std::env::args_os()));
}
