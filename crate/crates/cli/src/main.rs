fn main() {
    std::process::exit(hydrodeco_cli::run(std::env::args_os()));
}
