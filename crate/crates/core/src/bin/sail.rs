fn main() {
    std::process::exit(sail::cli::run(std::env::args_os()));
}
