fn main() {
    std::process::exit(bergman::cli::run(std::env::args_os()));
}
