fn main() {
    std::process::exit(cvqkd::cli::run(std::env::args_os()));
}
