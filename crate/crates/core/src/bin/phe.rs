fn main() {
    std::process::exit(phe::cli::run(std::env::args_os()));
}
