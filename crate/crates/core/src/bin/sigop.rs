fn main() {
    std::process::exit(sigop::cli::run(std::env::args_os()));
}
