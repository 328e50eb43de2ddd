fn main() {
    std::process::exit(lago::cli::run(std::env::args_os()));
}
