fn main() {
    std::process::exit(objectness::cli::run(std::env::args_os()));
}
