fn main() {
    std::process::exit(seamdetect::cli::run(std::env::args_os()));
}
