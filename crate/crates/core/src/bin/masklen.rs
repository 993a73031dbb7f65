fn main() {
    std::process::exit(masklen::cli::run(std::env::args_os()));
}
