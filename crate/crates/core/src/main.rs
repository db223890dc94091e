fn main() {
    std::process::exit(sunvbs::cli::run(std::env::args_os()));
}
