fn main() {
    std::process::exit(hestar::cli::run(std::env::args_os()));
}
