fn main() {
    std::process::exit(muler::cli::run(std::env::args_os()));
}
