fn main() {
    std::process::exit(musielak::cli::run(std::env::args().collect()));
}
