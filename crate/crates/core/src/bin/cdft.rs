fn main() {
    std::process::exit(cdft::cli::run(std::env::args().skip(1)));
}
