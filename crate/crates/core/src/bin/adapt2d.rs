fn main() {
    std::process::exit(adapt2d::cli::run(std::env::args()));
}
