fn main() {
    std::process::exit(bdris::cli::run());
}
