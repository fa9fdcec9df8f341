fn main() {
    std::process::exit(pdham_kit::cli::run());
}
