fn main() {
    std::process::exit(slocc4::cli::run());
}
