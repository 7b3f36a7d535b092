fn main() {
    std::process::exit(monodromy_core::cli::run());
}
