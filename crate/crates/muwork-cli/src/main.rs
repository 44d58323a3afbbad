fn main() {
    std::process::exit(muwork_cli::run());
}
