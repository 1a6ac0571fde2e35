fn main() {
    std::process::exit(moebius::cli::run());
}
