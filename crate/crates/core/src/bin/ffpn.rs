fn main() {
    std::process::exit(ffpn::cli::run());
}
