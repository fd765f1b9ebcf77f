fn main() {
    std::process::exit(proplane_cli::run(std::env::args_os()));
}
