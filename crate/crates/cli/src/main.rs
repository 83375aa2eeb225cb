fn main() {
    std::process::exit(theta_bidiff_cli::run(std::env::args_os()));
}
