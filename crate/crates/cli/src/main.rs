fn main() {
    std::process::exit(plausible_cli::run_cli(std::env::args_os()));
}
