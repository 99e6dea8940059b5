fn main() {
    std::process::exit(heisenspec_cli::run_cli(std::env::args_os().collect()));
}
