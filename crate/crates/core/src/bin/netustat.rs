fn main() {
    std::process::exit(netustat::cli::run_cli(std::env::args_os()));
}
