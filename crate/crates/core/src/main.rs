fn main() {
    std::process::exit(floquet_core::cli::run_cli(std::env::args_os()));
}
