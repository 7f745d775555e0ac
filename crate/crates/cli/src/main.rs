fn main() {
    std::process::exit(sawtrap_cli::main_with_args(std::env::args_os()));
}
