fn main() {
    std::process::exit(sazig::cli::main_with_args(std::env::args_os()));
}
