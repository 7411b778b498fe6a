fn main() {
    std::process::exit(pcrank::cli::main_with_args(std::env::args_os()));
}
