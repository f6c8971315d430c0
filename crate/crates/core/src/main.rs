fn main() {
    std::process::exit(flagkernel::cli::main_with_args(std::env::args_os()));
}
