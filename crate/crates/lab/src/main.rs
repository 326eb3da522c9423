fn main() {
    std::process::exit(slr_lab::cli::main_with_args(std::env::args_os()));
}
