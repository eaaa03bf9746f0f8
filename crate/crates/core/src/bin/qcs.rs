fn main() {
    std::process::exit(qcs::cli::main_with_args(std::env::args_os()));
}
