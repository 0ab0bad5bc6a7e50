fn main() {
    std::process::exit(apc::cli::main_with_args(std::env::args_os()));
}
