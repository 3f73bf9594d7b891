fn main() {
    std::process::exit(vadm::cli::main_with_args(std::env::args_os()));
}
