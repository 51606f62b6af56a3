fn main() {
    std::process::exit(mssa::cli::main_with_args(std::env::args_os()));
}
