fn main() {
    std::process::exit(thermoporo::cli::main_with_args(std::env::args_os()));
}
