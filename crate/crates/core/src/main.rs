fn main() {
    std::process::exit(explkit::cli::main_with_args(std::env::args_os()));
}
