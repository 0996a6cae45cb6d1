fn main() {
    std::process::exit(asyncgl_cli::cli::main_with_args(std::env::args_os()));
}
