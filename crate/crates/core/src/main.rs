fn main() {
    std::process::exit(utoda::cli::main_with_args(std::env::args_os()));
}
