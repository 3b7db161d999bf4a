fn main() {
    std::process::exit(hyperwalk_cli::app::main_with_args(std::env::args_os()));
}
