fn main() {
    std::process::exit(fluidex_cli::main_with_args(std::env::args_os()));
}
