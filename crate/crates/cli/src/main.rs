fn main() {
    std::process::exit(evcast_cli::main_with_args(std::env::args_os()));
}
