fn main() {
    std::process::exit(wns::cli::main_with_args(std::env::args_os()));
}
