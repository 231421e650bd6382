fn main() {
    std::process::exit(bandspec::cli::main_with_args(std::env::args_os()));
}
