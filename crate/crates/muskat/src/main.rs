fn main() {
    std::process::exit(muskat::cli::main_with_args(std::env::args_os()));
}
