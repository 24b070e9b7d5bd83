fn main() {
    std::process::exit(ldplab::cli::main_with(std::env::args_os()));
}
