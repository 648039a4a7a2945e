fn main() {
    std::process::exit(sgs_closure::cli::main_with_args(std::env::args_os()));
}
