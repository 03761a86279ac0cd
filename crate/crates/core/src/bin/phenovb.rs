fn main() {
    std::process::exit(phenovb::cli::main_from(std::env::args_os()));
}
