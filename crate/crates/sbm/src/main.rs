fn main() {
    let code = sbm::cli::main_with_args(std::env::args().collect());
    std::process::exit(code);
}
