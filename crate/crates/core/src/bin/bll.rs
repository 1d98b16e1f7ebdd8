fn main() {
    std::process::exit(beta_laguerre::cli::main());
}
