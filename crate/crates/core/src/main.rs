fn main() {
    std::process::exit(dfchain::cli::main());
}
