fn main() {
    std::process::exit(rankinfer::cli::main());
}
