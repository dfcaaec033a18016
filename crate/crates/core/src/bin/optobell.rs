fn main() {
    std::process::exit(optobell::cli::main());
}
