fn main() {
    std::process::exit(ddsrnet::cli::main());
}
