fn main() {
    std::process::exit(geosid::cli::main());
}
