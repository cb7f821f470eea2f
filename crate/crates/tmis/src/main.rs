fn main() {
    std::process::exit(tmis::cli::main());
}
