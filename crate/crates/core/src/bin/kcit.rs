fn main() {
    std::process::exit(kcit::cli::main());
}
