fn main() {
    std::process::exit(pwcheat::cli::main());
}
