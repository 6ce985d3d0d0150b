fn main() {
    std::process::exit(ejet_ml::cli::run(std::env::args_os()));
}
