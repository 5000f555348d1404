fn main() {
    std::process::exit(parwire::cli::run_from(std::env::args_os()));
}
