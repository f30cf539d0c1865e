fn main() {
    std::process::exit(acceptability::cli::run(std::env::args_os()));
}
