fn main() {
    std::process::exit(uq_triple::cli::run(std::env::args_os()));
}
