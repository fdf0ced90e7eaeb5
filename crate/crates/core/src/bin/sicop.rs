fn main() {
    std::process::exit(sicopula::cli::run(std::env::args_os()));
}
