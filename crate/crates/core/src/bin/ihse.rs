fn main() {
    std::process::exit(ihse::cli::run(std::env::args_os()));
}
