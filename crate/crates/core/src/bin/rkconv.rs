fn main() {
    std::process::exit(rkconv::cli::parse_and_run(std::env::args_os()));
}
