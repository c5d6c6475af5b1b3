fn main() {
    std::process::exit(ustat_bee::cli::run(std::env::args_os()));
}
