fn main() {
    std::process::exit(arcbern::cli::run(std::env::args_os()));
}
