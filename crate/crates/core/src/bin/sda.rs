fn main() {
    std::process::exit(sda::cli::run(std::env::args_os()));
}
