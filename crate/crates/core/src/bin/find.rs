fn main() {
    std::process::exit(find_core::cli::run(std::env::args_os()));
}
