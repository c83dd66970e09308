fn main() {
    std::process::exit(cbt::cli::run(std::env::args_os()));
}
