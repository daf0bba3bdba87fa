fn main() {
    std::process::exit(xitrace::cli::run(std::env::args_os()));
}
