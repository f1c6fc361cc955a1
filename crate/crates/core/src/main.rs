fn main() {
    std::process::exit(wbshift::cli::run(std::env::args_os()));
}
