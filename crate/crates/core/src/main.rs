fn main() {
    std::process::exit(visfocus::cli::run(std::env::args_os()));
}
