fn main() {
    std::process::exit(mixreg::cli::run(std::env::args_os()));
}
