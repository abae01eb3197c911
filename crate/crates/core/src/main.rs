fn main() {
    std::process::exit(dyadic_gehring::cli::run(std::env::args_os()));
}
