fn main() {
    std::process::exit(isocurv::cli::run(std::env::args_os()));
}
