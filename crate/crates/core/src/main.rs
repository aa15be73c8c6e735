fn main() {
    std::process::exit(uconvex::cli::run(std::env::args_os()));
}
