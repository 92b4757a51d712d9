fn main() {
    std::process::exit(afl_core::cli::run(std::env::args_os()));
}
