fn main() {
    std::process::exit(saddle_core::cli::run(std::env::args_os()));
}
