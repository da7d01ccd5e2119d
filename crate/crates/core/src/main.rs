fn main() {
    std::process::exit(mscope::cli::run_from(std::env::args_os()));
}
