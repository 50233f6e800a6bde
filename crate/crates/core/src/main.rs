fn main() {
    std::process::exit(trajeval::cli::dispatch(std::env::args_os()));
}
