fn main() {
    std::process::exit(dpgda::cli::run_from(std::env::args_os()));
}
