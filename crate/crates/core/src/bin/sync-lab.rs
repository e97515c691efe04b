fn main() {
    std::process::exit(sync_lab::cli::parse_and_dispatch(std::env::args_os()));
}
