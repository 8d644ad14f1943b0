fn main() {
    std::process::exit(leafwise::cli::run_from_args());
}
