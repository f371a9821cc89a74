fn main() {
    std::process::exit(lsi_stability::cli::run_subcommand(
        &std::env::args().collect::<Vec<_>>(),
    ))
}
