fn main() {
    if let Err(err) = ddtune::cli::run() {
        eprintln!("ddtune-error: {err:#}");
        std::process::exit(1);
    }
}
