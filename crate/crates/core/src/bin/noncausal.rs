fn main() {
    std::process::exit(noncausal::cli::run(std::env::args_os().collect()));
}
