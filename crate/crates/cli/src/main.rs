fn main() {
    std::process::exit(spfq_cli::run(std::env::args_os()));
}
