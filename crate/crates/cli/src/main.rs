fn main() {
    std::process::exit(fdout_cli::run(std::env::args_os()));
}
