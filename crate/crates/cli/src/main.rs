fn main() {
    std::process::exit(pdolab_cli::run(std::env::args_os()));
}
