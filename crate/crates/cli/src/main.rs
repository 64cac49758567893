fn main() {
    std::process::exit(gasketlab_cli::run(std::env::args_os()));
}
