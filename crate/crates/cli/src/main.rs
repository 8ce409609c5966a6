fn main() {
    std::process::exit(ncris_cli::run(std::env::args_os()));
}
