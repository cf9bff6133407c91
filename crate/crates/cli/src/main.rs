fn main() {
    std::process::exit(tmandel_cli::run(std::env::args_os()));
}
