fn main() {
    std::process::exit(pcf_cli::run(std::env::args_os()));
}
