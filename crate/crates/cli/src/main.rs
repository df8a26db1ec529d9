fn main() {
    std::process::exit(spinperm_cli::run(std::env::args_os()));
}
