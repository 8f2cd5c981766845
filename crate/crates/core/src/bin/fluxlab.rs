fn main() {
    std::process::exit(fluxlab::cli::run(std::env::args_os()));
}
