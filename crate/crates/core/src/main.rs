fn main() {
    std::process::exit(fermode::cli::run(std::env::args_os()));
}
