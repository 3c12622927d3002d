fn main() {
    std::process::exit(dicke_echo::cli::run(std::env::args_os()));
}
