fn main() {
    std::process::exit(coupled_heat::cli::run(std::env::args_os()));
}
