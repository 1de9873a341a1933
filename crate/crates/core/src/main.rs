fn main() {
    std::process::exit(colloc_pinn::cli::run(std::env::args_os()));
}
