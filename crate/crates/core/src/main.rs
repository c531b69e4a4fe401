fn main() {
    std::process::exit(spectral_lab::cli::main_with_args(std::env::args().skip(1)));
}
