fn main() {
    std::process::exit(detuned_cnot::cli::main_with_args(std::env::args_os()));
}
