fn main() {
    std::process::exit(granular_kinetics::cli::main_with_args(std::env::args_os()));
}
