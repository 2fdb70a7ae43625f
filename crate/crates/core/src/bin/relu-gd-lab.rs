fn main() {
    std::process::exit(relu_gd_lab::cli::main_from_args(std::env::args_os()));
}
