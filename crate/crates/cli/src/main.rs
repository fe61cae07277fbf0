fn main() {
    std::process::exit(lattice_ucp_cli::main_with_args(std::env::args_os()));
}
