fn main() {
    std::process::exit(crs_core::cli_io::main_with_args(std::env::args_os()));
}
