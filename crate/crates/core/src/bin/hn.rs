fn main() {
    std::process::exit(horseshoe_net::cli_io::main_with_args(std::env::args_os()));
}
