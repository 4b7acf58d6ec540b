fn main() {
    std::process::exit(cartograf::harness::cli_dispatch(std::env::args_os()));
}
