fn main() {
    std::process::exit(btm::harness::cli_run(std::env::args_os()));
}
