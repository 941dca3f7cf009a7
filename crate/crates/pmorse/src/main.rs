fn main() {
    std::process::exit(pmorse::harness::run_cli(std::env::args_os()));
}
