fn main() {
    std::process::exit(stockevents::run_cli(std::env::args_os()));
}
