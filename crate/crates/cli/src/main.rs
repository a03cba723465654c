fn main() {
    std::process::exit(pebble_cli::run(std::env::args_os()));
}
