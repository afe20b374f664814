fn main() {
    std::process::exit(thermolab_cli::run(std::env::args_os()));
}
