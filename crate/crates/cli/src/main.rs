fn main() {
    std::process::exit(fes_ilc_cli::app::run(std::env::args_os()));
}
