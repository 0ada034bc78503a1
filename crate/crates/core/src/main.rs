fn main() {
    std::process::exit(backhaul_sim::cli::run(std::env::args_os()));
}
