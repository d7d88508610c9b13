fn main() {
    std::process::exit(hill_octant::cli::run(std::env::args_os()));
}
