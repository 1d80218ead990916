fn main() {
    std::process::exit(pathfinder_core::cli::main_with(std::env::args_os()));
}
