fn main() {
    std::process::exit(swarm_feasibility::cli::main_with_args(std::env::args_os()));
}
