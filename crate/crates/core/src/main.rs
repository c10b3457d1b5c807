fn main() -> std::process::ExitCode {
    barrier_planner::cli::main()
}
