fn main() -> std::process::ExitCode {
    opinion_cli::main_exit()
}
