fn main() -> std::process::ExitCode {
    evalcontract::cli::main_with_args(std::env::args_os())
}
