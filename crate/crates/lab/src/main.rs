fn main() -> std::process::ExitCode {
    cashflow_lab::cli::main()
}
