fn main() -> std::process::ExitCode {
    qcurate_cli::main_entry()
}
