fn main() -> std::process::ExitCode {
    chainsel::cli::main()
}
