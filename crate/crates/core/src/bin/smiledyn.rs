fn main() -> std::process::ExitCode {
    smiledyn::cli::main()
}
