fn main() -> std::process::ExitCode {
    vidmem::cli::main()
}
