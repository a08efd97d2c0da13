fn main() -> std::process::ExitCode {
    combss_glm::cli::main()
}
