fn main() -> std::process::ExitCode {
    haarsense::cli::run()
}
