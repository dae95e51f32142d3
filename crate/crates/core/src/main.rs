fn main() -> std::process::ExitCode {
    semilinear_blowup::cli::main_entry()
}
