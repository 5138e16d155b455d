use std::process::ExitCode;

fn main() -> ExitCode {
    cdnsim::cli::main()
}
