use std::process::ExitCode;

fn main() -> ExitCode {
    match qcp::run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qcp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
