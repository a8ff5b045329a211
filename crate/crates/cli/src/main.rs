use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match pathinf_cli::run_args(std::env::args_os()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err((code, message)) => {
            // clap routes --help and --version through the error path with code 0.
            if code == 0 {
                print!("{message}");
            } else {
                eprint!("{message}");
            }
            let _ = std::io::stdout().flush();
            ExitCode::from(code as u8)
        }
    }
}
