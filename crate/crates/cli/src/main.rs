use std::process::ExitCode;

use narmax_lasso_cli::CliError;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match narmax_lasso_cli::run(std::env::args_os(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                // clap renders its own prefix and usage hint
                CliError::Usage(msg) => eprint!("{msg}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
