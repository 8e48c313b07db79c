use std::process::ExitCode;

use clap::Parser;

use multibump_cli::{configure_threads, execute, run::write_error, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("{}", e.to_json());
        return ExitCode::from(e.exit_code() as u8);
    }
    let (out, result) = execute(&args);
    match result {
        Ok(output) => {
            if args.verbose {
                eprintln!(
                    "multibump: wrote {} files to {}",
                    output.artifacts.len(),
                    output.out_dir.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            write_error(&e, out.as_deref());
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
