use std::process::ExitCode;

use clap::Parser;
use ipvss::cli::{self, CliArgs, EXIT_OK, EXIT_VALIDATION};

fn main() -> ExitCode {
    let args = match CliArgs::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let spec = match cli::parse_config(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(cli::exit_code(&e));
        }
    };

    if args.complexity {
        return match cli::report_complexity(spec.taps) {
            Ok(table) => {
                print!("{table}");
                ExitCode::from(EXIT_OK)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(cli::exit_code(&e))
            }
        };
    }

    match cli::run(&spec) {
        Ok(report) => {
            for (point, result) in &report.results {
                for t in &result.trajectories {
                    println!(
                        "{:<16} {:<28} steady-state {:>8.3} dB  converged at {:>5}",
                        point.label,
                        t.algorithm,
                        t.steady_state_db(),
                        t.convergence_iteration
                    );
                }
            }
            if report.unstable {
                eprintln!("error: divergent trials exceeded 1% of the run; see summary.json");
            }
            println!(
                "wrote {} files to {}",
                report.files.len(),
                spec.out_dir.display()
            );
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
