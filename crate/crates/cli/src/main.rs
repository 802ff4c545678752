use std::path::PathBuf;
use std::process::ExitCode;

use shadowflow_cli::{parse_config, run, CliError, Command};

const USAGE: &str = "\
shadowflow <command> --config <path> [--out <dir>]

Commands:
  simulate   integrate the extended system, write trajectory.csv + simulate.json
  oracle     compare the run against the closed-form r^2(t), write oracle.csv + oracle.json
  sweep      adiabatic-limit mu sweep, write sweep.json
  spectrum   lattice magnetic-Schrodinger spectrum, write spectrum.json
  fig1       one trajectory CSV per regime parameter p, plus fig1_index.json

Options:
  --config <path>   experiment configuration file (required)
  --out <dir>       output directory (overrides [output] dir)
  --version         print the tool version

Exit status: 0 success, 1 configuration error, 2 numerical failure
(partial outputs and error.json are written).

Set SHADOWFLOW_THREADS to cap concurrent jobs.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--version") {
        println!("shadowflow {}", shadowflow_cli::provenance::version());
        return ExitCode::SUCCESS;
    }
    if args.is_empty()
        || args
            .iter()
            .any(|a| a == "--help" || a == "-h" || a == "help")
    {
        println!("{USAGE}");
        return ExitCode::SUCCESS;
    }

    let Some(command) = Command::parse(&args[0]) else {
        eprintln!("unknown command `{}`\n\n{USAGE}", args[0]);
        return ExitCode::from(1);
    };

    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => match it.next() {
                Some(p) => config_path = Some(PathBuf::from(p)),
                None => {
                    eprintln!("--config needs a path");
                    return ExitCode::from(1);
                }
            },
            "--out" => match it.next() {
                Some(p) => out_dir = Some(PathBuf::from(p)),
                None => {
                    eprintln!("--out needs a directory");
                    return ExitCode::from(1);
                }
            },
            other => {
                eprintln!("unknown option `{other}`\n\n{USAGE}");
                return ExitCode::from(1);
            }
        }
    }
    let Some(config_path) = config_path else {
        eprintln!("missing --config <path>\n\n{USAGE}");
        return ExitCode::from(1);
    };

    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config_path.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    match run(&cfg, command, out_dir.as_deref()) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.numerical_notes.is_empty() {
                ExitCode::SUCCESS
            } else {
                for note in &outcome.numerical_notes {
                    eprintln!("note: {note}");
                }
                ExitCode::from(2)
            }
        }
        Err(CliError::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
    }
}
