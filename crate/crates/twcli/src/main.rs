use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use twcli::{exit, exit_code, parse_config_with, run, Command, Overrides, RunError};

/// t-W scheme laboratory for the XXX chain.
#[derive(Parser, Debug)]
#[command(name = "twlab", version)]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated chain sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    quiet: bool,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return code(if e.use_stderr() { exit::CONFIG_ERROR } else { exit::SUCCESS });
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("twlab: cannot read {}: {e}", cli.config.display());
            return code(exit::CONFIG_ERROR);
        }
    };
    let overrides = Overrides { command: Some(cli.command), output_dir: cli.out.clone(), sweep: cli.n.clone() };
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("twlab: {e}");
            return code(exit::CONFIG_ERROR);
        }
    };
    if !cli.quiet {
        for w in &cfg.warnings {
            eprintln!("twlab: warning: {w}");
        }
    }
    let bundle = match run(&cfg) {
        Ok(b) => b,
        Err(RunError::Config(e)) => {
            eprintln!("twlab: {e}");
            return code(exit::CONFIG_ERROR);
        }
        Err(e) => {
            eprintln!("twlab: {e}");
            return code(exit::FAILURE);
        }
    };
    if let Err(e) = bundle.write(&cfg.output_dir) {
        eprintln!("twlab: cannot write {}: {e}", cfg.output_dir.display());
        return code(exit::FAILURE);
    }
    let status = exit_code(&bundle);
    if !cli.quiet {
        for c in &bundle.checks {
            println!("{} {} residual={:.3e} threshold={:.3e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.residual, c.threshold);
        }
        for e in &bundle.errors {
            println!("ERROR {e}");
        }
        println!("wrote {} (exit {status})", cfg.output_dir.display());
    }
    code(status)
}
