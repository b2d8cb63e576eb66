//! `tdsec`: command-line front end for the trace-distance security toolkit.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 3 when an
//! iterative solve did not certify its answer (results are still printed).

mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tdsec_core::SolverOptions;

use args::{Cli, Command};

const EXIT_USAGE: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

/// Solver settings after the environment default and `--set` overrides.
fn solver_options(cli: &Cli) -> Result<SolverOptions, String> {
    let mut opts = SolverOptions::default();
    if let Some(tol) = cli.povm_tol {
        opts.tol = tol;
    }
    for item in &cli.overrides {
        let (name, value) = item.split_once('=').ok_or_else(|| format!("--set expects NAME=VALUE, got `{item}`"))?;
        match name.trim() {
            "solver.tol" => opts.tol = value.trim().parse().map_err(|e| format!("solver.tol: {e}"))?,
            "solver.max_iter" => opts.max_iter = value.trim().parse().map_err(|e| format!("solver.max_iter: {e}"))?,
            other => return Err(format!("unknown setting `{other}`; known settings: solver.tol, solver.max_iter")),
        }
    }
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(format!("solver tolerance must be positive and finite (got {})", opts.tol));
    }
    Ok(opts)
}

fn run(cli: &Cli) -> Result<u8, String> {
    let opts = solver_options(cli)?;
    let report = match &cli.command {
        Command::ComputeD(e) => commands::compute_d_cmd(&commands::load_ensemble(e, cli.seed)?),
        Command::Attack(a) => commands::attack_cmd(a, cli.seed, &opts)?,
        Command::Compare(e) => commands::compare_cmd(&commands::load_ensemble(e, cli.seed)?, &opts)?,
        Command::Bounds(b) => commands::bounds_cmd(b)?,
        Command::Reproduce => commands::reproduce_cmd()?,
        Command::Counterexample(c) => commands::counterexample_cmd(c, &opts)?,
        Command::Export(x) => {
            if let Some(json) = commands::export_cmd(x, cli.seed)? {
                print!("{json}");
            }
            return Ok(0);
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    report.render(cli.format, &mut lock).map_err(|e| format!("cannot write output: {e}"))?;
    lock.flush().map_err(|e| format!("cannot write output: {e}"))?;
    if report.unconverged {
        eprintln!("warning: the iterative solver stopped before certifying optimality; raise solver.max_iter or solver.tol");
        return Ok(EXIT_UNCONVERGED);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
