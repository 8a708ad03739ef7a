//! `ebh`: parameter sweeps of the extended Bose-Hubbard model.
//!
//! The rayon pool honours `RAYON_NUM_THREADS`.

mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use ebh_core::model::ModelParams;
use ebh_core::solver::SolverOptions;
use ebh_core::sweep::{self, recipes, Axis, Observables, QMode, SweepSpec};

use config::{suffixed, Overrides};

#[derive(Parser)]
#[command(
    name = "ebh",
    version,
    about = "Exact-diagonalization sweeps with the collective-entanglement witness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mott insulator to CDW: U_LR/U from 0 to 1.2 at J = 0 (j_epsilon = 1e-6).
    Fig1(Overrides),
    /// Mott insulator to superfluid: 2J/U from 0 to 3 at U_LR = 0.
    Fig2(Overrides),
    /// Hopping sweeps at U_LR/U = 0, 0.1, 0.2 (--ULR is ignored). With --out,
    /// one file per U_LR.
    Fig3(Overrides),
    /// Generic sweep; requires --axis and --values.
    Sweep(Overrides),
}

fn generic_spec() -> SweepSpec {
    SweepSpec {
        fixed: ModelParams::default(),
        axis: Axis::Hopping,
        values: Vec::new(),
        observables: Observables {
            gap: false,
            ..Observables::ALL
        },
        q_mode: QMode::Zero,
        cut: None,
        solver: SolverOptions::default(),
    }
}

fn run_one(over: &Overrides, base: SweepSpec) -> Result<()> {
    let r = over.resolve(base)?;
    let rows = sweep::run_sweep(&r.spec)?;
    sweep::emit(r.spec.axis, &rows, r.format, r.out.as_deref())?;
    if let Some(p) = &r.out {
        eprintln!("wrote {} rows to {}", rows.len(), p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fig1(o) => run_one(&o, recipes::fig1()),
        Command::Fig2(o) => run_one(&o, recipes::fig2()),
        Command::Sweep(o) => {
            if o.values.is_none() && o.config.is_none() {
                anyhow::bail!("sweep needs --values (or a config file providing values)");
            }
            run_one(&o, generic_spec())
        }
        Command::Fig3(o) => {
            for u in recipes::FIG3_LONG_RANGE {
                let mut per = o.clone();
                per.long_range = Some(u);
                if let Some(out) = &o.out {
                    per.out = Some(suffixed(out, &format!("ULR{u}")));
                }
                run_one(&per, recipes::fig3_at(u))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
