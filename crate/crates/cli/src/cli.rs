//! Command-line surface: `solve`, `trace`, `phase` and `rate`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentKind, ExperimentSpec, GridScale, ModelKind};
use crate::error::Result;
use crate::experiment::{phase_csv, rate_csv, run_convergence, run_phase_transition, run_single, run_stat_rate, trace_csv};
use crate::io::{save_matrix, write_file};

pub const OUT_DIR_ENV: &str = "LRSPARSE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "lrsparse", version, about = "Low-rank plus sparse matrix recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one planted instance, or a user matrix given with --input.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the recovered low-rank matrix here (.csv for text).
        #[arg(long)]
        save_lowrank: Option<PathBuf>,
        /// Write the recovered sparse matrix here (.csv for text).
        #[arg(long)]
        save_sparse: Option<PathBuf>,
    },
    /// Per-iteration traces of several planted trials.
    Trace {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Success fraction over a grid of n or p values.
    Phase {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Mean squared relative error over a grid of n or p values.
    Rate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML file with [experiment], [solver] and [init] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for outputs without an explicit --output.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// One flag per spec field; any flag given wins over the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub d1: Option<usize>,
    #[arg(long)]
    pub d2: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub s_count: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// n for sensing, p for rpca_partial.
    #[arg(long)]
    pub samples: Option<f64>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub grid_scale: Option<GridScale>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,

    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma_prime: Option<f64>,
    #[arg(long)]
    pub eta_coeff: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    #[arg(long)]
    pub eta_prime: Option<f64>,
    #[arg(long)]
    pub tau_prime: Option<f64>,
    #[arg(long)]
    pub init_iters: Option<usize>,
    #[arg(long)]
    pub zeta_coeff: Option<f64>,
    #[arg(long)]
    pub kappa_hint: Option<f64>,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
    ($dst:expr, some $src:expr) => {
        if $src.is_some() {
            $dst = $src;
        }
    };
}

impl Overrides {
    pub fn apply(self, spec: &mut ExperimentSpec) {
        let e = &mut spec.experiment;
        set!(e.model, self.model);
        set!(e.d1, self.d1);
        set!(e.d2, self.d2);
        set!(e.rank, self.rank);
        set!(e.beta, self.beta);
        set!(e.s_count, some self.s_count);
        set!(e.amplitude, some self.amplitude);
        set!(e.samples, some self.samples);
        set!(e.grid, self.grid);
        set!(e.grid_scale, self.grid_scale);
        set!(e.trials, self.trials);
        set!(e.noise, self.noise);
        set!(e.seed, self.seed);
        set!(e.threads, self.threads);
        set!(e.input, some self.input);
        set!(e.output, some self.output);
        e.timing |= self.timing;

        let s = &mut spec.solver;
        set!(s.alpha, some self.alpha);
        set!(s.gamma, some self.gamma);
        set!(s.gamma_prime, some self.gamma_prime);
        set!(s.eta_coeff, some self.eta_coeff);
        set!(s.tau, some self.tau);
        set!(s.max_iters, some self.max_iters);
        set!(s.tol, some self.tol);

        let i = &mut spec.init;
        set!(i.lambda, some self.lambda);
        set!(i.lambda_prime, some self.lambda_prime);
        set!(i.eta_prime, some self.eta_prime);
        set!(i.tau_prime, some self.tau_prime);
        set!(i.iters, some self.init_iters);
        set!(i.zeta_coeff, some self.zeta_coeff);
        set!(i.kappa_hint, some self.kappa_hint);
    }
}

impl CommonArgs {
    fn resolve(self, kind: ExperimentKind) -> Result<(ExperimentSpec, PathBuf)> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        spec.experiment.kind = kind;
        self.overrides.apply(&mut spec);
        spec.validate()?;
        let default_name = match kind {
            ExperimentKind::Single => "trace.csv",
            ExperimentKind::Convergence => "convergence.csv",
            ExperimentKind::PhaseTransition => "phase_transition.csv",
            ExperimentKind::StatRate => "stat_rate.csv",
        };
        let output = spec
            .experiment
            .output
            .clone()
            .unwrap_or_else(|| self.out_dir.join(default_name));
        Ok((spec, output))
    }
}

fn emit(path: &Path, csv: &str) -> Result<()> {
    write_file(path, csv.as_bytes())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            common,
            save_lowrank,
            save_sparse,
        } => {
            let (spec, output) = common.resolve(ExperimentKind::Single)?;
            let (outcome, solution) = run_single(&spec)?;
            emit(&output, &trace_csv(&spec, std::slice::from_ref(&outcome), false))?;
            if let Some(sol) = &solution {
                if let Some(path) = &save_lowrank {
                    save_matrix(path, &sol.x_hat)?;
                }
                if let Some(path) = &save_sparse {
                    save_matrix(path, &sol.sparse)?;
                }
            }
            println!("{}", outcome.summary_line());
            if outcome.failure.is_some() {
                return Err(lrsparse::Error::Numerical("solver diverged".into()).into());
            }
        }
        Command::Trace { common } => {
            let (spec, output) = common.resolve(ExperimentKind::Convergence)?;
            let outcomes = run_convergence(&spec)?;
            emit(&output, &trace_csv(&spec, &outcomes, true))?;
            for (t, o) in outcomes.iter().enumerate() {
                println!("trial {t}: {}", o.summary_line());
            }
        }
        Command::Phase { common } => {
            let (spec, output) = common.resolve(ExperimentKind::PhaseTransition)?;
            let points = run_phase_transition(&spec)?;
            let csv = phase_csv(&spec, &points);
            emit(&output, &csv)?;
            csv.lines().skip(1).for_each(|l| println!("{l}"));
        }
        Command::Rate { common } => {
            let (spec, output) = common.resolve(ExperimentKind::StatRate)?;
            let points = run_stat_rate(&spec)?;
            let csv = rate_csv(&spec, &points);
            emit(&output, &csv)?;
            csv.lines().skip(1).for_each(|l| println!("{l}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_win_over_the_file() {
        let mut spec = ExperimentSpec::from_toml_str("[experiment]\nrank = 4\nseed = 7\n[solver]\ntau = 0.3\n").unwrap();
        let cli = Cli::try_parse_from(["lrsparse", "solve", "--rank", "2", "--tau", "0.4", "--grid", "1,2.5"]).unwrap();
        let Command::Solve { common, .. } = cli.command else { panic!() };
        common.overrides.apply(&mut spec);
        assert_eq!(spec.experiment.rank, 2);
        assert_eq!(spec.experiment.seed, 7);
        assert_eq!(spec.solver.tau, Some(0.4));
        assert_eq!(spec.experiment.grid, vec![1.0, 2.5]);
    }
}
