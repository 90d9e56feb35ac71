//! Command line interface.
//!
//! Subcommands map one-to-one onto experiments; flags override values
//! from an optional TOML config file; the resolved config is printed
//! before the run. Exit status: 0 on success, 1 on validation errors,
//! 2 on numerical-quality failures.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::experiments;

#[derive(Parser, Debug)]
#[command(
    name = "btm",
    version,
    about = "Bouchaud trap model with slowly varying traps: landscapes, localisation sets, \
             exact quenched laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit trap samples and the sampler's tail diagnostics.
    Sample(RunArgs),
    /// Record skeletons: positions, depths, gaps, location brackets.
    Records(RunArgs),
    /// Streaming sum/max ratio scans across seeds.
    #[command(name = "sum-max")]
    SumMax(RunArgs),
    /// Localisation-set snapshots over a time grid.
    Localise(RunArgs),
    /// Exact mass profiles (favoured site, set mass) over a time grid.
    Quenched(RunArgs),
    /// Favoured-site trajectory with detected relocalisation times.
    Favoured(RunArgs),
    /// Relocalisation audit of the extra-site sets.
    Audit(RunArgs),
    /// Balanced localisation on hand-planted favourable instances.
    Balanced(RunArgs),
    /// Numerical checks of the standing assumptions.
    #[command(name = "check-assumptions")]
    CheckAssumptions(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Tail model spec: stretched-log:<g>, log:<g> or double-log:<g>.
    #[arg(long)]
    model: Option<String>,
    /// Aux function spec: "default" or "floor:<h0>".
    #[arg(long)]
    aux: Option<String>,
    /// Base landscape seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<u32>,
    /// Scan length / position cap (accepts scientific notation).
    #[arg(long)]
    imax: Option<f64>,
    #[arg(long)]
    tmin: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of log-spaced grid points.
    #[arg(long)]
    tsteps: Option<u32>,
    #[arg(long)]
    nmin: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    eps3: Option<f64>,
    #[arg(long)]
    eps4: Option<f64>,
    #[arg(long)]
    eps5: Option<f64>,
    #[arg(long)]
    eps6: Option<f64>,
    #[arg(long)]
    eps7: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 = library default; BTM_THREADS also honoured).
    #[arg(long)]
    threads: Option<usize>,
    /// TOML config file; explicit flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let mut from_file = ExperimentConfig::from_toml_file(path)?;
                from_file.experiment = kind;
                from_file
            }
            None => ExperimentConfig::new(kind),
        };
        if let Some(v) = &self.model {
            cfg.model = v.clone();
        }
        if let Some(v) = &self.aux {
            cfg.aux = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.base_seed = v;
        }
        if let Some(v) = self.seeds {
            cfg.seeds = v;
        }
        if let Some(v) = self.imax {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(Error::Config(format!("--imax must be at least 1, got {v}")));
            }
            cfg.i_max = v as u64;
        }
        if let Some(v) = self.tmin {
            cfg.t_min = v;
        }
        if let Some(v) = self.tmax {
            cfg.t_max = v;
        }
        if let Some(v) = self.tsteps {
            cfg.t_steps = v;
        }
        if let Some(v) = self.nmin {
            cfg.n_min = v;
        }
        if let Some(v) = self.nmax {
            cfg.n_max = v;
        }
        for (slot, value) in [
            self.eps0, self.eps1, self.eps2, self.eps3, self.eps4, self.eps5, self.eps6,
            self.eps7,
        ]
        .into_iter()
        .enumerate()
        {
            if let Some(v) = value {
                cfg.eps[slot] = v;
            }
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = &self.format {
            cfg.format = v.parse()?;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        } else if let Ok(env) = std::env::var("BTM_THREADS") {
            cfg.threads = env
                .parse()
                .map_err(|_| Error::Config(format!("BTM_THREADS must be a number, got {env:?}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) => 1,
        _ => 2,
    }
}

/// Runs the CLI on the given arguments (the first being the program
/// name) and returns the process exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through this path too; those are
            // successes, not usage errors.
            use clap::error::ErrorKind;
            let benign =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if benign { 0 } else { 1 };
        }
    };
    let (kind, args) = match &cli.command {
        Command::Sample(a) => (ExperimentKind::Sample, a),
        Command::Records(a) => (ExperimentKind::Records, a),
        Command::SumMax(a) => (ExperimentKind::SumMax, a),
        Command::Localise(a) => (ExperimentKind::Localise, a),
        Command::Quenched(a) => (ExperimentKind::Quenched, a),
        Command::Favoured(a) => (ExperimentKind::Favoured, a),
        Command::Audit(a) => (ExperimentKind::Audit, a),
        Command::Balanced(a) => (ExperimentKind::Balanced, a),
        Command::CheckAssumptions(a) => (ExperimentKind::CheckAssumptions, a),
    };
    let config = match args.resolve(kind) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    eprintln!(
        "resolved config: {}",
        serde_json::to_string(&config).expect("config serializes")
    );
    match experiments::run(&config) {
        Ok(result) => {
            if !result.provenance.errors.is_empty() {
                eprintln!(
                    "{} seed-level error(s) recorded in provenance",
                    result.provenance.errors.len()
                );
            }
            match &config.out {
                Some(path) => {
                    if let Err(e) = result.write_to(path, config.format) {
                        eprintln!("error: {e}");
                        return exit_code_for(&e);
                    }
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{}", result.rendered(config.format)),
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
