use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlss::casimir::CasimirFunction;
use nlss::ensemble::load_ensemble;
use nlss::harness::runs::{
    emit_certify, emit_evolve, emit_spectrum, emit_stability, emit_stationary, emit_validate, perturbed_stationary,
    Outcome,
};
use nlss::harness::{parse_config, Fault, RunConfig};
use nlss::torus::{Convention, TorusGeometry};
use nlss::{Alpha, Coupling, Error, Result};

/// Solvers and stability checks for nonlinear Schrodinger systems on flat 3-tori.
///
/// Exit status: 0 when every check passed, 1 when a check failed or a run
/// was aborted, 2 on invalid input or a runtime error. NLSS_THREADS sets
/// the worker count; outputs do not depend on it.
#[derive(Parser)]
#[command(name = "nlss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Galerkin eigenvalues of -Delta and the Li-Yau constant.
    Spectrum(Common),
    /// Self-consistent stationary state.
    Stationary(Common),
    /// Time evolution of a perturbed stationary state or a saved ensemble.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Start from this ensemble manifest instead.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Energy-Casimir stability experiment.
    Stability(Common),
    /// Strichartz certificate sweep.
    Certify(Common),
    /// Property validation suite.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Negate F* to confirm that the suite detects it.
        #[arg(long)]
        inject_sign_flip: bool,
    },
}

/// Flags override the configuration file; without a file the base is
/// n=8, lambda=1, alpha=1 and Boltzmann beta=1.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<u8>,
    /// Use the Boltzmann family with this beta.
    #[arg(long)]
    beta: Option<f64>,
    /// Three values in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// `standard` or `paper`.
    #[arg(long)]
    convention: Option<String>,
    /// SCF tolerance for the potential and the occupation sum.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// +1 defocusing, -1 focusing.
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<i8>,
    #[arg(long)]
    cadence: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of every random draw.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    amplitude: Option<f64>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => parse_config(p)?,
            None => RunConfig::new(8, 1.0, Alpha::Cubic, CasimirFunction::boltzmann(1.0)?),
        };
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = Alpha::new(v)?;
        }
        if let Some(v) = self.beta {
            c.casimir = CasimirFunction::boltzmann(v)?;
        }
        if let Some(v) = &self.theta {
            if v.len() != 3 {
                return Err(Error::Config(format!("--theta needs 3 values, got {}", v.len())));
            }
            c.theta = TorusGeometry::new([v[0], v[1], v[2]])?;
        }
        if let Some(v) = &self.convention {
            c.convention = match v.as_str() {
                "standard" => Convention::Standard,
                "paper" => Convention::Paper,
                other => return Err(Error::Config(format!("unknown convention `{other}`"))),
            };
        }
        if let Some(v) = self.tol {
            c.scf.tol_v = v;
            c.scf.tol_lambda = v;
        }
        if let Some(v) = self.dt {
            c.evolution.dt = v;
        }
        if let Some(v) = self.steps {
            c.evolution.steps = v;
        }
        if let Some(v) = self.sign {
            c.evolution.sign = Coupling::new(v)?;
        }
        if let Some(v) = self.cadence {
            c.evolution.cadence = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.seed {
            c.perturbation.seed = v;
            c.certify.seed = v;
            c.validate.seed = v;
        }
        if let Some(v) = self.amplitude {
            c.perturbation.amplitude = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("NLSS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("NLSS_THREADS={v} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Outcome> {
    init_threads()?;
    match cli.command {
        Command::Spectrum(c) => {
            let cfg = c.resolve()?;
            emit_spectrum(&cfg, &cfg.out)
        }
        Command::Stationary(c) => {
            let cfg = c.resolve()?;
            emit_stationary(&cfg, &cfg.out)
        }
        Command::Evolve { common, from } => {
            let cfg = common.resolve()?;
            let initial = match from {
                Some(p) => load_ensemble(&p)?,
                None => perturbed_stationary(&cfg)?,
            };
            emit_evolve(&cfg, &initial, &cfg.out)
        }
        Command::Stability(c) => {
            let cfg = c.resolve()?;
            emit_stability(&cfg, &cfg.out)
        }
        Command::Certify(c) => {
            let cfg = c.resolve()?;
            emit_certify(&cfg, &cfg.out)
        }
        Command::Validate {
            common,
            inject_sign_flip,
        } => {
            let mut cfg = common.resolve()?;
            if inject_sign_flip {
                cfg.validate.inject = Some(Fault::FlipDualSign);
            }
            emit_validate(&cfg, &cfg.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            println!("{}", o.summary);
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
