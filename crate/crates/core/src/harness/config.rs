//! Run configuration, read from TOML.
//!
//! Only `n`, `lambda`, `alpha` and `casimir` are required; every other key
//! has the default given on its field. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::casimir::CasimirFunction;
use crate::dynamics::EvolutionConfig;
use crate::error::{Error, Result};
use crate::model::{Alpha, Coupling};
use crate::stationary::ScfConfig;
use crate::torus::{Convention, TorusGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Lattice bound `N` of the Galerkin basis `[-N, N]^3`.
    pub n: usize,
    /// Total occupation `Lambda`.
    pub lambda: f64,
    pub alpha: Alpha,
    pub casimir: CasimirFunction,
    /// `(1, 1, 1)`.
    #[serde(default)]
    pub theta: TorusGeometry,
    /// `standard`.
    #[serde(default)]
    pub convention: Convention,
    /// `nlss-out`.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub scf: ScfSettings,
    #[serde(default)]
    pub evolution: EvolutionSettings,
    #[serde(default)]
    pub perturbation: PerturbationSettings,
    #[serde(default)]
    pub stability: StabilitySettings,
    #[serde(default)]
    pub certify: CertifySettings,
    #[serde(default)]
    pub validate: ValidateSettings,
}

fn default_out() -> PathBuf {
    PathBuf::from("nlss-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfSettings {
    /// 0.5
    pub mixing: f64,
    /// 0 (plain linear mixing)
    pub anderson_depth: usize,
    /// 1e-10
    pub tol_v: f64,
    /// 1e-10
    pub tol_lambda: f64,
    /// 200
    pub max_iter: usize,
    /// 1e-12
    pub lambda_tol: f64,
    /// full basis for `n <= 8`, else 2000
    pub k_max: Option<usize>,
}

impl Default for ScfSettings {
    fn default() -> Self {
        Self {
            mixing: 0.5,
            anderson_depth: 0,
            tol_v: 1e-10,
            tol_lambda: 1e-10,
            max_iter: 200,
            lambda_tol: 1e-12,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSettings {
    /// 1e-3
    pub dt: f64,
    /// 1000
    pub steps: usize,
    /// +1 (defocusing)
    pub sign: Coupling,
    /// 10
    pub cadence: usize,
    /// `alpha + 1`
    pub padding_ratio: Option<usize>,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 1000,
            sign: Coupling::Defocusing,
            cadence: 10,
            padding_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSettings {
    /// 1e-3
    pub amplitude: f64,
    /// 2
    pub band: u64,
    /// 0
    pub seed: u64,
}

impl Default for PerturbationSettings {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            band: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySettings {
    /// 1.0
    pub horizon: f64,
    /// 100
    pub samples: usize,
}

impl Default for StabilitySettings {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            samples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySettings {
    /// 4
    pub p: f64,
    /// 50
    pub samples: usize,
    /// [4, 8, 16]
    pub linear_n: Vec<usize>,
    /// 10
    pub bilinear_samples: usize,
    /// [1, 4, 16]
    pub bilinear_n: Vec<usize>,
    /// 256
    pub time_nodes: usize,
    /// 0
    pub seed: u64,
}

impl Default for CertifySettings {
    fn default() -> Self {
        Self {
            p: 4.0,
            samples: 50,
            linear_n: vec![4, 8, 16],
            bilinear_samples: 10,
            bilinear_n: vec![1, 4, 16],
            time_nodes: 256,
            seed: 0,
        }
    }
}

/// What the validation suite injects, for checking that it can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Negate `F*` everywhere.
    FlipDualSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSettings {
    /// Lattice bound of the eigensolver-based families; 3.
    pub n: usize,
    /// Random states per family; 20.
    pub samples: usize,
    /// Random potentials for the trace family; 3.
    pub potentials: usize,
    /// 0
    pub seed: u64,
    /// none
    pub inject: Option<Fault>,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        Self {
            n: 3,
            samples: 20,
            potentials: 3,
            seed: 0,
            inject: None,
        }
    }
}

impl RunConfig {
    /// Defaults around the four required keys.
    pub fn new(n: usize, lambda: f64, alpha: Alpha, casimir: CasimirFunction) -> Self {
        Self {
            n,
            lambda,
            alpha,
            casimir,
            theta: TorusGeometry::default(),
            convention: Convention::default(),
            out: default_out(),
            scf: ScfSettings::default(),
            evolution: EvolutionSettings::default(),
            perturbation: PerturbationSettings::default(),
            stability: StabilitySettings::default(),
            certify: CertifySettings::default(),
            validate: ValidateSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: String| Err(Error::Config(format!("{name}: {reason}")));
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("{} must be positive", self.lambda));
        }
        self.casimir
            .checked()
            .map_err(|e| Error::Config(format!("casimir: {e}")))?;
        self.scf_config()
            .validate()
            .map_err(|e| Error::Config(format!("scf: {e}")))?;
        self.evolution_config()
            .validate()
            .map_err(|e| Error::Config(format!("evolution: {e}")))?;
        let p = &self.perturbation;
        if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
            return bad("perturbation.amplitude", "must be finite and nonnegative".into());
        }
        if p.band == 0 || !p.band.is_power_of_two() {
            return bad("perturbation.band", format!("{} is not a power of two", p.band));
        }
        let s = &self.stability;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) || s.samples == 0 {
            return bad("stability", "horizon and samples must be positive".into());
        }
        let c = &self.certify;
        if !(c.p > 10.0 / 3.0) || c.samples == 0 || c.bilinear_samples == 0 || c.time_nodes < 2 {
            return bad(
                "certify",
                "needs p > 10/3, positive sample counts and at least 2 time nodes".into(),
            );
        }
        if let Some(n) = c.linear_n.iter().find(|n| !n.is_power_of_two()) {
            return bad("certify.linear_n", format!("{n} is not a power of two"));
        }
        if c.bilinear_n.contains(&0) {
            return bad("certify.bilinear_n", "entries must be positive".into());
        }
        let v = &self.validate;
        if v.n == 0 || v.samples == 0 || v.potentials == 0 {
            return bad("validate", "n, samples and potentials must be positive".into());
        }
        Ok(())
    }

    pub fn scf_config(&self) -> ScfConfig {
        let s = &self.scf;
        ScfConfig {
            k_max: s.k_max,
            mixing: s.mixing,
            anderson_depth: s.anderson_depth,
            tol_v: s.tol_v,
            tol_lambda: s.tol_lambda,
            max_iter: s.max_iter,
            lambda_tol: s.lambda_tol,
            ..ScfConfig::new(
                self.theta,
                self.convention,
                self.casimir,
                self.alpha,
                self.lambda,
                self.n,
            )
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        let e = &self.evolution;
        EvolutionConfig {
            cadence: e.cadence,
            padding_ratio: e.padding_ratio.unwrap_or(self.alpha.default_padding()),
            ..EvolutionConfig::new(e.dt, e.steps, self.alpha, e.sign)
        }
    }
}

/// Strict parse of a TOML configuration.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
