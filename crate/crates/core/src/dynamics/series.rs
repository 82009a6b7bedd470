use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::io::write_atomic;

/// Observables at one sampled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `sum_j lambda_j (||u_j||^2 + ||grad u_j||^2)`.
    pub h1_lambda_sq: f64,
    pub gram_dev: f64,
    pub energy_casimir: Option<f64>,
    /// `||rho - rho_ref||_{L^{alpha+1}}`.
    pub rho_dist: Option<f64>,
}

/// Sampled observables of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    /// Step at which the blow-up guard fired, if it did.
    pub aborted_at: Option<usize>,
}

pub const CSV_HEADER: &str = "t,mass,energy,h1_lambda_sq,gram_dev,energy_casimir,rho_dist";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// `max_t |X(t) - X(0)| / |X(0)|` for the selected column.
    pub fn relative_drift(&self, column: impl Fn(&Sample) -> f64) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let x0 = column(first);
        let scale = if x0 == 0.0 { 1.0 } else { x0.abs() };
        self.samples
            .iter()
            .map(|s| (column(s) - x0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// One row per sample, absent optional observers left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{},{}",
                s.t,
                s.mass,
                s.energy,
                s.h1_lambda_sq,
                s.gram_dev,
                opt(s.energy_casimir),
                opt(s.rho_dist)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, energy: f64) -> Sample {
        Sample {
            step: 0,
            t,
            mass: 1.0,
            energy,
            h1_lambda_sq: 2.0,
            gram_dev: 0.0,
            energy_casimir: None,
            rho_dist: Some(0.5),
        }
    }

    #[test]
    fn csv_layout() {
        let ts = TimeSeries {
            samples: vec![sample(0.0, 2.0), sample(0.5, 2.5)],
            aborted_at: None,
        };
        let csv = ts.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "5e-1,1e0,2.5e0,2e0,0e0,,5e-1");
        assert!((ts.relative_drift(|s| s.energy) - 0.25).abs() < 1e-15);
        assert_eq!(TimeSeries::default().relative_drift(|s| s.energy), 0.0);
    }
}
