//! Dense symmetric eigensolvers and Hermitian matrix functions.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a real symmetric matrix, values ascending, vectors stored
/// column-major (`vectors[i + n * k]` is component `i` of vector `k`).
#[derive(Debug, Clone)]
pub(crate) struct SymEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

fn to_mat(a: &[f64], n: usize) -> Mat<f64> {
    assert_eq!(a.len(), n * n);
    Mat::from_fn(n, n, |i, j| a[i + n * j])
}

pub(crate) fn sym_eigen(a: &[f64], n: usize) -> Result<SymEigen> {
    if n == 0 {
        return Ok(SymEigen {
            n,
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let m = to_mat(a, n);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).map(|k| s[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            vectors[i + n * k] = u[(i, k)];
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(SymEigen { n, values, vectors })
}

pub(crate) fn sym_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let values = to_mat(a, n)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(values)
}

/// Apply `g` to the eigenvalues of a Hermitian `j x j` matrix (row-major).
///
/// Works on the real symmetric embedding `[[A, -B], [B, A]]` of `A + iB`,
/// whose spectrum is that of the Hermitian matrix with every value doubled.
/// Returns `g(S)` and the smallest eigenvalue of `S`.
pub(crate) fn hermitian_function(s: &[Complex64], j: usize, g: impl Fn(f64) -> f64) -> Result<(Vec<Complex64>, f64)> {
    assert_eq!(s.len(), j * j);
    let n = 2 * j;
    let mut m = vec![0.0; n * n];
    for r in 0..j {
        for c in 0..j {
            let z = s[r * j + c];
            m[r + n * c] = z.re;
            m[(r + j) + n * (c + j)] = z.re;
            m[(r + j) + n * c] = z.im;
            m[r + n * (c + j)] = -z.im;
        }
    }
    let evd = sym_eigen(&m, n)?;
    let min = evd.values.first().copied().unwrap_or(f64::INFINITY);
    let gv: Vec<f64> = evd.values.iter().map(|&v| g(v)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); j * j];
    for r in 0..j {
        for c in 0..j {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &w) in gv.iter().enumerate() {
                let v = evd.vector(k);
                re += w * v[r] * v[c];
                im += w * v[r + j] * v[c];
            }
            out[r * j + c] = Complex64::new(re, im);
        }
    }
    Ok((out, min))
}
