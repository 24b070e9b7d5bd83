//! Small dense helpers over row-major `f64` buffers.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Result};

fn to_matrix(flat: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, flat)
}

/// Eigen-decomposition of a symmetric nonnegative-definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct PsdMatrix {
    pub dim: usize,
    pub flat: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, row-major flattening.
    eigenvectors: Vec<f64>,
}

impl PsdMatrix {
    pub fn new(flat: &[f64], d: usize, what: &'static str) -> Result<Self> {
        if flat.len() != d * d {
            return Err(invalid(what, "matrix must be d x d"));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(invalid(what, "matrix entries must be finite"));
        }
        let scale = flat.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (flat[i * d + j] - flat[j * d + i]).abs() > 1e-12 * scale {
                    return Err(invalid(what, "matrix must be symmetric"));
                }
            }
        }
        let eig = SymmetricEigen::new(to_matrix(flat, d));
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        for ev in &mut eigenvalues {
            if *ev < -1e-10 * scale {
                return Err(invalid(what, "matrix must be nonnegative definite"));
            }
            *ev = ev.max(0.0);
        }
        let mut eigenvectors = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                eigenvectors.push(eig.eigenvectors[(i, j)]);
            }
        }
        Ok(Self {
            dim: d,
            flat: flat.to_vec(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn op_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn is_zero(&self) -> bool {
        self.flat.iter().all(|v| *v == 0.0)
    }

    /// Symmetric square root, row-major.
    pub fn sqrt(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = alloc::vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = (0..d)
                    .map(|k| {
                        self.eigenvectors[i * d + k]
                            * self.eigenvalues[k].sqrt()
                            * self.eigenvectors[j * d + k]
                    })
                    .sum();
            }
        }
        out
    }

    /// `<z, M z>`.
    pub fn quad(&self, z: &[f64]) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| z[i] * (0..d).map(|j| self.flat[i * d + j] * z[j]).sum::<f64>())
            .sum()
    }

    /// `<z, M^+ z>`, or `None` when `z` has a component in the kernel.
    pub fn inverse_quad(&self, z: &[f64]) -> Option<f64> {
        let d = self.dim;
        let top = self.op_norm();
        let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut total = 0.0;
        for k in 0..d {
            let proj: f64 = (0..d).map(|i| self.eigenvectors[i * d + k] * z[i]).sum();
            let ev = self.eigenvalues[k];
            if ev <= 1e-12 * top.max(f64::MIN_POSITIVE) {
                if proj.abs() > 1e-10 * znorm.max(1.0) {
                    return None;
                }
            } else {
                total += proj * proj / ev;
            }
        }
        Some(total)
    }
}

/// Solves `(h + mu I) x = rhs` for symmetric nonnegative-definite `h`.
pub(crate) fn solve_damped(h: &[f64], rhs: &[f64], mu: f64) -> Option<Vec<f64>> {
    let d = rhs.len();
    if d == 1 {
        let den = h[0] + mu;
        return (den > 0.0).then(|| alloc::vec![rhs[0] / den]);
    }
    let mut m = to_matrix(h, d);
    for i in 0..d {
        m[(i, i)] += mu;
    }
    let chol = m.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Some(x.iter().copied().collect())
}
