//! Kernel evaluation under the bias-absorption convention.
//!
//! Samples are implicitly augmented with a constant coordinate, so every
//! kernel carries a `+ 1` term: exact for the linear case, and an implicit
//! bias degree of freedom for RBF (where the augmentation cancels inside the
//! norm).

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    /// `exp(-sigma * ||a - b||^2) + 1`
    Rbf { sigma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Rbf { sigma } = self {
            if !(*sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidParam(format!("sigma must be > 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// Kernel value of two samples, augmentation included.
pub fn kernel_eval(a: ArrayView1<f64>, b: ArrayView1<f64>, spec: &KernelSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(match spec {
        KernelSpec::Linear => a.dot(&b) + 1.0,
        KernelSpec::Rbf { sigma } => {
            let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            (-sigma * sq).exp() + 1.0
        }
    })
}

/// Dense Gram matrix, exactly symmetric by construction.
pub fn gram_matrix(x: ArrayView2<f64>, spec: &KernelSpec) -> Result<Array2<f64>> {
    let n = x.nrows();
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval(x.row(i), x.row(j), spec)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}
