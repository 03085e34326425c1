//! Nonnegatively-constrained quadratic programs `min 1/2 u'Hu - q'u, u >= 0`
//! and the clipping dual coordinate descent (clipDCD) solver.
//!
//! For the weighted dual assembled from a Gram matrix, `H` is never stored
//! densely: columns of the `2n x 2n` block matrix are synthesized on demand
//! from the cached `n x n` Gram, the labels, and the sample weights.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Termination threshold on the maximal per-coordinate objective gain,
    /// relative to `1 + |objective|`.
    pub inner_tol: f64,
    /// Iteration cap; `None` means `5000 * dim`.
    pub max_inner_iters: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { inner_tol: 1e-8, max_inner_iters: None }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidParam(format!(
                "inner_tol must be > 0, got {}",
                self.inner_tol
            )));
        }
        if self.max_inner_iters == Some(0) {
            return Err(Error::InvalidParam("max_inner_iters must be >= 1".into()));
        }
        Ok(())
    }
}

enum Repr {
    /// Explicit symmetric matrix, used for small problems and tests.
    Dense { h: Array2<f64> },
    /// Two-block weighted dual: `Q = [[Khat,-Khat],[-Khat,Khat]]`
    /// plus the diagonal weight coupling; `dim = 2n`.
    Paired { khat: Array2<f64>, inv_pw: Vec<f64>, tau: f64 },
    /// `tau = 0` limit: the asymmetric constraint collapses to `xi >= 0`,
    /// whose multiplier couples only through the weight diagonal:
    /// `H = [[Khat + M, M], [M, M]]` with `M = diag(inv_pw)`; `dim = 2n`.
    HingeLimit { khat: Array2<f64>, inv_pw: Vec<f64> },
}

/// The standard QP `min 1/2 u'Hu - q'u` subject to `u >= 0`.
pub struct NonnegQp {
    repr: Repr,
    q: Vec<f64>,
    diag: Vec<f64>,
}

impl NonnegQp {
    /// Build from an explicit symmetric `H` with strictly positive diagonal.
    pub fn from_dense(h: Array2<f64>, q: Vec<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.len() });
        }
        let diag: Vec<f64> = (0..n).map(|i| h[(i, i)]).collect();
        if diag.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::InvalidParam("H must have strictly positive diagonal".into()));
        }
        Ok(Self { repr: Repr::Dense { h }, q, diag })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `out += scale * H[:, k]`.
    pub fn add_scaled_col(&self, k: usize, scale: f64, out: &mut [f64]) {
        match &self.repr {
            Repr::Dense { h } => {
                for (o, &v) in out.iter_mut().zip(h.column(k).iter()) {
                    *o += scale * v;
                }
            }
            Repr::Paired { khat, inv_pw, tau } => {
                let n = khat.nrows();
                let (b, i) = (k / n, k % n);
                let col = khat.column(i);
                if b == 0 {
                    for j in 0..n {
                        out[j] += scale * col[j];
                        out[n + j] -= scale * col[j];
                    }
                } else {
                    for j in 0..n {
                        out[j] -= scale * col[j];
                        out[n + j] += scale * col[j];
                    }
                }
                // S/p couples (alpha_i, beta_i) through 1/(p w_i tau^{a+b})
                let base = inv_pw[i];
                if b == 0 {
                    out[i] += scale * base;
                    out[n + i] += scale * base / tau;
                } else {
                    out[i] += scale * base / tau;
                    out[n + i] += scale * base / (tau * tau);
                }
            }
            Repr::HingeLimit { khat, inv_pw } => {
                let n = khat.nrows();
                let (b, i) = (k / n, k % n);
                if b == 0 {
                    let col = khat.column(i);
                    for j in 0..n {
                        out[j] += scale * col[j];
                    }
                }
                let coupling = scale * inv_pw[i];
                out[i] += coupling;
                out[n + i] += coupling;
            }
        }
    }

    /// Materialize `H` densely (small problems and oracles only).
    pub fn h_dense(&self) -> Array2<f64> {
        let dim = self.dim();
        let mut h = Array2::zeros((dim, dim));
        let mut col = vec![0.0; dim];
        for k in 0..dim {
            col.iter_mut().for_each(|v| *v = 0.0);
            self.add_scaled_col(k, 1.0, &mut col);
            for j in 0..dim {
                h[(j, k)] = col[j];
            }
        }
        h
    }

    /// Objective `1/2 u'Hu - q'u`.
    pub fn objective(&self, u: &[f64]) -> f64 {
        let hu = self.h_times(u);
        0.5 * dot(u, &hu) - dot(&self.q, u)
    }

    fn h_times(&self, u: &[f64]) -> Vec<f64> {
        let mut hu = vec![0.0; self.dim()];
        for (k, &uk) in u.iter().enumerate() {
            if uk != 0.0 {
                self.add_scaled_col(k, uk, &mut hu);
            }
        }
        hu
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Assemble the weighted AEN dual as a standard nonnegative QP.
///
/// For `tau > 0` the problem has `2n` variables `(alpha; beta)`; at `tau = 0`
/// the beta block is forced to zero and the reduced `n`-variable problem is
/// returned.
pub fn assemble_dual(
    gram: ArrayView2<f64>,
    y: &[f64],
    omega: &[f64],
    p: f64,
    tau: f64,
) -> Result<NonnegQp> {
    let n = gram.nrows();
    if gram.ncols() != n || y.len() != n || omega.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len().min(omega.len()) });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParam(format!("p must be in (0,1], got {p}")));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParam(format!("tau must be in [0,1], got {tau}")));
    }
    if omega.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParam("weights must be strictly positive".into()));
    }
    let khat = Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * gram[(i, j)]);
    let inv_pw: Vec<f64> = omega.iter().map(|&w| 1.0 / (p * w)).collect();
    let lin = (1.0 - p) / p;
    if tau > 0.0 {
        let mut q = Vec::with_capacity(2 * n);
        q.extend(std::iter::repeat_n(1.0 + lin, n));
        q.extend(std::iter::repeat_n(-1.0 + lin / tau, n));
        let mut diag = Vec::with_capacity(2 * n);
        for i in 0..n {
            diag.push(khat[(i, i)] + inv_pw[i]);
        }
        for i in 0..n {
            diag.push(khat[(i, i)] + inv_pw[i] / (tau * tau));
        }
        Ok(NonnegQp { repr: Repr::Paired { khat, inv_pw, tau }, q, diag })
    } else {
        // tau = 0: the asymmetric constraint degenerates to xi >= 0, whose
        // multiplier shares only the weight-diagonal coupling with alpha
        let mut q = Vec::with_capacity(2 * n);
        q.extend(std::iter::repeat_n(1.0 + lin, n));
        q.extend(std::iter::repeat_n(lin, n));
        let mut diag = Vec::with_capacity(2 * n);
        for i in 0..n {
            diag.push(khat[(i, i)] + inv_pw[i]);
        }
        diag.extend(inv_pw.iter().copied());
        Ok(NonnegQp { repr: Repr::HingeLimit { khat, inv_pw }, q, diag })
    }
}

/// Outcome of a clipDCD run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub u: Vec<f64>,
    /// Coordinate updates actually applied.
    pub updates: usize,
    /// Scan iterations performed (including the terminating scan).
    pub iterations: usize,
    /// False when the iteration cap stopped the run.
    pub converged: bool,
}

/// Greedy clipping dual coordinate descent.
///
/// Each step picks the coordinate with maximal objective gain
/// `(q_k - (Hu)_k)^2 / H_kk` among those that can move, applies the clipped
/// update `u_k <- max(0, u_k + (q_k - (Hu)_k)/H_kk)`, and maintains `Hu`
/// incrementally. Ties break to the lowest index.
pub fn solve_clipdcd(
    qp: &NonnegQp,
    config: &SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<SolveOutcome> {
    config.validate()?;
    let dim = qp.dim();
    let max_iters = config.max_inner_iters.unwrap_or(5000 * dim);
    let mut u = match warm_start {
        Some(w) => {
            if w.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: w.len() });
            }
            if w.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParam("warm start must be nonnegative".into()));
            }
            w.to_vec()
        }
        None => vec![0.0; dim],
    };
    let mut hu = qp.h_times(&u);
    let q = qp.q();
    let diag = qp.diag();
    let mut obj = 0.5 * dot(&u, &hu) - dot(q, &u);
    let mut updates = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..dim {
            let g = hu[k] - q[k];
            let movable = g < 0.0 || (g > 0.0 && u[k] > 0.0);
            if !movable {
                continue;
            }
            let gain = g * g / diag[k];
            match best {
                Some((_, bg)) if gain <= bg => {}
                _ => best = Some((k, gain)),
            }
        }
        let (k, gain) = match best {
            Some(b) => b,
            None => {
                converged = true;
                break;
            }
        };
        if gain <= config.inner_tol * (1.0 + obj.abs()) {
            converged = true;
            break;
        }
        let step = (q[k] - hu[k]) / diag[k];
        let new = (u[k] + step).max(0.0);
        let d = new - u[k];
        if d == 0.0 {
            converged = true;
            break;
        }
        obj += d * (hu[k] - q[k]) + 0.5 * d * d * diag[k];
        u[k] = new;
        qp.add_scaled_col(k, d, &mut hu);
        updates += 1;
        if updates % 10_000 == 0 {
            // periodic refresh against incremental drift
            hu = qp.h_times(&u);
            obj = 0.5 * dot(&u, &hu) - dot(q, &u);
        }
    }
    Ok(SolveOutcome { u, updates, iterations, converged })
}

/// KKT residual for `min 1/2 u'Hu - q'u, u >= 0`: with `g = Hu - q`, the
/// worst of dual infeasibility `max(0, -g_k)` and complementarity
/// `|min(u_k, g_k)|` over all coordinates. Zero iff `u` is exactly optimal.
pub fn kkt_residual(qp: &NonnegQp, u: &[f64]) -> Result<f64> {
    if u.len() != qp.dim() {
        return Err(Error::DimensionMismatch { expected: qp.dim(), found: u.len() });
    }
    let hu = qp.h_times(u);
    let mut worst: f64 = 0.0;
    for k in 0..qp.dim() {
        let g = hu[k] - qp.q()[k];
        worst = worst.max((-g).max(0.0)).max(u[k].min(g).abs());
    }
    Ok(worst)
}

/// Gradient `Hu - q`, used by callers that track optimality themselves.
pub fn gradient(qp: &NonnegQp, u: &[f64]) -> Vec<f64> {
    let hu = qp.h_times(u);
    hu.iter().zip(qp.q()).map(|(h, q)| h - q).collect()
}
