//! Model fitting via the half-quadratic outer loop over weighted dual solves,
//! plus prediction, slack recovery, and the primal objective.
//!
//! The bounded fit alternates (a) per-sample weights `w_i = C*eta*(-delta_i)`
//! from the auxiliary variable, (b) a clipDCD solve of the weighted dual warm
//! started at the previous iterate, and (c) the closed-form `delta` update.
//! Unbounded variants are a single weighted solve with uniform weights.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, kernel_eval, KernelSpec};
use crate::loss::{eval_aen, eval_baen, LossParams};
use crate::qp::{assemble_dual, kkt_residual, solve_clipdcd, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub loss: LossParams,
    pub kernel: KernelSpec,
    /// `epsilon` of the outer loop: stop when `||u_{s+1} - u_s|| < hq_tol`.
    pub hq_tol: f64,
    pub hq_max_iters: usize,
    pub solver: SolverConfig,
    /// Half-quadratic loop with the bounded loss vs a single weighted solve.
    pub bounded: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            loss: LossParams::default(),
            kernel: KernelSpec::Linear,
            hq_tol: 1e-4,
            hq_max_iters: 50,
            solver: SolverConfig::default(),
            bounded: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParam(format!("C must be > 0, got {}", self.c)));
        }
        if self.loss.p() <= 0.0 {
            return Err(Error::InvalidParam("trainer requires p in (0,1]".into()));
        }
        if self.bounded && self.loss.lambda() != 1.0 {
            return Err(Error::InvalidParam(
                "bounded training fixes lambda = 1 (absorbed into C)".into(),
            ));
        }
        if !(self.hq_tol > 0.0) {
            return Err(Error::InvalidParam("hq_tol must be > 0".into()));
        }
        if self.hq_max_iters == 0 {
            return Err(Error::InvalidParam("hq_max_iters must be >= 1".into()));
        }
        self.kernel.validate()?;
        self.solver.validate()
    }
}

/// Named model variants from the degeneracy map of the loss family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Unbounded asymmetric elastic net.
    Aen,
    /// Unbounded elastic net hinge (`tau = 0`).
    En,
    /// Bounded asymmetric elastic net (the full model).
    Baen,
    /// Bounded asymmetric least squares (`p = 1, tau = 1`).
    BalsLike,
    /// Near-pinball bounded variant (`p = 1e-3`; exact `p = 0` is not
    /// representable in the dual).
    BqApprox,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "aen" => Ok(Self::Aen),
            "en" => Ok(Self::En),
            "baen" => Ok(Self::Baen),
            "bals-like" => Ok(Self::BalsLike),
            "bq-approx" => Ok(Self::BqApprox),
            other => Err(Error::InvalidParam(format!(
                "unknown preset '{other}' (expected aen|en|baen|bals-like|bq-approx)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Aen => "aen",
            Self::En => "en",
            Self::Baen => "baen",
            Self::BalsLike => "bals-like",
            Self::BqApprox => "bq-approx",
        }
    }

    /// Apply the preset's pinned values on top of a base configuration.
    pub fn apply(&self, base: &TrainConfig) -> Result<TrainConfig> {
        let mut cfg = *base;
        let l = base.loss;
        match self {
            Self::Aen => cfg.bounded = false,
            Self::En => {
                cfg.bounded = false;
                cfg.loss = LossParams::new(l.lambda(), l.eta(), 0.0, l.p())?;
            }
            Self::Baen => cfg.bounded = true,
            Self::BalsLike => {
                cfg.bounded = true;
                cfg.loss = LossParams::new(l.lambda(), l.eta(), 1.0, 1.0)?;
            }
            Self::BqApprox => {
                cfg.bounded = true;
                cfg.loss = LossParams::new(l.lambda(), l.eta(), l.tau(), 1e-3)?;
            }
        }
        Ok(cfg)
    }

    /// Grid axes this preset actually searches over: (C, eta, tau, p, sigma).
    pub fn active_axes(&self) -> (bool, bool, bool, bool, bool) {
        match self {
            Self::Aen => (true, false, true, true, true),
            Self::En => (true, false, false, true, true),
            Self::Baen => (true, true, true, true, true),
            Self::BalsLike => (true, true, false, false, true),
            Self::BqApprox => (true, true, true, false, true),
        }
    }
}

/// Auxiliary-variable update: `-1/(1 + eta * L_aen(z))^2`, in `[-1, 0)`.
pub fn update_delta(z: f64, eta: f64, aen_params: &LossParams) -> f64 {
    let denom = 1.0 + eta * eval_aen(z, aen_params);
    -1.0 / (denom * denom)
}

/// `w_i = C * eta * (-delta_i)`, in `(0, C*eta]`.
pub fn weights_from_delta(delta: &[f64], c: f64, eta: f64) -> Result<Vec<f64>> {
    delta
        .iter()
        .map(|&d| {
            if !(-1.0..0.0).contains(&d) {
                return Err(Error::InvalidParam(format!("delta must be in [-1,0), got {d}")));
            }
            Ok(c * eta * (-d))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Outer half-quadratic iterations performed.
    pub hq_iterations: usize,
    /// `||u_{s+1} - u_s||_2` at the final outer iteration.
    pub final_step_norm: f64,
    /// KKT residual of the last inner solve.
    pub kkt_residual: f64,
    /// Primal objective after each outer iteration (leading entry is the
    /// value at the starting iterate).
    pub objective_trace: Vec<f64>,
    /// False when any inner solve hit its iteration cap.
    pub inner_converged: bool,
}

/// A trained classifier: retained training data plus dual coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub support_x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub config: TrainConfig,
    pub diagnostics: Diagnostics,
}

fn validate_labels(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Data("labels must be -1 or +1".into()));
    }
    let pos = y.iter().any(|&v| v == 1.0);
    let neg = y.iter().any(|&v| v == -1.0);
    if !(pos && neg) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Margin residuals `z_i = 1 - y_i f(x_i)` from dual coefficients and a Gram
/// matrix.
fn margins(gram: &Array2<f64>, y: &[f64], alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = y.len();
    let coef: Vec<f64> = (0..n).map(|j| y[j] * (alpha[j] - beta[j])).collect();
    (0..n)
        .map(|i| {
            let f: f64 = (0..n).map(|j| gram[(i, j)] * coef[j]).sum();
            1.0 - y[i] * f
        })
        .collect()
}

fn primal_objective_from(
    gram: &Array2<f64>,
    y: &[f64],
    alpha: &[f64],
    beta: &[f64],
    config: &TrainConfig,
) -> f64 {
    let n = y.len();
    let coef: Vec<f64> = (0..n).map(|j| y[j] * (alpha[j] - beta[j])).collect();
    let mut reg = 0.0;
    for i in 0..n {
        for j in 0..n {
            reg += coef[i] * coef[j] * gram[(i, j)];
        }
    }
    let z = margins(gram, y, alpha, beta);
    let loss_sum: f64 = z
        .iter()
        .map(|&zi| {
            if config.bounded {
                eval_baen(zi, &config.loss)
            } else {
                eval_aen(zi, &config.loss)
            }
        })
        .sum();
    0.5 * reg + config.c * loss_sum
}

struct FitState {
    u: Vec<f64>,
    delta: Vec<f64>,
    trace: Vec<f64>,
    hq_iterations: usize,
}

fn split_u(u: &[f64], n: usize, tau: f64) -> (Vec<f64>, Vec<f64>) {
    if tau > 0.0 {
        (u[..n].to_vec(), u[n..].to_vec())
    } else {
        // at tau = 0 the second block multiplies xi >= 0 and never enters
        // the decision function
        (u[..n].to_vec(), vec![0.0; n])
    }
}

/// Canonical multiplier pairs: samples sitting exactly on the margin can
/// carry positive mass on both sides of a pair; only the difference enters
/// the decision function, so each pair is stored with one side zeroed.
fn canonicalize_pairs(alpha: &mut [f64], beta: &mut [f64]) {
    for (a, b) in alpha.iter_mut().zip(beta.iter_mut()) {
        let diff = *a - *b;
        *a = diff.max(0.0);
        *b = (-diff).max(0.0);
    }
}

fn run_hq(
    gram: &Array2<f64>,
    y: &[f64],
    config: &TrainConfig,
    mut state: FitState,
    iter_budget: usize,
) -> Result<(FitState, f64, f64, bool)> {
    let n = y.len();
    let tau = config.loss.tau();
    let p = config.loss.p();
    let eta = config.loss.eta();
    let mut final_step;
    let mut final_kkt;
    let mut inner_converged = true;
    let mut done = 0usize;
    loop {
        let omega = weights_from_delta(&state.delta, config.c, eta)?;
        let qp = assemble_dual(gram.view(), y, &omega, p, tau)?;
        let out = solve_clipdcd(&qp, &config.solver, Some(&state.u))?;
        inner_converged &= out.converged;
        final_step = state
            .u
            .iter()
            .zip(&out.u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        final_kkt = kkt_residual(&qp, &out.u)?;
        state.u = out.u;
        let (alpha, beta) = split_u(&state.u, n, tau);
        state.trace.push(primal_objective_from(gram, y, &alpha, &beta, config));
        done += 1;
        state.hq_iterations += 1;
        if final_step < config.hq_tol || done >= iter_budget {
            break;
        }
        let (alpha, beta) = split_u(&state.u, n, tau);
        let z = margins(gram, y, &alpha, &beta);
        state.delta = z.iter().map(|&zi| update_delta(zi, eta, &config.loss)).collect();
    }
    Ok((state, final_step, final_kkt, inner_converged))
}

/// Fit a model on `x` (rows are samples) with labels in `{-1, +1}`.
pub fn fit(x: ArrayView2<f64>, y: &[f64], config: &TrainConfig) -> Result<Model> {
    fit_with_init(x, y, config, None)
}

/// Fit with an optional `(alpha, beta)` warm start for the bounded path.
/// The reweighting objective is nonconvex, so the starting point selects
/// which stationary point the solver lands on; continuation sweeps use this
/// to track one branch of solutions across nearby problems.
pub(crate) fn fit_with_init(
    x: ArrayView2<f64>,
    y: &[f64],
    config: &TrainConfig,
    init: Option<(&[f64], &[f64])>,
) -> Result<Model> {
    config.validate()?;
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n < 2 {
        return Err(Error::Data("need at least 2 samples".into()));
    }
    validate_labels(y)?;
    let gram = gram_matrix(x, &config.kernel)?;
    let tau = config.loss.tau();
    let dim = 2 * n;

    let (state, final_step, final_kkt, inner_converged) = if config.bounded {
        let (u, delta, start_obj) = match init {
            Some((a, b)) => {
                if a.len() != n || b.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: a.len().min(b.len()) });
                }
                let mut u = a.to_vec();
                u.extend_from_slice(b);
                let z = margins(&gram, y, a, b);
                let delta: Vec<f64> =
                    z.iter().map(|&zi| update_delta(zi, config.loss.eta(), &config.loss)).collect();
                (u, delta, primal_objective_from(&gram, y, a, b, config))
            }
            None => {
                let zeros = vec![0.0; n];
                let obj = primal_objective_from(&gram, y, &zeros, &zeros, config);
                // the zero iterate has margin residual 1 everywhere; seeding the
                // auxiliary variable from those margins keeps every outer step a
                // proper majorize-minimize step (a -1 seed can raise the
                // objective on the first solve)
                let delta = vec![update_delta(1.0, config.loss.eta(), &config.loss); n];
                (vec![0.0; dim], delta, obj)
            }
        };
        let state = FitState { u, delta, trace: vec![start_obj], hq_iterations: 0 };
        run_hq(&gram, y, config, state, config.hq_max_iters)?
    } else {
        // single weighted solve with uniform weights C*e
        let omega = vec![config.c; n];
        let qp = assemble_dual(gram.view(), y, &omega, config.loss.p(), tau)?;
        let out = solve_clipdcd(&qp, &config.solver, None)?;
        let kkt = kkt_residual(&qp, &out.u)?;
        let (alpha, beta) = split_u(&out.u, n, tau);
        let obj = primal_objective_from(&gram, y, &alpha, &beta, config);
        let state = FitState { u: out.u, delta: vec![-1.0; n], trace: vec![obj], hq_iterations: 1 };
        (state, 0.0, kkt, out.converged)
    };

    let (mut alpha, mut beta) = split_u(&state.u, n, tau);
    canonicalize_pairs(&mut alpha, &mut beta);
    Ok(Model {
        support_x: x.rows().into_iter().map(|r| r.to_vec()).collect(),
        y: y.to_vec(),
        alpha,
        beta,
        config: *config,
        diagnostics: Diagnostics {
            hq_iterations: state.hq_iterations,
            final_step_norm: final_step,
            kkt_residual: final_kkt,
            objective_trace: state.trace,
            inner_converged,
        },
    })
}

/// Continue a bounded fit for up to `extra_iters` more outer iterations from
/// the model's recorded state. Equivalent to having fitted with a larger
/// iteration budget from the start.
pub fn fit_continue(model: &Model, extra_iters: usize) -> Result<Model> {
    if !model.config.bounded {
        return Err(Error::InvalidParam("continuation applies to bounded fits only".into()));
    }
    let x = model.support_matrix();
    let y = &model.y;
    let config = &model.config;
    let gram = gram_matrix(x.view(), &config.kernel)?;
    let n = y.len();
    let tau = config.loss.tau();
    let mut u = model.alpha.clone();
    u.extend_from_slice(&model.beta);
    let z = margins(&gram, y, &model.alpha, &model.beta);
    let delta: Vec<f64> =
        z.iter().map(|&zi| update_delta(zi, config.loss.eta(), &config.loss)).collect();
    let state = FitState {
        u,
        delta,
        trace: model.diagnostics.objective_trace.clone(),
        hq_iterations: model.diagnostics.hq_iterations,
    };
    let (state, final_step, final_kkt, inner_converged) =
        run_hq(&gram, y, config, state, extra_iters)?;
    let (mut alpha, mut beta) = split_u(&state.u, n, tau);
    canonicalize_pairs(&mut alpha, &mut beta);
    Ok(Model {
        support_x: model.support_x.clone(),
        y: y.clone(),
        alpha,
        beta,
        config: *config,
        diagnostics: Diagnostics {
            hq_iterations: state.hq_iterations,
            final_step_norm: final_step,
            kkt_residual: final_kkt,
            objective_trace: state.trace,
            inner_converged,
        },
    })
}

impl Model {
    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.support_x.first().map_or(0, |r| r.len())
    }

    pub fn support_matrix(&self) -> Array2<f64> {
        let n = self.n_samples();
        let d = self.n_features();
        Array2::from_shape_fn((n, d), |(i, j)| self.support_x[i][j])
    }

    /// `f(x) = sum_i y_i k(x, x_i) (alpha_i - beta_i)`.
    pub fn decision_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        let mut f = 0.0;
        for i in 0..self.n_samples() {
            let xi = ndarray::ArrayView1::from(&self.support_x[i][..]);
            let k = kernel_eval(x, xi, &self.config.kernel)?;
            f += self.y[i] * k * (self.alpha[i] - self.beta[i]);
        }
        Ok(f)
    }

    /// Labels for a batch; ties at `f = 0` go to `+1`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        x.rows()
            .into_iter()
            .map(|r| self.decision_value(r).map(|f| if f >= 0.0 { 1.0 } else { -1.0 }))
            .collect()
    }

    /// Slack variables recovered from the decision values on the training set.
    pub fn slacks(&self) -> Result<Vec<f64>> {
        let tau = self.config.loss.tau();
        let x = self.support_matrix();
        (0..self.n_samples())
            .map(|i| {
                let f = self.decision_value(x.row(i))?;
                let yf = self.y[i] * f;
                Ok(if tau > 0.0 {
                    (1.0 - yf).max(tau * (yf - 1.0))
                } else {
                    (1.0 - yf).max(0.0)
                })
            })
            .collect()
    }

    /// Primal objective at the current coefficients.
    pub fn primal_objective(&self) -> Result<f64> {
        let x = self.support_matrix();
        let gram = gram_matrix(x.view(), &self.config.kernel)?;
        Ok(primal_objective_from(&gram, &self.y, &self.alpha, &self.beta, &self.config))
    }

    /// Effective linear normal `w = sum_i y_i (alpha_i - beta_i) x_i`
    /// (linear kernel only; excludes the implicit bias coordinate).
    pub fn linear_normal(&self) -> Result<Vec<f64>> {
        if self.config.kernel != KernelSpec::Linear {
            return Err(Error::InvalidParam("linear_normal requires the linear kernel".into()));
        }
        let d = self.n_features();
        let mut w = vec![0.0; d];
        for i in 0..self.n_samples() {
            let c = self.y[i] * (self.alpha[i] - self.beta[i]);
            for j in 0..d {
                w[j] += c * self.support_x[i][j];
            }
        }
        Ok(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
