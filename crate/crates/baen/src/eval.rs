//! Metrics, cross-validated model selection, rank-based statistical
//! comparison, and empirical probes of the model's theoretical properties.

use ndarray::{Array2, ArrayView2};

use crate::data::{inject_feature_noise, inject_label_noise, Dataset, SplitPlan, Standardizer};
use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, KernelSpec};
use crate::loss::{eval_baen, LossParams};
use crate::trainer::{fit, Model, Preset, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Confusion counts, accuracy, and F1 (positive class is `+1`).
pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<(ConfusionCounts, f64, f64)> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), found: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::Data("empty input".into()));
    }
    let mut c = ConfusionCounts { tp: 0, tn: 0, fp: 0, fn_: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t > 0.0, p > 0.0) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    let total = (c.tp + c.tn + c.fp + c.fn_) as f64;
    let acc = (c.tp + c.tn) as f64 / total;
    let denom = 2 * c.tp + c.fp + c.fn_;
    let f1 = if denom == 0 { 0.0 } else { 2.0 * c.tp as f64 / denom as f64 };
    Ok((c, acc, f1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScores {
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub mean_f1: f64,
    pub sd_f1: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn take_rows(x: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), x.ncols()), |(i, j)| x[(idx[i], j)])
}

/// Per-fold fit with training-portion standardization, scored on the held-out
/// fold.
pub fn cross_validate(ds: &Dataset, config: &TrainConfig, plan: &SplitPlan) -> Result<CvScores> {
    let mut accs = Vec::with_capacity(plan.k);
    let mut f1s = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let train_idx = plan.train_indices(fold);
        let test_idx = plan.test_indices(fold);
        let x_train = take_rows(ds.x.view(), &train_idx);
        let y_train: Vec<f64> = train_idx.iter().map(|&i| ds.y[i]).collect();
        let scaler = Standardizer::fit(x_train.view());
        let model = fit(scaler.transform(x_train.view()).view(), &y_train, config)?;
        let x_test = scaler.transform(take_rows(ds.x.view(), &test_idx).view());
        let y_test: Vec<f64> = test_idx.iter().map(|&i| ds.y[i]).collect();
        let pred = model.predict(x_test.view())?;
        let (_, acc, f1) = metrics(&y_test, &pred)?;
        accs.push(acc);
        f1s.push(f1);
    }
    let (mean_acc, sd_acc) = mean_sd(&accs);
    let (mean_f1, sd_f1) = mean_sd(&f1s);
    Ok(CvScores { mean_acc, sd_acc, mean_f1, sd_f1 })
}

/// Candidate sets for the model-selection search.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub c: Vec<f64>,
    pub eta: Vec<f64>,
    pub tau: Vec<f64>,
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c: (-8..=8).map(|i| 2f64.powi(i)).collect(),
            eta: (-3..=3).map(|i| 2f64.powi(2 * i)).collect(),
            tau: vec![0.0, 0.1, 0.3, 0.6, 1.0],
            p: vec![0.3, 0.5, 0.7],
            sigma: (-4..=4).map(|i| 2f64.powi(i)).collect(),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, set) in [
            ("C", &self.c),
            ("eta", &self.eta),
            ("tau", &self.tau),
            ("p", &self.p),
            ("sigma", &self.sigma),
        ] {
            if set.is_empty() {
                return Err(Error::InvalidParam(format!("empty grid for {name}")));
            }
        }
        Ok(())
    }
}

/// Exhaustive search over the preset's active axes; best mean CV accuracy
/// wins, ties broken by smaller C then grid order.
pub fn grid_search(
    ds: &Dataset,
    grid: &GridSpec,
    preset: Preset,
    base: &TrainConfig,
    plan: &SplitPlan,
) -> Result<(TrainConfig, CvScores, usize)> {
    grid.validate()?;
    let (use_c, use_eta, use_tau, use_p, use_sigma) = preset.active_axes();
    let rbf = matches!(base.kernel, KernelSpec::Rbf { .. });
    let one = |active: bool, set: &[f64], pinned: f64| -> Vec<f64> {
        if active {
            set.to_vec()
        } else {
            vec![pinned]
        }
    };
    let cs = one(use_c, &grid.c, base.c);
    let etas = one(use_eta, &grid.eta, base.loss.eta());
    let taus = one(use_tau, &grid.tau, base.loss.tau());
    let ps = one(use_p, &grid.p, base.loss.p());
    let sigmas = if rbf {
        one(use_sigma, &grid.sigma, match base.kernel {
            KernelSpec::Rbf { sigma } => sigma,
            KernelSpec::Linear => 1.0,
        })
    } else {
        vec![f64::NAN] // unused marker for the linear kernel
    };

    let mut best: Option<(TrainConfig, CvScores)> = None;
    let mut evaluated = 0usize;
    let mut cs_sorted = cs.clone();
    cs_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &c in &cs_sorted {
        for &eta in &etas {
            for &tau in &taus {
                for &p in &ps {
                    for &sigma in &sigmas {
                        let mut cfg = *base;
                        cfg.c = c;
                        cfg.loss = LossParams::new(1.0, eta, tau, p)?;
                        if rbf {
                            cfg.kernel = KernelSpec::Rbf { sigma };
                        }
                        let cfg = preset.apply(&cfg)?;
                        let scores = cross_validate(ds, &cfg, plan)?;
                        evaluated += 1;
                        let better = match &best {
                            None => true,
                            Some((_, b)) => scores.mean_acc > b.mean_acc,
                        };
                        if better {
                            best = Some((cfg, scores));
                        }
                    }
                }
            }
        }
    }
    let (cfg, scores) = best.expect("non-empty grid");
    Ok((cfg, scores, evaluated))
}

/// Per-dataset scores of `k` models; ranks with ties averaged, rank 1 best.
#[derive(Debug, Clone)]
pub struct RankTable {
    pub model_names: Vec<String>,
    /// `scores[dataset][model]`, higher is better.
    pub scores: Vec<Vec<f64>>,
}

impl RankTable {
    pub fn new(model_names: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        let k = model_names.len();
        if scores.iter().any(|row| row.len() != k) {
            return Err(Error::Data("score rows must all have one entry per model".into()));
        }
        Ok(Self { model_names, scores })
    }

    /// Ranks for one dataset row: best score gets rank 1; ties averaged.
    pub fn row_ranks(row: &[f64]) -> Vec<f64> {
        let k = row.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap());
        let mut ranks = vec![0.0; k];
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && row[order[j + 1]] == row[order[i]] {
                j += 1;
            }
            // positions i..=j share the averaged rank
            let avg = (i + 1 + j + 1) as f64 / 2.0;
            for &idx in &order[i..=j] {
                ranks[idx] = avg;
            }
            i = j + 1;
        }
        ranks
    }

    pub fn average_ranks(&self) -> Vec<f64> {
        let k = self.model_names.len();
        let n = self.scores.len() as f64;
        let mut avg = vec![0.0; k];
        for row in &self.scores {
            for (a, r) in avg.iter_mut().zip(Self::row_ranks(row)) {
                *a += r;
            }
        }
        avg.iter_mut().for_each(|a| *a /= n);
        avg
    }
}

/// Friedman statistic and its F-distributed transform.
pub fn friedman(table: &RankTable) -> Result<(f64, f64)> {
    let k = table.model_names.len();
    let n = table.scores.len();
    if k < 2 || n < 2 {
        return Err(Error::Data(format!("need k >= 2 and N >= 2, got k={k}, N={n}")));
    }
    let avg = table.average_ranks();
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = avg.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    let denom = nf * (kf - 1.0) - chi2;
    if denom == 0.0 {
        return Err(Error::Data("degenerate F_F denominator".into()));
    }
    let ff = (nf - 1.0) * chi2 / denom;
    Ok((chi2, ff))
}

pub fn friedman_from_chi2(chi2: f64, n: usize, k: usize) -> Result<f64> {
    let (nf, kf) = (n as f64, k as f64);
    let denom = nf * (kf - 1.0) - chi2;
    if denom == 0.0 {
        return Err(Error::Data("degenerate F_F denominator".into()));
    }
    Ok((nf - 1.0) * chi2 / denom)
}

/// Nemenyi critical difference `q_alpha * sqrt(k(k+1)/(6N))`.
pub fn nemenyi_cd(k: usize, n: usize, q_alpha: f64) -> Result<f64> {
    if k < 2 || n < 1 || !(q_alpha > 0.0) {
        return Err(Error::InvalidParam("need k >= 2, N >= 1, q_alpha > 0".into()));
    }
    let kf = k as f64;
    Ok(q_alpha * (kf * (kf + 1.0) / (6.0 * n as f64)).sqrt())
}

/// Critical values `q_{0.1}` known to this tool; other `k` must be supplied
/// by the caller.
pub fn q_alpha_10(k: usize) -> Option<f64> {
    match k {
        7 => Some(2.693),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct VtubPair {
    pub i: usize,
    pub j: usize,
    pub slack_gap: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct VtubReport {
    pub hypothesis_met: bool,
    pub pairs: Vec<VtubPair>,
    pub satisfied: usize,
}

impl VtubReport {
    pub fn satisfaction_rate(&self) -> f64 {
        if self.pairs.is_empty() {
            1.0
        } else {
            self.satisfied as f64 / self.pairs.len() as f64
        }
    }
}

/// Slack-gap bound check over same-class constraint-violating pairs.
///
/// A diagnostic, not an assertion: bounds and gaps are reported; the report
/// is flagged when `p` lies outside the theorem's `(0,1)` hypothesis.
pub fn vtub_check(model: &Model) -> Result<VtubReport> {
    let p = model.config.loss.p();
    let hypothesis_met = p > 0.0 && p < 1.0;
    let n = model.n_samples();
    let x = model.support_matrix();
    let xi = model.slacks()?;

    // augmented matrix and pairwise-distance space per kernel kind
    let (aug, dist_rows): (Array2<f64>, Array2<f64>) = match model.config.kernel {
        KernelSpec::Linear => {
            let d = x.ncols();
            let aug = Array2::from_shape_fn((n, d + 1), |(i, j)| {
                if j < d {
                    x[(i, j)]
                } else {
                    1.0
                }
            });
            (aug, x.clone())
        }
        KernelSpec::Rbf { .. } => {
            let gram = gram_matrix(x.view(), &model.config.kernel)?;
            let aug = Array2::from_shape_fn((n, n + 1), |(i, j)| {
                if j < n {
                    gram[(i, j)]
                } else {
                    1.0
                }
            });
            (aug, gram)
        }
    };
    let fro = aug.iter().map(|v| v * v).sum::<f64>().sqrt();
    let m = aug.ncols();
    let gtg = nalgebra::DMatrix::from_fn(m, m, |a, b| {
        (0..n).map(|i| aug[(i, a)] * aug[(i, b)]).sum::<f64>()
    });
    let eig = gtg.symmetric_eigenvalues();
    let theta_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let theta_max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = p * (theta_min + p * theta_max) * (n as f64).sqrt() * fro;

    let violators: Vec<usize> = (0..n).filter(|&i| xi[i] > 1e-9).collect();
    let mut pairs = Vec::new();
    let mut satisfied = 0usize;
    for (a, &i) in violators.iter().enumerate() {
        for &j in &violators[a + 1..] {
            if model.y[i] != model.y[j] {
                continue;
            }
            let dist: f64 = (0..dist_rows.ncols())
                .map(|c| {
                    let diff = dist_rows[(i, c)] - dist_rows[(j, c)];
                    diff * diff
                })
                .sum::<f64>()
                .sqrt();
            let bound = scale * dist;
            let gap = (xi[i] - xi[j]).abs();
            let ok = gap <= bound;
            if ok {
                satisfied += 1;
            }
            pairs.push(VtubPair { i, j, slack_gap: gap, bound, satisfied: ok });
        }
    }
    Ok(VtubReport { hypothesis_met, pairs, satisfied })
}

/// Grid minimizer of the pointwise expected bounded loss; the sign of the
/// minimizer should match the Bayes sign of `prob_positive - 1/2`.
pub fn fisher_probe(
    params: &LossParams,
    prob_positive: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<(f64, i8)> {
    if !(0.0 < prob_positive && prob_positive < 1.0) {
        return Err(Error::InvalidParam("prob_positive must be in (0,1)".into()));
    }
    if !(lo < hi) || !(step > 0.0) {
        return Err(Error::InvalidParam("need lo < hi and step > 0".into()));
    }
    let q = prob_positive;
    let mut best_v = lo;
    let mut best_risk = f64::INFINITY;
    let steps = ((hi - lo) / step).round() as usize;
    for s in 0..=steps {
        let v = lo + s as f64 * step;
        let risk = q * eval_baen(1.0 - v, params) + (1.0 - q) * eval_baen(1.0 + v, params);
        if risk < best_risk {
            best_risk = risk;
            best_v = v;
        }
    }
    let sign = if best_v > 0.0 {
        1
    } else if best_v < 0.0 {
        -1
    } else {
        0
    };
    Ok((best_v, sign))
}

#[derive(Debug, Clone)]
pub struct InfluenceStep {
    pub magnitude: f64,
    /// `y_i (alpha_i - beta_i)` over the base samples only.
    pub coef: Vec<f64>,
    pub dist_to_prev: Option<f64>,
    /// Full multipliers (base samples plus probe), kept to warm-start the
    /// next magnitude in the sweep.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Refit with one mislabeled probe point pushed farther and farther out and
/// watch the decision-function coefficients stabilize.
pub fn influence_probe(
    base_ds: &Dataset,
    direction: &[f64],
    magnitudes: &[f64],
    config: &TrainConfig,
) -> Result<Vec<InfluenceStep>> {
    if magnitudes.len() < 2 {
        return Err(Error::InvalidParam("need at least 2 magnitudes".into()));
    }
    if magnitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam("magnitudes must be strictly increasing".into()));
    }
    if direction.len() != base_ds.n_features() {
        return Err(Error::DimensionMismatch {
            expected: base_ds.n_features(),
            found: direction.len(),
        });
    }
    let n = base_ds.n_samples();
    let d = base_ds.n_features();
    let mut steps: Vec<InfluenceStep> = Vec::with_capacity(magnitudes.len());
    for &mag in magnitudes {
        let mut x = Array2::zeros((n + 1, d));
        for i in 0..n {
            for j in 0..d {
                x[(i, j)] = base_ds.x[(i, j)];
            }
        }
        for j in 0..d {
            x[(n, j)] = mag * direction[j];
        }
        let mut y = base_ds.y.clone();
        // probe sits far on the positive side but carries the negative label
        y.push(-1.0);
        // continuation in the probe magnitude: warm-start each fit from the
        // previous one so the sweep tracks a single stationary branch instead
        // of hopping between reweighting fixed points
        let init = steps
            .last()
            .map(|prev: &InfluenceStep| (prev.alpha.as_slice(), prev.beta.as_slice()));
        let model = if config.bounded {
            crate::trainer::fit_with_init(x.view(), &y, config, init)?
        } else {
            fit(x.view(), &y, config)?
        };
        let coef: Vec<f64> =
            (0..n).map(|i| model.y[i] * (model.alpha[i] - model.beta[i])).collect();
        let dist_to_prev = steps.last().map(|prev: &InfluenceStep| {
            coef.iter()
                .zip(&prev.coef)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        steps.push(InfluenceStep {
            magnitude: mag,
            coef,
            dist_to_prev,
            alpha: model.alpha.clone(),
            beta: model.beta.clone(),
        });
    }
    Ok(steps)
}

/// Angle in degrees, within `[0, 90]`, between the model's effective linear
/// normal and a reference direction.
pub fn boundary_angle(model: &Model, bayes_normal: &[f64]) -> Result<f64> {
    let w = model.linear_normal()?;
    if w.len() != bayes_normal.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), found: bayes_normal.len() });
    }
    let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bn = bayes_normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if wn == 0.0 || bn == 0.0 {
        return Err(Error::InvalidParam("zero normal vector".into()));
    }
    let cos = (w.iter().zip(bayes_normal).map(|(a, b)| a * b).sum::<f64>() / (wn * bn))
        .abs()
        .min(1.0);
    Ok(cos.acos().to_degrees())
}

/// One benchmark cell: a dataset/preset pair under one noise setting.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub dataset: String,
    pub preset: String,
    pub noise_kind: String,
    pub noise_level: f64,
    pub scores: CvScores,
}

#[derive(Debug, Clone)]
pub struct StatsBlock {
    pub metric: String,
    pub noise: String,
    pub k: usize,
    pub n: usize,
    pub avg_ranks: Vec<(String, f64)>,
    pub chi2: f64,
    pub ff: f64,
    pub cd: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSetting {
    None,
    Label(f64),
    Feature(f64),
}

impl NoiseSetting {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Label(_) => "label",
            Self::Feature(_) => "feature",
        }
    }

    pub fn level(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Label(r) | Self::Feature(r) => *r,
        }
    }

    pub fn apply(&self, ds: &Dataset, seed: u64) -> Result<Dataset> {
        match self {
            Self::None => Ok(ds.clone()),
            Self::Label(rate) => inject_label_noise(ds, *rate, seed),
            Self::Feature(r) => inject_feature_noise(ds, *r, seed),
        }
    }
}

/// Grid-search each preset on each (noised) dataset and collect CV scores
/// plus the rank statistics over datasets.
#[allow(clippy::too_many_arguments)]
pub fn run_benchmark(
    datasets: &[Dataset],
    presets: &[Preset],
    base: &TrainConfig,
    grid: &GridSpec,
    noise: NoiseSetting,
    folds: usize,
    seed: u64,
    q_alpha: Option<f64>,
) -> Result<(Vec<ReportRow>, Vec<StatsBlock>)> {
    let mut rows = Vec::new();
    let mut acc_scores: Vec<Vec<f64>> = Vec::new();
    let mut f1_scores: Vec<Vec<f64>> = Vec::new();
    for ds in datasets {
        let noised = noise.apply(ds, seed)?;
        let plan = crate::data::stratified_kfold(&noised, folds, seed)?;
        let mut acc_row = Vec::new();
        let mut f1_row = Vec::new();
        for &preset in presets {
            let (_, scores, _) = grid_search(&noised, grid, preset, base, &plan)?;
            acc_row.push(scores.mean_acc);
            f1_row.push(scores.mean_f1);
            rows.push(ReportRow {
                dataset: ds.name.clone(),
                preset: preset.name().to_string(),
                noise_kind: noise.kind().to_string(),
                noise_level: noise.level(),
                scores,
            });
        }
        acc_scores.push(acc_row);
        f1_scores.push(f1_row);
    }

    let mut stats = Vec::new();
    let k = presets.len();
    let n = datasets.len();
    if k >= 2 && n >= 2 {
        let names: Vec<String> = presets.iter().map(|p| p.name().to_string()).collect();
        for (metric, scores) in [("acc", acc_scores), ("f1", f1_scores)] {
            let table = RankTable::new(names.clone(), scores)?;
            let avg = table.average_ranks();
            let (chi2, ff) = friedman(&table)?;
            let q = q_alpha.or_else(|| q_alpha_10(k));
            let cd = match q {
                Some(q) => Some(nemenyi_cd(k, n, q)?),
                None => None,
            };
            stats.push(StatsBlock {
                metric: metric.to_string(),
                noise: format!("{}:{}", noise.kind(), noise.level()),
                k,
                n,
                avg_ranks: names.iter().cloned().zip(avg).collect(),
                chi2,
                ff,
                cd,
            });
        }
    }
    Ok((rows, stats))
}
