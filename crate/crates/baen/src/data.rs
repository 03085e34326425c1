//! Dataset ingestion, synthetic two-Gaussian generation, noise injection,
//! and stratified cross-validation splitting. All randomized operations are
//! pure functions of their inputs and a seed.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub name: String,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        if x.nrows() < 2 {
            return Err(Error::Data("dataset needs at least 2 rows".into()));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Data("labels must be -1 or +1".into()));
        }
        Ok(Self { x, y, name: name.into(), feature_names: None })
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v == 1.0).count();
        (pos, self.y.len() - pos)
    }
}

/// Column reference by header name or zero-based index.
#[derive(Debug, Clone)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        }
    }
}

/// Load a comma-separated dataset. Labels must be in `{-1, +1}` or `{0, 1}`
/// (0 maps to -1); a non-numeric first row is treated as a header.
pub fn load_csv(path: impl AsRef<Path>, label_column: &ColumnRef) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();

    let (header, ncols) = match lines.peek() {
        Some((_, first)) => {
            let cells: Vec<&str> = first.split(',').map(str::trim).collect();
            let numeric = cells.iter().all(|c| c.parse::<f64>().is_ok());
            if numeric {
                (None, cells.len())
            } else {
                let h: Vec<String> = cells.iter().map(|s| s.to_string()).collect();
                let n = h.len();
                lines.next();
                (Some(h), n)
            }
        }
        None => return Err(Error::Data(format!("{}: empty file", path.display()))),
    };

    let label_idx = match label_column {
        ColumnRef::Index(i) => {
            if *i >= ncols {
                return Err(Error::Data(format!(
                    "label column index {i} out of range ({ncols} columns)"
                )));
            }
            *i
        }
        ColumnRef::Name(name) => match &header {
            Some(h) => h
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Data(format!("label column '{name}' not found")))?,
            None => {
                return Err(Error::Data(format!(
                    "label column '{name}' requested but the file has no header"
                )))
            }
        },
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != ncols {
            return Err(Error::Data(format!(
                "row {}: expected {ncols} cells, found {}",
                lineno + 1,
                cells.len()
            )));
        }
        let mut feats = Vec::with_capacity(ncols - 1);
        for (col, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("row {}, column {}: unparseable cell '{cell}'", lineno + 1, col))
            })?;
            if col == label_idx {
                let label = match v {
                    v if v == 1.0 => 1.0,
                    v if v == -1.0 => -1.0,
                    v if v == 0.0 => -1.0,
                    other => {
                        return Err(Error::Data(format!(
                            "row {}: label must be -1/+1/0/1, got {other}",
                            lineno + 1
                        )))
                    }
                };
                y.push(label);
            } else {
                feats.push(v);
            }
        }
        rows.push(feats);
    }
    if rows.len() < 2 {
        return Err(Error::Data(format!("{}: fewer than 2 data rows", path.display())));
    }
    let d = ncols - 1;
    let x = Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j]);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut ds = Dataset::new(x, y, name)?;
    ds.feature_names = header.map(|h| {
        h.iter().enumerate().filter(|(i, _)| *i != label_idx).map(|(_, c)| c.clone()).collect()
    });
    Ok(ds)
}

/// Load a label-free feature matrix (every column numeric; a non-numeric
/// first row is treated as a header and skipped).
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ncols = None;
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(vals) => {
                let n = *ncols.get_or_insert(vals.len());
                if vals.len() != n {
                    return Err(Error::Data(format!(
                        "row {}: expected {n} cells, found {}",
                        lineno + 1,
                        vals.len()
                    )));
                }
                rows.push(vals);
            }
            None if rows.is_empty() && ncols.is_none() => {} // header row
            None => {
                return Err(Error::Data(format!("row {}: unparseable cell", lineno + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let d = rows[0].len();
    Ok(Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j]))
}

/// Write as CSV with a header; labels in the final column as -1/+1.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let d = ds.n_features();
    let names: Vec<String> = match &ds.feature_names {
        Some(n) if n.len() == d => n.clone(),
        _ => (0..d).map(|j| format!("x{}", j + 1)).collect(),
    };
    out.push_str(&names.join(","));
    out.push_str(",label\n");
    for i in 0..ds.n_samples() {
        for j in 0..d {
            out.push_str(&format!("{:?},", ds.x[(i, j)]));
        }
        out.push_str(&format!("{}\n", ds.y[i] as i64));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Two Gaussian classes with identity covariance; positive class first.
pub fn make_gaussian_twoclass(
    n_per_class: usize,
    mu_plus: &[f64],
    mu_minus: &[f64],
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::Data("n_per_class must be >= 1".into()));
    }
    if mu_plus.len() != mu_minus.len() {
        return Err(Error::DimensionMismatch { expected: mu_plus.len(), found: mu_minus.len() });
    }
    let d = mu_plus.len();
    let n = 2 * n_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mu = if i < n_per_class { mu_plus } else { mu_minus };
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = mu[j] + z;
        }
        y.push(if i < n_per_class { 1.0 } else { -1.0 });
    }
    Dataset::new(x, y, "gaussian")
}

/// Append mislabeled points per class, drawn from the opposite class's
/// empirical mean with identity covariance.
pub fn inject_outliers(
    ds: &Dataset,
    count_per_class: &HashMap<i8, usize>,
    seed: u64,
) -> Result<Dataset> {
    let d = ds.n_features();
    let mean_of = |cls: f64| -> Vec<f64> {
        let mut m = vec![0.0; d];
        let mut cnt = 0usize;
        for i in 0..ds.n_samples() {
            if ds.y[i] == cls {
                for j in 0..d {
                    m[j] += ds.x[(i, j)];
                }
                cnt += 1;
            }
        }
        m.iter_mut().for_each(|v| *v /= cnt.max(1) as f64);
        m
    };
    let mean_pos = mean_of(1.0);
    let mean_neg = mean_of(-1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = ds.x.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut y = ds.y.clone();
    // deterministic order: negative-class outliers first, then positive
    for &cls in &[-1i8, 1i8] {
        let count = *count_per_class.get(&cls).unwrap_or(&0);
        let mu = if cls == 1 { &mean_neg } else { &mean_pos };
        for _ in 0..count {
            let row: Vec<f64> = mu
                .iter()
                .map(|&m| m + rng.sample::<f64, _>(StandardNormal))
                .collect();
            rows.push(row);
            y.push(cls as f64);
        }
    }
    let n = rows.len();
    let x = Array2::from_shape_fn((n, d), |(i, j)| rows[i][j]);
    let mut out = Dataset::new(x, y, ds.name.clone())?;
    out.feature_names = ds.feature_names.clone();
    Ok(out)
}

/// The 2-D two-Gaussian benchmark dataset: 75 samples per class at means
/// `(3,3)` and `(-3,-3)`, identity covariance.
pub fn make_twoclass_base(seed: u64) -> Result<Dataset> {
    make_gaussian_twoclass(75, &[3.0, 3.0], &[-3.0, -3.0], seed)
}

/// Base dataset plus three mislabeled outliers in the negative class
/// (153 rows).
pub fn make_case1(seed: u64) -> Result<Dataset> {
    let base = make_twoclass_base(seed)?;
    let counts = HashMap::from([(-1i8, 3usize)]);
    let mut out = inject_outliers(&base, &counts, seed.wrapping_add(1))?;
    out.name = "case1".into();
    Ok(out)
}

/// Base dataset plus three mislabeled outliers in each class (156 rows).
pub fn make_case2(seed: u64) -> Result<Dataset> {
    let base = make_twoclass_base(seed)?;
    let counts = HashMap::from([(-1i8, 3usize), (1i8, 3usize)]);
    let mut out = inject_outliers(&base, &counts, seed.wrapping_add(1))?;
    out.name = "case2".into();
    Ok(out)
}

/// Negate the labels of exactly `floor(rate * n)` distinct random rows.
pub fn inject_label_noise(ds: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Data(format!("noise rate must be in [0,1], got {rate}")));
    }
    let n = ds.n_samples();
    let flips = (rate * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut out = ds.clone();
    for &i in idx.iter().take(flips) {
        out.y[i] = -out.y[i];
    }
    Ok(out)
}

/// Add zero-mean Gaussian noise to each column with variance `r` times the
/// column's sample variance; constant columns pass through untouched.
pub fn inject_feature_noise(ds: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if !(ratio >= 0.0) {
        return Err(Error::Data(format!("noise ratio must be >= 0, got {ratio}")));
    }
    let n = ds.n_samples();
    let d = ds.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    if ratio == 0.0 {
        return Ok(out);
    }
    for j in 0..d {
        let col = ds.x.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        if var == 0.0 {
            continue;
        }
        let sd = (ratio * var).sqrt();
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            out.x[(i, j)] += sd * z;
        }
    }
    Ok(out)
}

/// Stratified fold assignment.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::Data(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; ds.n_samples()];
    for &cls in &[1.0f64, -1.0] {
        let mut members: Vec<usize> =
            (0..ds.n_samples()).filter(|&i| ds.y[i] == cls).collect();
        if members.len() < k {
            return Err(Error::Data(format!(
                "class {cls} has {} members, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    Ok(SplitPlan { fold_of, k, seed })
}

/// Zero-mean unit-variance column scaling fitted on training rows; constant
/// columns pass through unscaled.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let d = x.ncols();
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let col = x.column(j);
            let m = col.sum() / n;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / n;
            mean[j] = m;
            scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        Array2::from_shape_fn((x.nrows(), x.ncols()), |(i, j)| {
            (x[(i, j)] - self.mean[j]) / self.scale[j]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Dataset {
        let x = array![[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0]];
        Dataset::new(x, vec![1.0, -1.0, 1.0, -1.0], "toy").unwrap()
    }

    #[test]
    fn csv_round_trip_and_label_mapping() {
        let dir = std::env::temp_dir().join("baen_data_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("toy.csv");
        std::fs::write(&p, "a,b,label\n1.5,2.0,1\n0.5,1.0,0\n2.5,3.0,1\n").unwrap();
        let ds = load_csv(&p, &ColumnRef::Name("label".into())).unwrap();
        assert_eq!(ds.y, vec![1.0, -1.0, 1.0]);
        assert_eq!(ds.x[(0, 0)], 1.5);
        let p2 = dir.join("toy2.csv");
        save_csv(&ds, &p2).unwrap();
        let ds2 = load_csv(&p2, &ColumnRef::Name("label".into())).unwrap();
        assert_eq!(ds.x, ds2.x);
        assert_eq!(ds.y, ds2.y);
    }

    #[test]
    fn csv_error_names_row_and_column() {
        let dir = std::env::temp_dir().join("baen_data_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.csv");
        std::fs::write(&p, "a,b,label\n1.0,oops,1\n2.0,3.0,0\n").unwrap();
        let err = load_csv(&p, &ColumnRef::Name("label".into())).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("column 1"), "{msg}");
    }

    #[test]
    fn gaussian_shape_and_determinism() {
        let a = make_gaussian_twoclass(75, &[3.0, 3.0], &[-3.0, -3.0], 7).unwrap();
        assert_eq!(a.n_samples(), 150);
        assert_eq!(a.class_counts(), (75, 75));
        let b = make_gaussian_twoclass(75, &[3.0, 3.0], &[-3.0, -3.0], 7).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn gaussian_sample_mean_converges() {
        let ds = make_gaussian_twoclass(100_000, &[3.0, 3.0], &[-3.0, -3.0], 1).unwrap();
        for j in 0..2 {
            let mean: f64 =
                (0..100_000).map(|i| ds.x[(i, j)]).sum::<f64>() / 100_000.0;
            assert!((mean - 3.0).abs() < 0.02, "coordinate {j} mean {mean}");
        }
    }

    #[test]
    fn outliers_append_near_opposite_mean() {
        let ds = make_gaussian_twoclass(75, &[3.0, 3.0], &[-3.0, -3.0], 7).unwrap();
        let case1 = inject_outliers(&ds, &HashMap::from([(-1i8, 3usize)]), 11).unwrap();
        assert_eq!(case1.n_samples(), 153);
        for i in 150..153 {
            assert_eq!(case1.y[i], -1.0);
            // drawn around the positive-class mean (3,3)
            assert!(case1.x[(i, 0)] > 0.0 && case1.x[(i, 1)] > 0.0);
        }
        // originals untouched
        assert_eq!(case1.x.row(0), ds.x.row(0));
        let noop = inject_outliers(&ds, &HashMap::new(), 11).unwrap();
        assert_eq!(noop.n_samples(), 150);
        let case2 =
            inject_outliers(&ds, &HashMap::from([(-1i8, 3usize), (1i8, 3usize)]), 11).unwrap();
        assert_eq!(case2.n_samples(), 156);
    }

    #[test]
    fn label_noise_counts_and_involution() {
        let ds = make_gaussian_twoclass(50, &[3.0], &[-3.0], 2).unwrap();
        assert_eq!(inject_label_noise(&ds, 0.0, 5).unwrap().y, ds.y);
        let all = inject_label_noise(&ds, 1.0, 5).unwrap();
        assert!(all.y.iter().zip(&ds.y).all(|(a, b)| *a == -b));
        let noisy = inject_label_noise(&ds, 0.25, 5).unwrap();
        let flipped: Vec<usize> =
            (0..100).filter(|&i| noisy.y[i] != ds.y[i]).collect();
        assert_eq!(flipped.len(), 25);
        // flipping the same set again restores the original
        let mut restored = noisy.clone();
        for &i in &flipped {
            restored.y[i] = -restored.y[i];
        }
        assert_eq!(restored.y, ds.y);
    }

    #[test]
    fn feature_noise_variance_and_constant_guard() {
        let n = 100_000;
        let mut x = Array2::zeros((n, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..n {
            x[(i, 0)] = 2.0 * rng.sample::<f64, _>(StandardNormal); // variance 4
            x[(i, 1)] = 7.0; // constant
        }
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(x, y, "noise").unwrap();
        let noisy = inject_feature_noise(&ds, 0.25, 9).unwrap();
        let added: Vec<f64> = (0..n).map(|i| noisy.x[(i, 0)] - ds.x[(i, 0)]).collect();
        let mean = added.iter().sum::<f64>() / n as f64;
        let var = added.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 1.0).abs() < 0.05, "added-noise variance {var}");
        for i in 0..n {
            assert_eq!(noisy.x[(i, 1)], 7.0);
        }
        let same = inject_feature_noise(&ds, 0.0, 9).unwrap();
        assert_eq!(same.x, ds.x);
    }

    #[test]
    fn stratified_folds_balanced() {
        let ds = make_gaussian_twoclass(5, &[3.0], &[-3.0], 3).unwrap();
        let plan = stratified_kfold(&ds, 5, 1).unwrap();
        for fold in 0..5 {
            let test = plan.test_indices(fold);
            assert_eq!(test.len(), 2);
            let pos = test.iter().filter(|&&i| ds.y[i] == 1.0).count();
            assert_eq!(pos, 1);
        }
        // determinism
        let plan2 = stratified_kfold(&ds, 5, 1).unwrap();
        assert_eq!(plan.fold_of, plan2.fold_of);
        // folds partition the index set
        let mut seen = vec![false; 10];
        for fold in 0..5 {
            for i in plan.test_indices(fold) {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn uneven_strata_differ_by_at_most_one() {
        let x = Array2::zeros((11, 1));
        let y: Vec<f64> = (0..11).map(|i| if i < 6 { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(x, y, "uneven").unwrap();
        let plan = stratified_kfold(&ds, 5, 0).unwrap();
        for &cls in &[1.0, -1.0] {
            let mut counts = vec![0usize; 5];
            for i in 0..11 {
                if ds.y[i] == cls {
                    counts[plan.fold_of[i]] += 1;
                }
            }
            let (mn, mx) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(mx - mn <= 1, "class {cls}: {counts:?}");
        }
        assert!(stratified_kfold(&ds, 7, 0).is_err());
    }

    #[test]
    fn standardizer_basics() {
        let ds = toy();
        let s = Standardizer::fit(ds.x.view());
        let t = s.transform(ds.x.view());
        for j in 0..2 {
            let m: f64 = t.column(j).sum() / 4.0;
            assert!(m.abs() < 1e-12);
        }
    }
}
