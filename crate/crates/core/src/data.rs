//! In-memory datasets: `(x, y, z)` rows with split tags, stratified
//! splitting, the subgroup-skew protocol, and a synthetic Gaussian-subgroup
//! generator that stands in for encoder-based text datasets.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

pub const SPLITS: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

/// Feature matrix with a task label, a sensitive attribute, and a split tag
/// per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub sensitive: Vec<usize>,
    pub split: Vec<Split>,
    pub feature_names: Vec<String>,
}

/// One split's rows, extracted by value for the training loop.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub sensitive: Vec<usize>,
}

impl Dataset {
    /// Validates that all per-row fields have equal length. New datasets are
    /// tagged entirely `Train` until [`split_dataset`] assigns tags.
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        sensitive: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Dataset> {
        let n = features.rows();
        if labels.len() != n || sensitive.len() != n {
            return Err(Error::Shape(format!(
                "{n} feature rows but {} labels and {} sensitive tags",
                labels.len(),
                sensitive.len()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        Ok(Dataset { features, labels, sensitive, split: vec![Split::Train; n], feature_names })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Number of task classes, as 1 + the largest label.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    /// Number of sensitive groups, as 1 + the largest group id.
    pub fn n_groups(&self) -> usize {
        self.sensitive.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }

    /// Copies one split out into contiguous storage.
    pub fn split_data(&self, split: Split) -> SplitData {
        let idx = self.indices_of(split);
        let mut features = Matrix::zeros(idx.len(), self.dim());
        let mut labels = Vec::with_capacity(idx.len());
        let mut sensitive = Vec::with_capacity(idx.len());
        for (row, &i) in idx.iter().enumerate() {
            features.row_mut(row).copy_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
            sensitive.push(self.sensitive[i]);
        }
        SplitData { features, labels, sensitive }
    }

    /// Rows per `(label, group)` cell within one split, in deterministic
    /// cell order.
    pub fn cell_counts(&self, split: Split) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for i in 0..self.len() {
            if self.split[i] == split {
                *counts.entry((self.labels[i], self.sensitive[i])).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Errors unless every class and every group occurs in the train split.
    pub fn check_train_coverage(&self) -> Result<()> {
        let train = self.indices_of(Split::Train);
        for class in 0..self.n_classes() {
            if !train.iter().any(|&i| self.labels[i] == class) {
                return Err(Error::Usage(format!("class {class} missing from train split")));
            }
        }
        for group in 0..self.n_groups() {
            if !train.iter().any(|&i| self.sensitive[i] == group) {
                return Err(Error::Usage(format!("group {group} missing from train split")));
            }
        }
        Ok(())
    }
}

/// How [`split_dataset`] assigned tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSummary {
    /// False when some `(y, z)` cell was too small and the split fell back
    /// to a global (unstratified) shuffle.
    pub stratified: bool,
    /// Rows per split, in `[train, valid, test]` order.
    pub counts: [usize; 3],
}

/// Largest-remainder apportionment of `k` items to `fractions`; ties go to
/// the earlier bucket so the result is deterministic.
fn apportion(k: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let mut base = [0usize; 3];
    let mut rema: Vec<(f64, usize)> = Vec::with_capacity(3);
    let mut assigned = 0usize;
    for (i, &f) in fractions.iter().enumerate() {
        let quota = f * k as f64;
        base[i] = quota.floor() as usize;
        assigned += base[i];
        rema.push((quota - quota.floor(), i));
    }
    rema.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for j in 0..(k - assigned) {
        base[rema[j % 3].1] += 1;
    }
    base
}

/// Assigns train/valid/test tags in place, stratified by `(y, z)` cell.
///
/// Fractions must sum to 1. Cells with fewer than 3 rows force a fallback
/// to a global seeded shuffle (reported via the summary, not silently).
/// Deterministic: the same seed always produces the same assignment.
pub fn split_dataset(
    dataset: &mut Dataset,
    fractions: [f64; 3],
    seed: u64,
) -> Result<SplitSummary> {
    if fractions.iter().any(|&f| f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Param(format!("split fractions {fractions:?} must be >= 0 and sum to 1")));
    }
    if dataset.is_empty() {
        return Err(Error::Usage("cannot split an empty dataset".into()));
    }
    let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..dataset.len() {
        cells.entry((dataset.labels[i], dataset.sensitive[i])).or_default().push(i);
    }
    let stratified = cells.values().all(|rows| rows.len() >= 3);
    let groups: Vec<Vec<usize>> = if stratified {
        cells.into_values().collect()
    } else {
        vec![(0..dataset.len()).collect()]
    };
    let mut rng = rng::stream(seed, rng::tag::SHUFFLE);
    let mut counts = [0usize; 3];
    for mut rows in groups {
        rows.shuffle(&mut rng);
        let quota = apportion(rows.len(), &fractions);
        let mut cursor = 0usize;
        for (slot, &take) in SPLITS.iter().zip(&quota) {
            for &i in &rows[cursor..cursor + take] {
                dataset.split[i] = *slot;
            }
            cursor += take;
        }
        for (c, q) in counts.iter_mut().zip(&quota) {
            *c += q;
        }
    }
    Ok(SplitSummary { stratified, counts })
}

/// Target training-set composition per `(label, group)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewSpec {
    proportions: BTreeMap<(usize, usize), f64>,
}

impl SkewSpec {
    /// Fractions must be non-negative and sum to 1.
    pub fn new(proportions: BTreeMap<(usize, usize), f64>) -> Result<SkewSpec> {
        if proportions.is_empty() {
            return Err(Error::Usage("skew spec needs at least one cell".into()));
        }
        if proportions.values().any(|&f| f < 0.0) {
            return Err(Error::Param("skew fractions must be non-negative".into()));
        }
        let total: f64 = proportions.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!("skew fractions sum to {total}, expected 1")));
        }
        Ok(SkewSpec { proportions })
    }

    /// The 2x2 protocol used for binary task/attribute: fractions for cells
    /// `(y=1,z=1), (y=0,z=1), (y=1,z=0), (y=0,z=0)`.
    pub fn binary(f11: f64, f01: f64, f10: f64, f00: f64) -> Result<SkewSpec> {
        let mut m = BTreeMap::new();
        m.insert((1, 1), f11);
        m.insert((0, 1), f01);
        m.insert((1, 0), f10);
        m.insert((0, 0), f00);
        SkewSpec::new(m)
    }

    pub fn proportions(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.proportions
    }
}

/// Subsamples the train split so its `(y, z)` composition matches `spec` at
/// the largest achievable size; valid/test rows are untouched. Rows are
/// dropped, never duplicated, and surviving rows keep their original order.
pub fn skew_subgroups(dataset: &Dataset, spec: &SkewSpec, seed: u64) -> Result<Dataset> {
    let available = dataset.cell_counts(Split::Train);
    for (cell, &frac) in spec.proportions() {
        if frac > 0.0 && !available.contains_key(cell) {
            return Err(Error::Usage(format!(
                "skew spec requests cell (y={}, z={}) absent from the train split",
                cell.0, cell.1
            )));
        }
    }
    for cell in available.keys() {
        if !spec.proportions().contains_key(cell) {
            return Err(Error::Usage(format!(
                "skew spec does not cover train cell (y={}, z={})",
                cell.0, cell.1
            )));
        }
    }
    // Largest total m such that every cell can supply round(f * m) rows.
    let mut m = usize::MAX;
    for (cell, &frac) in spec.proportions() {
        if frac > 0.0 {
            m = m.min((available[cell] as f64 / frac).floor() as usize);
        }
    }
    let mut keep_per_cell: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (cell, &frac) in spec.proportions() {
        let want = (frac * m as f64).round() as usize;
        keep_per_cell.insert(*cell, want.min(*available.get(cell).unwrap_or(&0)));
    }

    let mut rng = rng::stream(seed, rng::tag::SHUFFLE);
    let mut keep = vec![true; dataset.len()];
    let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for i in dataset.indices_of(Split::Train) {
        keep[i] = false; // train rows are kept only by explicit selection below
        cells.entry((dataset.labels[i], dataset.sensitive[i])).or_default().push(i);
    }
    for (cell, mut rows) in cells {
        let quota = keep_per_cell.get(&cell).copied().unwrap_or(0);
        rows.shuffle(&mut rng);
        for &i in rows.iter().take(quota) {
            keep[i] = true;
        }
    }

    let kept: Vec<usize> = (0..dataset.len()).filter(|&i| keep[i]).collect();
    let mut features = Matrix::zeros(kept.len(), dataset.dim());
    let mut labels = Vec::with_capacity(kept.len());
    let mut sensitive = Vec::with_capacity(kept.len());
    let mut split = Vec::with_capacity(kept.len());
    for (row, &i) in kept.iter().enumerate() {
        features.row_mut(row).copy_from_slice(dataset.features.row(i));
        labels.push(dataset.labels[i]);
        sensitive.push(dataset.sensitive[i]);
        split.push(dataset.split[i]);
    }
    Ok(Dataset { features, labels, sensitive, split, feature_names: dataset.feature_names.clone() })
}

/// Generates a balanced synthetic dataset: rows cycle through the
/// `(class, group)` cells, and features are drawn around
/// `class_means[y] ± group_shift` (plus for `z = 1`, minus for `z = 0`)
/// with isotropic Gaussian noise.
pub fn make_synthetic(
    n: usize,
    dim: usize,
    class_means: &[Vec<f64>],
    group_shift: &[f64],
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Param("synthetic dataset size must be positive".into()));
    }
    if dim < 2 {
        return Err(Error::Param("synthetic dimension must be at least 2".into()));
    }
    if !(noise_std > 0.0) {
        return Err(Error::Param(format!("noise std must be positive, got {noise_std}")));
    }
    if class_means.is_empty() || class_means.iter().any(|m| m.len() != dim) || group_shift.len() != dim
    {
        return Err(Error::Shape("class means and group shift must match the dimension".into()));
    }
    let classes = class_means.len();
    let mut rng = rng::stream(seed, rng::tag::SHUFFLE);
    let normal = StandardNormal;
    let mut features = Matrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    let mut sensitive = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i / 2) % classes;
        let z = i % 2;
        let sign = if z == 1 { 1.0 } else { -1.0 };
        let row = features.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            let noise: f64 = normal.sample(&mut rng);
            *v = class_means[y][j] + sign * group_shift[j] + noise_std * noise;
        }
        labels.push(y);
        sensitive.push(z);
    }
    let feature_names = (0..dim).map(|j| format!("f{j}")).collect();
    Dataset::new(features, labels, sensitive, feature_names)
}

/// Standardizes the given columns to mean 0 and variance 1 using statistics
/// from the train split only, then applies them to every row. A constant
/// column on the train split is a degenerate input.
pub fn standardize_columns(dataset: &mut Dataset, columns: &[usize]) -> Result<()> {
    let train = dataset.indices_of(Split::Train);
    if train.is_empty() {
        return Err(Error::Usage("standardization needs a non-empty train split".into()));
    }
    for &col in columns {
        if col >= dataset.dim() {
            return Err(Error::Shape(format!("column {col} out of range")));
        }
        let n = train.len() as f64;
        let mean = train.iter().map(|&i| dataset.features[(i, col)]).sum::<f64>() / n;
        let var = train
            .iter()
            .map(|&i| {
                let d = dataset.features[(i, col)] - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        if var == 0.0 {
            return Err(Error::DegenerateInput(format!(
                "column '{}' is constant on the train split",
                dataset.feature_names[col]
            )));
        }
        let std = var.sqrt();
        for i in 0..dataset.len() {
            let v = &mut dataset.features[(i, col)];
            *v = (*v - mean) / std;
        }
    }
    Ok(())
}
