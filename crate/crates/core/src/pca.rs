//! Principal component analysis via the sample covariance matrix and the
//! Jacobi eigen-solver.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};

/// Which dataset a row of a pair analysis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    NonEntangled,
    Entangled,
}

impl Source {
    pub fn from_entangled(entangled: bool) -> Self {
        if entangled {
            Source::Entangled
        } else {
            Source::NonEntangled
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::NonEntangled => "non-entangled",
            Source::Entangled => "entangled",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Row labels for a pair analysis: the first `len_a` rows come from the
/// non-entangled dataset.
pub fn pair_labels(len_a: usize, len_b: usize) -> Vec<Source> {
    std::iter::repeat_n(Source::NonEntangled, len_a)
        .chain(std::iter::repeat_n(Source::Entangled, len_b))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PcaOptions {
    /// Divide each centered column by its sample standard deviation.
    pub zscore: bool,
}

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// `k x D`; row `i` is the unit eigenvector of the `i`-th largest eigenvalue.
    pub components: Matrix,
    /// Top-`k` eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// All `D` eigenvalues, descending.
    pub all_eigenvalues: Vec<f64>,
    /// `eigenvalues[i] / sum(all_eigenvalues)`.
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
    /// Per-column divisor applied after centering (z-score mode only).
    pub scale: Option<Vec<f64>>,
    /// `R x k` projection of the fitted rows.
    pub projected: Matrix,
    /// Source of every row for pair fits.
    pub labels: Option<Vec<Source>>,
}

impl PcaResult {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn dims(&self) -> usize {
        self.components.cols()
    }

    fn standardize_row(&self, row: &[f64], out: &mut [f64]) {
        for (d, o) in out.iter_mut().enumerate() {
            let mut v = row[d] - self.mean[d];
            if let Some(s) = &self.scale {
                v /= s[d];
            }
            *o = v;
        }
    }

    /// `components * (row - mean)`.
    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dims() {
            return Err(Error::dim(self.dims(), row.len()));
        }
        let mut centered = vec![0.0; row.len()];
        self.standardize_row(row, &mut centered);
        Ok(self
            .components
            .iter_rows()
            .map(|axis| axis.iter().zip(&centered).map(|(a, c)| a * c).sum())
            .collect())
    }
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Descending eigenvalue; ties broken by the first differing eigenvector
/// component, larger first.
fn compare_pairs(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>), tie_tol: f64) -> Ordering {
    if (a.0 - b.0).abs() > tie_tol {
        return b.0.total_cmp(&a.0);
    }
    a.1.iter()
        .zip(&b.1)
        .map(|(x, y)| y.total_cmp(x))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub fn fit_pca(dataset: &Matrix, k: usize) -> Result<PcaResult> {
    fit_pca_with(dataset, k, PcaOptions::default())
}

pub fn fit_pca_with(dataset: &Matrix, k: usize, options: PcaOptions) -> Result<PcaResult> {
    let (r, d) = (dataset.rows(), dataset.cols());
    if r < 2 {
        return Err(Error::Degenerate(format!(
            "PCA needs at least 2 rows, got {r}"
        )));
    }
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "component count {k} outside 1..={d}"
        )));
    }
    if dataset.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("dataset contains non-finite values".into()));
    }

    let mean = dataset.column_means();
    let mut centered = dataset.clone();
    for i in 0..r {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }

    let scale = if options.zscore {
        let mut sd = vec![0.0; d];
        for row in centered.iter_rows() {
            for (s, v) in sd.iter_mut().zip(row) {
                *s += v * v;
            }
        }
        for (c, s) in sd.iter_mut().enumerate() {
            *s = (*s / (r - 1) as f64).sqrt();
            if *s == 0.0 {
                return Err(Error::Degenerate(format!(
                    "column {c} is constant and cannot be standardized"
                )));
            }
        }
        for i in 0..r {
            for (v, s) in centered.row_mut(i).iter_mut().zip(&sd) {
                *v /= s;
            }
        }
        Some(sd)
    } else {
        None
    };

    let cov = centered
        .transpose()
        .matmul(&centered)?
        .scale(1.0 / (r - 1) as f64);
    let eig = jacobi_eigen(&cov)?;

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|i| {
            let mut v = eig.vectors.column(i);
            fix_sign(&mut v);
            // the covariance is PSD; negative values are rounding noise
            (eig.values[i].max(0.0), v)
        })
        .collect();
    let tie_tol = 1e-12 * cov.frobenius_norm();
    pairs.sort_by(|a, b| compare_pairs(a, b, tie_tol));
    // tie-broken neighbours may be out of order by at most tie_tol
    for i in 1..d {
        pairs[i].0 = pairs[i].0.min(pairs[i - 1].0);
    }

    let total: f64 = pairs.iter().map(|p| p.0).sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("dataset has zero total variance".into()));
    }

    let all_eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let eigenvalues = all_eigenvalues[..k].to_vec();
    let explained_variance_ratio = eigenvalues.iter().map(|l| l / total).collect();
    let components =
        Matrix::from_rows(&pairs[..k].iter().map(|p| p.1.clone()).collect::<Vec<_>>())?;
    let projected = centered.matmul(&components.transpose())?;

    Ok(PcaResult {
        components,
        eigenvalues,
        all_eigenvalues,
        explained_variance_ratio,
        mean,
        scale,
        projected,
        labels: None,
    })
}

/// Fits one PCA on the rows of `non_entangled` followed by the rows of
/// `entangled`, keeping per-row source labels.
pub fn pair_pca(non_entangled: &Matrix, entangled: &Matrix, k: usize) -> Result<PcaResult> {
    pair_pca_with(non_entangled, entangled, k, PcaOptions::default())
}

pub fn pair_pca_with(
    non_entangled: &Matrix,
    entangled: &Matrix,
    k: usize,
    options: PcaOptions,
) -> Result<PcaResult> {
    if non_entangled.cols() != entangled.cols() {
        return Err(Error::dim(non_entangled.cols(), entangled.cols()));
    }
    let stacked = non_entangled.vstack(entangled)?;
    let mut result = fit_pca_with(&stacked, k, options)?;
    result.labels = Some(pair_labels(non_entangled.rows(), entangled.rows()));
    Ok(result)
}
