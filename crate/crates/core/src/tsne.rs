//! Exact O(R^2) t-SNE into two dimensions.
//!
//! Input affinities use a Gaussian kernel whose bandwidth is calibrated per
//! point to a target perplexity; the map uses a Student-t kernel with one
//! degree of freedom, and the embedding minimizes `KL(P || Q)` (natural log)
//! by gradient descent with momentum and per-coordinate gains, starting from
//! a rescaled PCA projection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pca::{fit_pca, pair_labels, Source};

pub const OUTPUT_DIMS: usize = 2;
/// Floor applied to `p_ij` and `q_ij` inside logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Absolute tolerance on `2^H - perplexity` for the bandwidth search.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-5;
pub const MAX_BISECTION_STEPS: usize = 100;
const INIT_STD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TsneInit {
    /// First two principal components, scaled so the first has std 1e-4.
    #[default]
    Pca,
    /// Isotropic Gaussian with std 1e-4 drawn from `seed`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Length of the exaggeration phase; momentum switches at the same point.
    pub exaggeration_iters: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub init: TsneInit,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            init: TsneInit::Pca,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn with_perplexity(perplexity: f64) -> Self {
        Self {
            perplexity,
            ..Self::default()
        }
    }

    pub fn validate(&self, points: usize) -> Result<()> {
        check_perplexity(self.perplexity, points)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.early_exaggeration >= 1.0 && self.early_exaggeration.is_finite()) {
            return Err(Error::Config(format!(
                "early exaggeration must be >= 1, got {}",
                self.early_exaggeration
            )));
        }
        for m in [self.momentum_initial, self.momentum_final] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::Config(format!(
                    "momentum must lie in [0, 1), got {m}"
                )));
            }
        }
        Ok(())
    }
}

fn check_perplexity(perplexity: f64, points: usize) -> Result<()> {
    if !(perplexity > 0.0 && perplexity.is_finite()) {
        return Err(Error::Config(format!(
            "perplexity must be positive, got {perplexity}"
        )));
    }
    if perplexity >= points as f64 {
        return Err(Error::Config(format!(
            "perplexity {perplexity} must be smaller than the number of points ({points})"
        )));
    }
    Ok(())
}

/// Pairwise squared Euclidean distances between rows.
pub fn squared_distances(data: &Matrix) -> Matrix {
    let r = data.rows();
    let mut d = Matrix::zeros(r, r);
    for i in 0..r {
        for j in i + 1..r {
            let v: f64 = data
                .row(i)
                .iter()
                .zip(data.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

#[derive(Debug, Clone)]
pub struct Calibration {
    /// Row-stochastic `p_{j|i}` with zero diagonal.
    pub conditional: Matrix,
    /// Gaussian bandwidth per row.
    pub sigmas: Vec<f64>,
    /// Rows whose search ended outside `PERPLEXITY_TOLERANCE`; they use the
    /// closest bandwidth found.
    pub unconverged: Vec<usize>,
}

/// Fills `out` with the Gaussian row for precision `beta` and returns its
/// perplexity `exp(H_nats)`. `dist` is shifted by its minimum so the largest
/// weight is exactly one.
fn gaussian_row(dist: &[f64], shift: f64, beta: f64, skip: usize, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in dist.iter().zip(out.iter_mut()).enumerate() {
        if j == skip {
            *o = 0.0;
            continue;
        }
        let w = (-beta * (d - shift)).exp();
        *o = w;
        z += w;
        weighted += w * (d - shift);
    }
    out.iter_mut().for_each(|o| *o /= z);
    (z.ln() + beta * weighted / z).exp()
}

/// Binary search of each row's Gaussian precision so that `2^H(p_{.|i})`
/// matches `perplexity`.
pub fn conditional_affinities(sq_distances: &Matrix, perplexity: f64) -> Result<Calibration> {
    let r = sq_distances.rows();
    if sq_distances.cols() != r {
        return Err(Error::dim(r, sq_distances.cols()));
    }
    if r < 2 {
        return Err(Error::Degenerate(format!(
            "affinities need at least 2 points, got {r}"
        )));
    }
    check_perplexity(perplexity, r)?;
    if (0..r).any(|i| sq_distances[(i, i)] != 0.0) || !sq_distances.is_symmetric(0.0) {
        return Err(Error::Config(
            "distance matrix must be symmetric with zero diagonal".into(),
        ));
    }

    let mut conditional = Matrix::zeros(r, r);
    let mut sigmas = Vec::with_capacity(r);
    let mut unconverged = Vec::new();
    let mut row = vec![0.0; r];

    for i in 0..r {
        let dist = sq_distances.row(i);
        let shift = dist
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .fold(f64::INFINITY, f64::min);

        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let mut best = (f64::INFINITY, beta);
        let mut converged = false;
        for _ in 0..MAX_BISECTION_STEPS {
            let perp = gaussian_row(dist, shift, beta, i, &mut row);
            let err = perp - perplexity;
            if err.abs() < best.0 {
                best = (err.abs(), beta);
            }
            if err.abs() <= PERPLEXITY_TOLERANCE {
                converged = true;
                break;
            }
            if err > 0.0 {
                // too flat: sharpen
                lo = beta;
                beta = if hi.is_infinite() {
                    beta * 2.0
                } else {
                    0.5 * (beta + hi)
                };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        if !converged {
            beta = best.1;
            log::warn!(
                "perplexity calibration for row {i} stopped {:.3e} from target {perplexity}",
                best.0
            );
            unconverged.push(i);
        }
        gaussian_row(dist, shift, beta, i, conditional.row_mut(i));
        sigmas.push((0.5 / beta).sqrt());
    }

    Ok(Calibration {
        conditional,
        sigmas,
        unconverged,
    })
}

/// `p_ij = (p_{j|i} + p_{i|j}) / 2R`.
pub fn joint_affinities(conditional: &Matrix) -> Result<Matrix> {
    let r = conditional.rows();
    if conditional.cols() != r {
        return Err(Error::dim(r, conditional.cols()));
    }
    let denom = 2.0 * r as f64;
    let mut p = Matrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            if i != j {
                p[(i, j)] = (conditional[(i, j)] + conditional[(j, i)]) / denom;
            }
        }
    }
    Ok(p)
}

/// Student-t kernel `(1 + |y_i - y_j|^2)^-1` with zero diagonal, and its sum.
fn student_t_kernel(embedding: &Matrix) -> (Matrix, f64) {
    let r = embedding.rows();
    let mut w = Matrix::zeros(r, r);
    let mut sum = 0.0;
    for i in 0..r {
        let yi = embedding.row(i);
        for j in i + 1..r {
            let yj = embedding.row(j);
            let d2: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = 1.0 / (1.0 + d2);
            w[(i, j)] = v;
            w[(j, i)] = v;
            sum += 2.0 * v;
        }
    }
    (w, sum)
}

pub fn low_dim_affinities(embedding: &Matrix) -> Result<Matrix> {
    if embedding.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "map affinities need at least 2 points, got {}",
            embedding.rows()
        )));
    }
    let (w, sum) = student_t_kernel(embedding);
    Ok(w.scale(1.0 / sum))
}

/// `sum_ij p_ij ln(p_ij / q_ij)` over entries with `p_ij > 0`; both sides are
/// floored at `PROBABILITY_FLOOR` inside the log.
pub fn kl_divergence(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.rows() != q.rows() || p.cols() != q.cols() {
        return Err(Error::dim(p.rows() * p.cols(), q.rows() * q.cols()));
    }
    Ok(p.as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &qij)| pij * (pij.max(PROBABILITY_FLOOR) / qij.max(PROBABILITY_FLOOR)).ln())
        .sum())
}

fn gradient_from_kernel(
    p: &Matrix,
    embedding: &Matrix,
    w: &Matrix,
    sum: f64,
    exaggeration: f64,
) -> Matrix {
    let r = embedding.rows();
    let mut grad = Matrix::zeros(r, OUTPUT_DIMS);
    for i in 0..r {
        let yi = embedding.row(i);
        let mut g = [0.0; OUTPUT_DIMS];
        for j in 0..r {
            if i == j {
                continue;
            }
            let wij = w[(i, j)];
            let coeff = (exaggeration * p[(i, j)] - wij / sum) * wij;
            let yj = embedding.row(j);
            for d in 0..OUTPUT_DIMS {
                g[d] += coeff * (yi[d] - yj[d]);
            }
        }
        for d in 0..OUTPUT_DIMS {
            grad[(i, d)] = 4.0 * g[d];
        }
    }
    grad
}

/// Analytic gradient of `KL(P || Q(Y))` with respect to the embedding:
/// `4 sum_j (p_ij - q_ij)(y_i - y_j)(1 + |y_i - y_j|^2)^-1`.
pub fn kl_gradient(p: &Matrix, embedding: &Matrix) -> Result<Matrix> {
    let r = embedding.rows();
    if embedding.cols() != OUTPUT_DIMS {
        return Err(Error::dim(OUTPUT_DIMS, embedding.cols()));
    }
    if p.rows() != r || p.cols() != r {
        return Err(Error::dim(r, p.rows()));
    }
    let (w, sum) = student_t_kernel(embedding);
    Ok(gradient_from_kernel(p, embedding, &w, sum, 1.0))
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub embedding: Matrix,
    /// KL (nats, no exaggeration) of the final embedding.
    pub final_kl: f64,
    /// KL after each iteration's update.
    pub kl_trace: Vec<f64>,
    pub config: TsneConfig,
    pub labels: Option<Vec<Source>>,
    pub sigmas: Vec<f64>,
    pub unconverged_rows: Vec<usize>,
}

fn initial_embedding(data: &Matrix, config: &TsneConfig) -> Result<Matrix> {
    match config.init {
        TsneInit::Pca => {
            if data.cols() < OUTPUT_DIMS {
                return Err(Error::Config(format!(
                    "PCA initialisation needs at least {OUTPUT_DIMS} input columns, got {}",
                    data.cols()
                )));
            }
            let pca = fit_pca(data, OUTPUT_DIMS)?;
            let first = pca.projected.column(0);
            let n = first.len() as f64;
            let mean = first.iter().sum::<f64>() / n;
            // population std, matching the common reference recipe
            let std = (first.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if std == 0.0 {
                return Err(Error::Degenerate(
                    "first principal component has zero spread".into(),
                ));
            }
            Ok(pca.projected.scale(INIT_STD / std))
        }
        TsneInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let normal = Normal::new(0.0, INIT_STD).expect("valid std");
            let values = (0..data.rows() * OUTPUT_DIMS)
                .map(|_| normal.sample(&mut rng))
                .collect();
            Matrix::from_vec(data.rows(), OUTPUT_DIMS, values)
        }
    }
}

pub fn fit_tsne(data: &Matrix, config: &TsneConfig) -> Result<TsneResult> {
    let r = data.rows();
    if r < 4 {
        return Err(Error::Degenerate(format!(
            "t-SNE needs at least 4 points, got {r}"
        )));
    }
    config.validate(r)?;
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("dataset contains non-finite values".into()));
    }

    let calibration = conditional_affinities(&squared_distances(data), config.perplexity)?;
    let p = joint_affinities(&calibration.conditional)?;

    let mut y = initial_embedding(data, config)?;
    let mut update = Matrix::zeros(r, OUTPUT_DIMS);
    let mut gains = Matrix::from_vec(r, OUTPUT_DIMS, vec![1.0; r * OUTPUT_DIMS])?;
    let mut kl_trace = Vec::with_capacity(config.iterations);

    for it in 0..config.iterations {
        let (w, sum) = student_t_kernel(&y);
        if it > 0 {
            kl_trace.push(kl_divergence(&p, &w.scale(1.0 / sum))?);
        }
        let exploring = it < config.exaggeration_iters;
        let exaggeration = if exploring {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if exploring {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let grad = gradient_from_kernel(&p, &y, &w, sum, exaggeration);

        for ((g, u), gain) in grad
            .as_slice()
            .iter()
            .zip(update.as_mut_slice())
            .zip(gains.as_mut_slice())
        {
            *gain = if (*g > 0.0) != (*u > 0.0) {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(MIN_GAIN)
            };
            *u = momentum * *u - config.learning_rate * *gain * g;
        }
        for (v, u) in y.as_mut_slice().iter_mut().zip(update.as_slice()) {
            *v += u;
        }
        let centre = y.column_means();
        for i in 0..r {
            for (v, c) in y.row_mut(i).iter_mut().zip(&centre) {
                *v -= c;
            }
        }
        if y.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "embedding diverged at iteration {it}"
            )));
        }
    }

    let final_kl = kl_divergence(&p, &low_dim_affinities(&y)?)?;
    if config.iterations > 0 {
        kl_trace.push(final_kl);
    }

    Ok(TsneResult {
        embedding: y,
        final_kl,
        kl_trace,
        config: *config,
        labels: None,
        sigmas: calibration.sigmas,
        unconverged_rows: calibration.unconverged,
    })
}

/// Runs t-SNE on the rows of `non_entangled` followed by those of
/// `entangled`, labelling each output row with its source.
pub fn pair_tsne(
    non_entangled: &Matrix,
    entangled: &Matrix,
    config: &TsneConfig,
) -> Result<TsneResult> {
    if non_entangled.cols() != entangled.cols() {
        return Err(Error::dim(non_entangled.cols(), entangled.cols()));
    }
    let stacked = non_entangled.vstack(entangled)?;
    let mut result = fit_tsne(&stacked, config)?;
    result.labels = Some(pair_labels(non_entangled.rows(), entangled.rows()));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rows: usize, cols: usize, seed: u64, scale: f64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn column(values: &[f64]) -> Matrix {
        Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    /// Perplexity-in-bits bisection over log(sigma), written directly from
    /// the definitions.
    fn oracle_row(dist: &[f64], i: usize, perplexity: f64) -> (Vec<f64>, f64) {
        let row_for = |sigma: f64| {
            let w: Vec<f64> = dist
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    if j == i {
                        0.0
                    } else {
                        (-d / (2.0 * sigma * sigma)).exp()
                    }
                })
                .collect();
            let z: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|v| v / z).collect();
            let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.log2()).sum();
            (p, h.exp2())
        };
        let (mut lo, mut hi) = (-10f64, 10f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if row_for(mid.exp()).1 > perplexity {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let sigma = (0.5 * (lo + hi)).exp();
        (row_for(sigma).0, sigma)
    }

    #[test]
    fn two_points_take_all_mass() {
        let sq = squared_distances(&column(&[0.0, 3.0]));
        let cal = conditional_affinities(&sq, 1.5).unwrap();
        assert_eq!(cal.conditional[(0, 1)], 1.0);
        assert_eq!(cal.conditional[(1, 0)], 1.0);
        let p = joint_affinities(&cal.conditional).unwrap();
        assert_eq!(p[(0, 1)], 0.5);
        assert_eq!(p[(1, 0)], 0.5);
    }

    #[test]
    fn equidistant_points_give_uniform_rows() {
        let r = 6;
        let mut sq = Matrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    sq[(i, j)] = 2.0;
                }
            }
        }
        let cal = conditional_affinities(&sq, 3.0).unwrap();
        for i in 0..r {
            let row = cal.conditional.row(i);
            let h: f64 = row
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|v| -v * v.log2())
                .sum();
            assert!((h - ((r - 1) as f64).log2()).abs() < 1e-12);
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { 0.0 } else { 1.0 / (r - 1) as f64 };
                assert!((v - want).abs() < 1e-15);
            }
        }
        // the entropy cannot reach log2(3) on a regular simplex
        assert_eq!(cal.unconverged.len(), r);
    }

    #[test]
    fn five_points_match_scalar_bisection() {
        let data = column(&[0.0, 1.0, 2.0, 3.0, 10.0]);
        let sq = squared_distances(&data);
        let cal = conditional_affinities(&sq, 2.0).unwrap();
        assert!(cal.unconverged.is_empty());
        for i in 0..5 {
            let (row, sigma) = oracle_row(sq.row(i), i, 2.0);
            // points 1 and 2 have two equidistant nearest neighbours, so any
            // small enough sigma reaches perplexity 2 and sigma is not unique
            if i != 1 && i != 2 {
                assert!(
                    (cal.sigmas[i] - sigma).abs() < 1e-4 * sigma,
                    "row {i}: {} vs {sigma}",
                    cal.sigmas[i]
                );
            }
            for (j, expected) in row.iter().enumerate() {
                assert!((cal.conditional[(i, j)] - expected).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn calibration_hits_target_perplexity() {
        let data = random_matrix(100, 3, 8, 3.0);
        for perp in [3.0, 30.0, 99.0] {
            let cal = conditional_affinities(&squared_distances(&data), perp).unwrap();
            assert!(cal.unconverged.is_empty());
            for i in 0..100 {
                let row = cal.conditional.row(i);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert_eq!(row[i], 0.0);
                let h: f64 = row
                    .iter()
                    .filter(|&&v| v > 0.0)
                    .map(|v| -v * v.log2())
                    .sum();
                assert!((h.exp2() - perp).abs() <= 1e-3 * perp);
            }
        }
    }

    #[test]
    fn calibration_argument_errors() {
        let sq = squared_distances(&column(&[0.0, 1.0, 2.0]));
        assert!(matches!(
            conditional_affinities(&sq, 3.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            conditional_affinities(&sq, 0.0),
            Err(Error::Config(_))
        ));
        let mut bad = sq.clone();
        bad[(0, 0)] = 1.0;
        assert!(conditional_affinities(&bad, 1.5).is_err());
    }

    #[test]
    fn joint_affinities_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut c = Matrix::zeros(4, 4);
        for i in 0..4 {
            let mut s = 0.0;
            for j in 0..4 {
                if i != j {
                    c[(i, j)] = rng.random_range(0.1..1.0);
                    s += c[(i, j)];
                }
            }
            c.row_mut(i).iter_mut().for_each(|v| *v /= s);
        }
        let p = joint_affinities(&c).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j {
                    0.0
                } else {
                    (c[(i, j)] + c[(j, i)]) / 8.0
                };
                assert_eq!(p[(i, j)], want);
            }
        }
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // symmetric input: P = C / R
        let sym = Matrix::from_rows(&[[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]).unwrap();
        let p = joint_affinities(&sym).unwrap();
        assert!(p.max_abs_diff(&sym.scale(1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn low_dim_examples() {
        let coincident = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let q = low_dim_affinities(&coincident).unwrap();
        assert_eq!(q[(0, 1)], 0.5);
        assert_eq!(q[(1, 0)], 0.5);

        let h = 3f64.sqrt() / 2.0;
        let tri = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let q = low_dim_affinities(&tri).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 1.0 / 6.0 };
                assert!((q[(i, j)] - want).abs() < 1e-15);
            }
        }

        let y = random_matrix(5, 2, 12, 2.0);
        let q = low_dim_affinities(&y).unwrap();
        let kernel = |i: usize, j: usize| {
            let dx = y[(i, 0)] - y[(j, 0)];
            let dy = y[(i, 1)] - y[(j, 1)];
            1.0 / (1.0 + dx * dx + dy * dy)
        };
        let mut total = 0.0;
        for k in 0..5 {
            for l in 0..5 {
                if k != l {
                    total += kernel(k, l);
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 0.0 } else { kernel(i, j) / total };
                assert!((q[(i, j)] - want).abs() < 1e-15);
            }
        }
        assert!(low_dim_affinities(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn kl_examples() {
        let y = random_matrix(5, 2, 1, 1.0);
        let q = low_dim_affinities(&y).unwrap();
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);

        let half = Matrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]).unwrap();
        assert_eq!(kl_divergence(&half, &half).unwrap(), 0.0);

        let p = Matrix::from_rows(&[
            [0.0, 1.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 0.0, 1.0 / 6.0],
            [1.0 / 6.0, 1.0 / 6.0, 0.0],
        ])
        .unwrap();
        let q = Matrix::from_rows(&[[0.0, 0.25, 0.125], [0.25, 0.0, 0.125], [0.125, 0.125, 0.0]])
            .unwrap();
        assert!((kl_divergence(&p, &q).unwrap() - 0.05663301226513241).abs() < 1e-15);

        // q underflow is floored rather than producing infinity
        let q0 = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(kl_divergence(&half, &q0).unwrap().is_finite());
        assert!(kl_divergence(&half, &Matrix::zeros(3, 3)).is_err());
    }

    fn kl_at(p: &Matrix, y: &Matrix) -> f64 {
        kl_divergence(p, &low_dim_affinities(y).unwrap()).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..5 {
            let data = random_matrix(6, 3, seed, 2.0);
            let cal = conditional_affinities(&squared_distances(&data), 2.5).unwrap();
            let p = joint_affinities(&cal.conditional).unwrap();
            let y = random_matrix(6, 2, 100 + seed, 1.5);
            let grad = kl_gradient(&p, &y).unwrap();
            let h = 1e-6;
            for idx in 0..12 {
                let mut plus = y.clone();
                plus.as_mut_slice()[idx] += h;
                let mut minus = y.clone();
                minus.as_mut_slice()[idx] -= h;
                let fd = (kl_at(&p, &plus) - kl_at(&p, &minus)) / (2.0 * h);
                let g = grad.as_slice()[idx];
                assert!(
                    (g - fd).abs() <= 1e-4 * g.abs().max(1e-3),
                    "seed {seed} idx {idx}: {g} vs {fd}"
                );
            }
        }
    }

    fn blobs(seed: u64) -> (Matrix, Matrix) {
        // unit-variance blobs 20 sigma apart
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut blob = |offset: f64| {
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| {
                    (0..3)
                        .map(|d| normal.sample(&mut rng) + if d == 0 { offset } else { 0.0 })
                        .collect()
                })
                .collect();
            Matrix::from_rows(&rows).unwrap()
        };
        (blob(0.0), blob(20.0))
    }

    #[test]
    fn separated_blobs_stay_separated() {
        let (a, b) = blobs(31);
        let res = pair_tsne(&a, &b, &TsneConfig::with_perplexity(5.0)).unwrap();
        let labels = res.labels.as_ref().unwrap();
        let centroid = |src: Source| {
            let rows: Vec<&[f64]> = (0..40)
                .filter(|&i| labels[i] == src)
                .map(|i| res.embedding.row(i))
                .collect();
            let n = rows.len() as f64;
            [
                rows.iter().map(|r| r[0]).sum::<f64>() / n,
                rows.iter().map(|r| r[1]).sum::<f64>() / n,
            ]
        };
        let (ca, cb) = (centroid(Source::NonEntangled), centroid(Source::Entangled));
        let dist = |p: &[f64], c: [f64; 2]| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        let correct = (0..40)
            .filter(|&i| {
                let y = res.embedding.row(i);
                let nearest = if dist(y, ca) <= dist(y, cb) {
                    Source::NonEntangled
                } else {
                    Source::Entangled
                };
                nearest == labels[i]
            })
            .count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn final_kl_is_recomputable_and_fit_is_deterministic() {
        let data = random_matrix(30, 3, 5, 3.0);
        let cfg = TsneConfig {
            iterations: 300,
            ..TsneConfig::with_perplexity(8.0)
        };
        let a = fit_tsne(&data, &cfg).unwrap();
        let b = fit_tsne(&data, &cfg).unwrap();
        assert_eq!(a.embedding, b.embedding);
        assert_eq!(a.kl_trace, b.kl_trace);
        assert_eq!(a.kl_trace.len(), 300);
        assert_eq!(*a.kl_trace.last().unwrap(), a.final_kl);

        let cal = conditional_affinities(&squared_distances(&data), 8.0).unwrap();
        let p = joint_affinities(&cal.conditional).unwrap();
        let recomputed = kl_divergence(&p, &low_dim_affinities(&a.embedding).unwrap()).unwrap();
        assert!((recomputed - a.final_kl).abs() < 1e-9);
        assert!(a.final_kl >= 0.0);
        assert!(a.final_kl <= a.kl_trace[cfg.exaggeration_iters]);
    }

    #[test]
    fn random_init_uses_seed() {
        let data = random_matrix(12, 3, 2, 1.0);
        let cfg = TsneConfig {
            iterations: 50,
            init: TsneInit::Random,
            seed: 9,
            ..TsneConfig::with_perplexity(3.0)
        };
        let a = fit_tsne(&data, &cfg).unwrap();
        let b = fit_tsne(&data, &TsneConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.embedding, b.embedding);
    }

    #[test]
    fn perplexity_boundaries() {
        let a = random_matrix(100, 3, 1, 3.0);
        let b = random_matrix(100, 3, 2, 3.0);
        let short = TsneConfig {
            iterations: 5,
            ..TsneConfig::with_perplexity(199.0)
        };
        let res = pair_tsne(&a, &b, &short).unwrap();
        let labels = res.labels.unwrap();
        assert_eq!(
            labels.iter().filter(|&&s| s == Source::Entangled).count(),
            100
        );
        let too_big = TsneConfig {
            perplexity: 200.0,
            ..short
        };
        assert!(matches!(pair_tsne(&a, &b, &too_big), Err(Error::Config(_))));
        assert!(matches!(
            fit_tsne(&a, &TsneConfig::with_perplexity(100.0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            pair_tsne(&a, &random_matrix(100, 6, 3, 1.0), &short),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            fit_tsne(&random_matrix(3, 3, 0, 1.0), &short),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn pair_with_itself_is_structurally_valid() {
        let a = random_matrix(20, 3, 6, 2.0);
        let cfg = TsneConfig {
            iterations: 100,
            ..TsneConfig::with_perplexity(5.0)
        };
        let res = pair_tsne(&a, &a, &cfg).unwrap();
        assert_eq!(res.embedding.rows(), 40);
        let labels = res.labels.unwrap();
        assert_eq!(
            labels
                .iter()
                .filter(|&&s| s == Source::NonEntangled)
                .count(),
            20
        );
    }
}
