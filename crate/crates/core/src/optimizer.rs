//! Stochastic hill climbing with random restarts (SHC-RR) on the angle torus
//! `[0, 2*pi)^D`, and the batch driver that turns independent runs into an
//! experiment dataset.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MaxCutProblem;
use crate::linalg::Matrix;
use crate::qaoa::{wrap_angle, ParameterVector, QaoaConfig, QaoaObjective};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShcrrConfig {
    pub restarts: usize,
    pub iterations_per_restart: usize,
    pub step_sigma: f64,
    pub seed: u64,
    /// Keep the (iteration, incumbent) trace of the winning restart.
    #[serde(skip)]
    pub record_trace: bool,
}

impl Default for ShcrrConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            iterations_per_restart: 2000,
            step_sigma: 0.1,
            seed: 0,
            record_trace: false,
        }
    }
}

impl ShcrrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.iterations_per_restart == 0 {
            return Err(Error::Config(
                "iterations per restart must be at least 1".into(),
            ));
        }
        if !(self.step_sigma > 0.0 && self.step_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "step sigma must be positive and finite, got {}",
                self.step_sigma
            )));
        }
        Ok(())
    }
}

pub type Trace = Vec<(usize, f64)>;

/// Improve-only local search. Each iteration perturbs every coordinate by
/// `N(0, step_sigma)` (wrapped onto `[0, 2*pi)`) and accepts the candidate
/// only if the objective strictly increases.
///
/// When `trace` is given, the incumbent value after every iteration is
/// appended to it.
pub fn hill_climb<F, R>(
    objective: &mut F,
    start: &[f64],
    iterations: usize,
    step_sigma: f64,
    rng: &mut R,
    mut trace: Option<&mut Trace>,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    let step = Normal::new(0.0, step_sigma)
        .map_err(|e| Error::Config(format!("invalid step sigma {step_sigma}: {e}")))?;
    let mut current = start.to_vec();
    let mut current_value = objective(&current)?;
    let mut candidate = vec![0.0; current.len()];

    for it in 0..iterations {
        for (c, x) in candidate.iter_mut().zip(&current) {
            *c = wrap_angle(x + step.sample(rng));
        }
        let value = objective(&candidate)?;
        if value > current_value {
            std::mem::swap(&mut current, &mut candidate);
            current_value = value;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push((it, current_value));
        }
    }
    Ok((current, current_value))
}

/// Outcome of one SHC-RR run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub best_params: ParameterVector,
    pub best_value: f64,
    pub restart_index: usize,
    /// Final incumbent value of every restart, in restart order.
    pub restart_values: Vec<f64>,
    pub trace: Option<Trace>,
}

/// Runs `config.restarts` hill climbs from uniform random starts and keeps
/// the best. All randomness comes from one ChaCha8 stream seeded with
/// `config.seed`; ties keep the earliest restart.
pub fn shc_rr<F>(objective: &mut F, config: &ShcrrConfig, dims: usize) -> Result<RunRecord>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    if !matches!(dims, 3 | 6 | 9) {
        return Err(Error::Config(format!(
            "parameter dimension must be 3, 6 or 9, got {dims}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Vec<f64>, f64, usize, Option<Trace>)> = None;
    let mut restart_values = Vec::with_capacity(config.restarts);

    for restart in 0..config.restarts {
        let start: Vec<f64> = (0..dims).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut trace = config.record_trace.then(Vec::new);
        let (params, value) = hill_climb(
            objective,
            &start,
            config.iterations_per_restart,
            config.step_sigma,
            &mut rng,
            trace.as_mut(),
        )?;
        restart_values.push(value);
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((params, value, restart, trace));
        }
    }

    let (params, best_value, restart_index, trace) = best.expect("restarts >= 1");
    Ok(RunRecord {
        best_params: ParameterVector::from_flat(&params)?,
        best_value,
        restart_index,
        restart_values,
        trace,
    })
}

/// Seed of run `run_index` in a batch with `master_seed`.
pub fn run_seed(master_seed: u64, run_index: usize) -> u64 {
    master_seed.wrapping_add(run_index as u64)
}

/// Everything needed to regenerate a dataset bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub problem: MaxCutProblem,
    pub qaoa: QaoaConfig,
    pub shcrr: ShcrrConfig,
    pub runs: usize,
    pub master_seed: u64,
    pub run_seeds: Vec<u64>,
    pub best_values: Vec<f64>,
    pub restart_indices: Vec<usize>,
}

impl DatasetMetadata {
    /// `4n cyclic 3 p ent` style label.
    pub fn label(&self) -> String {
        format!("{} {}", self.problem.label(), self.qaoa.model_label())
    }
}

/// `runs x 3L` matrix of best-run angles plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDataset {
    pub matrix: Matrix,
    pub metadata: DatasetMetadata,
}

impl ExperimentDataset {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dims(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column_names(&self) -> Vec<String> {
        ParameterVector::column_names(self.metadata.qaoa.depth)
    }
}

/// Executes `runs` independent SHC-RR runs (run `r` uses seed
/// `ocfg.seed + r`) in parallel and collects them in run order.
pub fn run_experiment_batch(
    problem: &MaxCutProblem,
    qcfg: &QaoaConfig,
    ocfg: &ShcrrConfig,
    runs: usize,
) -> Result<ExperimentDataset> {
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    ocfg.validate()?;
    let objective = QaoaObjective::new(problem.clone(), *qcfg)?;
    let dims = objective.dims();

    let records: Vec<RunRecord> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = ShcrrConfig {
                seed: run_seed(ocfg.seed, r),
                record_trace: false,
                ..*ocfg
            };
            shc_rr(&mut |x: &[f64]| objective.evaluate(x), &cfg, dims)
        })
        .collect::<Result<_>>()?;

    let mut matrix = Matrix::zeros(runs, dims);
    for (r, rec) in records.iter().enumerate() {
        matrix
            .row_mut(r)
            .copy_from_slice(&rec.best_params.flatten());
    }
    Ok(ExperimentDataset {
        matrix,
        metadata: DatasetMetadata {
            problem: problem.clone(),
            qaoa: *qcfg,
            shcrr: ShcrrConfig {
                record_trace: false,
                ..*ocfg
            },
            runs,
            master_seed: ocfg.seed,
            run_seeds: (0..runs).map(|r| run_seed(ocfg.seed, r)).collect(),
            best_values: records.iter().map(|r| r.best_value).collect(),
            restart_indices: records.iter().map(|r| r.restart_index).collect(),
        },
    })
}
