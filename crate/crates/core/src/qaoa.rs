//! QAOA circuits with an (optionally entangled) X/Y mixing operator, scored by
//! the expected cut value of the final state.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MaxCutProblem;
use crate::simulator::Statevector;

pub const MAX_DEPTH: usize = 3;
pub const PARAMS_PER_LAYER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    #[default]
    Plus,
    Zero,
}

impl fmt::Display for InitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitState::Plus => "plus",
            InitState::Zero => "zero",
        })
    }
}

impl FromStr for InitState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(InitState::Plus),
            "zero" => Ok(InitState::Zero),
            other => Err(Error::Config(format!("unknown initial state {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QaoaConfig {
    pub depth: usize,
    pub entangled: bool,
    #[serde(default)]
    pub init: InitState,
}

impl QaoaConfig {
    pub fn new(depth: usize, entangled: bool, init: InitState) -> Result<Self> {
        let cfg = Self {
            depth,
            entangled,
            init,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return Err(Error::Config(format!(
                "QAOA depth must be in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        PARAMS_PER_LAYER * self.depth
    }

    /// Table label in the `3 p` / `3 p ent` style.
    pub fn model_label(&self) -> String {
        let p = self.parameter_count();
        if self.entangled {
            format!("{p} p ent")
        } else {
            format!("{p} p")
        }
    }
}

/// Maps an angle onto `[0, 2*pi)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerAngles {
    pub gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Per-layer `(gamma, beta1, beta2)` angles, each stored in `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    layers: Vec<LayerAngles>,
}

impl ParameterVector {
    pub fn new(layers: Vec<LayerAngles>) -> Self {
        Self {
            layers: layers
                .into_iter()
                .map(|l| LayerAngles {
                    gamma: wrap_angle(l.gamma),
                    beta1: wrap_angle(l.beta1),
                    beta2: wrap_angle(l.beta2),
                })
                .collect(),
        }
    }

    /// Reads `(gamma1, beta1_1, beta1_2, gamma2, ...)`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.is_empty() || !flat.len().is_multiple_of(PARAMS_PER_LAYER) {
            return Err(Error::Config(format!(
                "parameter count {} is not a positive multiple of {PARAMS_PER_LAYER}",
                flat.len()
            )));
        }
        Ok(Self::new(
            flat.chunks_exact(PARAMS_PER_LAYER)
                .map(|c| LayerAngles {
                    gamma: c[0],
                    beta1: c[1],
                    beta2: c[2],
                })
                .collect(),
        ))
    }

    pub fn zeros(depth: usize) -> Self {
        Self::from_flat(&vec![0.0; PARAMS_PER_LAYER * depth]).expect("non-empty")
    }

    pub fn layers(&self) -> &[LayerAngles] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| [l.gamma, l.beta1, l.beta2])
            .collect()
    }

    /// Column names `gamma1, beta1_1, beta1_2, gamma2, ...` for `depth` layers.
    pub fn column_names(depth: usize) -> Vec<String> {
        (1..=depth)
            .flat_map(|l| {
                [
                    format!("gamma{l}"),
                    format!("beta{l}_1"),
                    format!("beta{l}_2"),
                ]
            })
            .collect()
    }
}

fn check_dims(state: &Statevector, problem: &MaxCutProblem) -> Result<()> {
    if state.n() != problem.n() {
        return Err(Error::dim(problem.n(), state.n()));
    }
    Ok(())
}

/// `prod_{(j,k) in edges} exp(-i*gamma*Z_j Z_k)`, edges in ascending order.
pub fn apply_phase_operator(
    state: &mut Statevector,
    problem: &MaxCutProblem,
    gamma: f64,
) -> Result<()> {
    check_dims(state, problem)?;
    for &(j, k) in problem.edges() {
        state.apply_zz_phase(j, k, gamma)?;
    }
    Ok(())
}

/// `exp(i*beta1*X)` on every qubit, then (entangled only) `CNOT(j -> k)` for
/// every pair `j < k` in lexicographic order, then `exp(i*beta2*Y)` on every
/// qubit.
pub fn apply_mixing_operator(
    state: &mut Statevector,
    problem: &MaxCutProblem,
    beta1: f64,
    beta2: f64,
    entangled: bool,
) -> Result<()> {
    check_dims(state, problem)?;
    let n = state.n();
    for q in 0..n {
        state.apply_exp_ix(q, beta1)?;
    }
    if entangled {
        for j in 0..n {
            for k in j + 1..n {
                state.apply_cnot(j, k)?;
            }
        }
    }
    for q in 0..n {
        state.apply_exp_iy(q, beta2)?;
    }
    Ok(())
}

/// Reusable evaluator for one (problem, config) pair; caches the per-basis
/// cut values.
#[derive(Debug, Clone)]
pub struct QaoaObjective {
    problem: MaxCutProblem,
    config: QaoaConfig,
    cuts: Vec<f64>,
}

impl QaoaObjective {
    pub fn new(problem: MaxCutProblem, config: QaoaConfig) -> Result<Self> {
        config.validate()?;
        if problem.n() > crate::simulator::MAX_QUBITS {
            return Err(Error::Capacity(problem.n()));
        }
        let cuts = problem.cut_table();
        Ok(Self {
            problem,
            config,
            cuts,
        })
    }

    pub fn problem(&self) -> &MaxCutProblem {
        &self.problem
    }

    pub fn config(&self) -> &QaoaConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.config.parameter_count()
    }

    fn initial_state(&self) -> Result<Statevector> {
        match self.config.init {
            InitState::Plus => Statevector::plus(self.problem.n()),
            InitState::Zero => Statevector::zero(self.problem.n()),
        }
    }

    /// Runs the circuit for flattened angles and returns the final state.
    pub fn final_state(&self, flat: &[f64]) -> Result<Statevector> {
        if flat.len() != self.dims() {
            return Err(Error::Config(format!(
                "expected {} parameters for depth {}, got {}",
                self.dims(),
                self.config.depth,
                flat.len()
            )));
        }
        let mut state = self.initial_state()?;
        for layer in flat.chunks_exact(PARAMS_PER_LAYER) {
            apply_phase_operator(&mut state, &self.problem, layer[0])?;
            apply_mixing_operator(
                &mut state,
                &self.problem,
                layer[1],
                layer[2],
                self.config.entangled,
            )?;
        }
        Ok(state)
    }

    /// Expected cut value `sum_z |<z|psi>|^2 * cut(z)`.
    pub fn evaluate(&self, flat: &[f64]) -> Result<f64> {
        let state = self.final_state(flat)?;
        Ok(state
            .amplitudes()
            .iter()
            .zip(&self.cuts)
            .map(|(a, c)| a.norm_sqr() * c)
            .sum())
    }
}

pub fn evaluate_objective(
    problem: &MaxCutProblem,
    config: &QaoaConfig,
    params: &ParameterVector,
) -> Result<f64> {
    QaoaObjective::new(problem.clone(), *config)?.evaluate(&params.flatten())
}
