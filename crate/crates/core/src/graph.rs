//! Unit-weight max-cut instances on ring and all-pairs graphs, with an
//! exhaustive enumeration oracle for small node counts.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphConfig {
    Cyclic,
    Complete,
}

impl fmt::Display for GraphConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphConfig::Cyclic => "cyclic",
            GraphConfig::Complete => "complete",
        })
    }
}

impl FromStr for GraphConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" => Ok(GraphConfig::Cyclic),
            "complete" => Ok(GraphConfig::Complete),
            other => Err(Error::Config(format!(
                "unknown graph configuration {other:?}"
            ))),
        }
    }
}

#[derive(Deserialize)]
struct RawProblem {
    n: usize,
    config: GraphConfig,
    edges: Vec<(usize, usize)>,
}

/// An undirected, unit-weight max-cut instance. Edges are stored 0-indexed as
/// `(j, k)` with `j < k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem")]
pub struct MaxCutProblem {
    n: usize,
    config: GraphConfig,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawProblem> for MaxCutProblem {
    type Error = Error;

    fn try_from(raw: RawProblem) -> Result<Self> {
        let expected = match raw.config {
            GraphConfig::Cyclic => MaxCutProblem::cyclic(raw.n)?,
            GraphConfig::Complete => MaxCutProblem::complete(raw.n)?,
        };
        let given: BTreeSet<(usize, usize)> = raw
            .edges
            .iter()
            .map(|&(j, k)| (j.min(k), j.max(k)))
            .collect();
        let wanted: BTreeSet<(usize, usize)> = expected.edges.iter().copied().collect();
        if given != wanted || raw.edges.len() != expected.edges.len() {
            return Err(Error::InvalidInstance(format!(
                "edge list does not describe the {} graph on {} nodes",
                raw.config, raw.n
            )));
        }
        Ok(expected)
    }
}

impl MaxCutProblem {
    /// Ring graph `0-1-...-(n-1)-0`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance(format!(
                "a cycle needs at least 3 nodes, got {n}"
            )));
        }
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|j| (j, j + 1)).collect();
        edges.push((0, n - 1));
        edges.sort_unstable();
        Ok(Self {
            n,
            config: GraphConfig::Cyclic,
            edges,
        })
    }

    /// All `n(n-1)/2` unordered pairs.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInstance(format!(
                "a complete graph needs at least 2 nodes, got {n}"
            )));
        }
        let edges = (0..n)
            .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
            .collect();
        Ok(Self {
            n,
            config: GraphConfig::Complete,
            edges,
        })
    }

    pub fn build(config: GraphConfig, n: usize) -> Result<Self> {
        match config {
            GraphConfig::Cyclic => Self::cyclic(n),
            GraphConfig::Complete => Self::complete(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> GraphConfig {
        self.config
    }

    /// Edges in ascending `(j, k)` order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Short label such as `4n cyclic`.
    pub fn label(&self) -> String {
        format!("{}n {}", self.n, self.config)
    }

    pub fn cut_value(&self, assignment: &Assignment) -> Result<usize> {
        if assignment.len() != self.n {
            return Err(Error::dim(self.n, assignment.len()));
        }
        Ok(self
            .edges
            .iter()
            .filter(|&&(j, k)| assignment.0[j] != assignment.0[k])
            .count())
    }

    /// Cut value of the assignment encoded by a computational basis index
    /// (bit `q` of `z` is node `q`).
    #[inline]
    pub fn cut_value_of_basis(&self, z: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(j, k)| ((z >> j) ^ (z >> k)) & 1 == 1)
            .count()
    }

    /// Cut value for every basis state `0..2^n`.
    pub fn cut_table(&self) -> Vec<f64> {
        (0..1usize << self.n)
            .map(|z| self.cut_value_of_basis(z) as f64)
            .collect()
    }
}

/// Side assignment for each node; `true` puts the node on side 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<bool>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_basis_index(z: usize, n: usize) -> Self {
        Assignment((0..n).map(|q| (z >> q) & 1 == 1).collect())
    }

    pub fn to_basis_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |z, (q, &b)| z | (usize::from(b) << q))
    }

    pub fn flipped(&self) -> Self {
        Assignment(self.0.iter().map(|b| !b).collect())
    }
}

/// Parses `"0101"`; character `i` is node `i`.
impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!(
                    "invalid assignment character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxCut {
    pub value: usize,
    pub argmax: Vec<Assignment>,
}

pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Exhaustive maximum over all `2^n` assignments.
pub fn brute_force_max_cut(problem: &MaxCutProblem) -> Result<MaxCut> {
    if problem.n() > BRUTE_FORCE_LIMIT {
        return Err(Error::OracleScale(problem.n()));
    }
    let mut best = 0;
    let mut argmax = Vec::new();
    for z in 0..1usize << problem.n() {
        let v = problem.cut_value_of_basis(z);
        if v > best {
            best = v;
            argmax.clear();
        }
        if v == best {
            argmax.push(Assignment::from_basis_index(z, problem.n()));
        }
    }
    Ok(MaxCut {
        value: best,
        argmax,
    })
}
