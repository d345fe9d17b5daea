//! Dense-matrix reference simulator for small registers. Every gate is built
//! as an explicit 2^n x 2^n matrix from Kronecker products, and rotations come
//! from a truncated Taylor series of the matrix exponential, so nothing here
//! shares code with the stride-based simulator.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type CMat = Vec<Vec<C>>;

#[derive(Debug, Clone, Copy)]
pub enum Gate {
    ExpX(usize, f64),
    ExpY(usize, f64),
    Hadamard(usize),
    ZzPhase(usize, usize, f64),
    Cnot(usize, usize),
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

pub fn pauli_x() -> CMat {
    vec![
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
    ]
}

pub fn pauli_y() -> CMat {
    vec![
        vec![c(0.0, 0.0), c(0.0, -1.0)],
        vec![c(0.0, 1.0), c(0.0, 0.0)],
    ]
}

pub fn pauli_z() -> CMat {
    vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(-1.0, 0.0)],
    ]
}

fn proj(bit: usize) -> CMat {
    let mut m = vec![vec![c(0.0, 0.0); 2]; 2];
    m[bit][bit] = c(1.0, 0.0);
    m
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn add(a: &CMat, b: &CMat) -> CMat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

fn scale(a: &CMat, s: C) -> CMat {
    a.iter()
        .map(|r| r.iter().map(|x| x * s).collect())
        .collect()
}

/// exp(A) by scaling and squaring around a 30-term Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let norm: f64 = a.iter().flatten().map(|x| x.norm()).sum();
    let mut squarings = 0;
    let mut s = 1.0;
    while norm * s > 0.5 {
        s *= 0.5;
        squarings += 1;
    }
    let a = scale(a, c(s, 0.0));
    let n = a.len();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..30 {
        term = scale(&matmul(&term, &a), c(1.0 / k as f64, 0.0));
        sum = add(&sum, &term);
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Lifts single-qubit operators onto an n-qubit register; `ops[q]` acts on
/// qubit q, which is bit q of the basis index (the leftmost Kronecker factor
/// is the highest qubit).
pub fn lift(ops: &[(usize, CMat)], n: usize) -> CMat {
    let mut m = vec![vec![c(1.0, 0.0)]];
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, op)| op.clone())
            .unwrap_or_else(|| identity(2));
        m = kron(&m, &factor);
    }
    m
}

pub fn gate_matrix(gate: Gate, n: usize) -> CMat {
    match gate {
        Gate::ExpX(q, b) => expm(&scale(&lift(&[(q, pauli_x())], n), c(0.0, b))),
        Gate::ExpY(q, b) => expm(&scale(&lift(&[(q, pauli_y())], n), c(0.0, b))),
        Gate::Hadamard(q) => {
            let h = scale(
                &add(&pauli_x(), &pauli_z()),
                c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            );
            lift(&[(q, h)], n)
        }
        Gate::ZzPhase(j, k, g) => {
            let zz = lift(&[(j, pauli_z()), (k, pauli_z())], n);
            expm(&scale(&zz, c(0.0, -g)))
        }
        Gate::Cnot(ctrl, t) => add(
            &lift(&[(ctrl, proj(0))], n),
            &lift(&[(ctrl, proj(1)), (t, pauli_x())], n),
        ),
    }
}

pub fn apply(m: &CMat, v: &[C]) -> Vec<C> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Expected cut of the QAOA circuit built entirely from dense matrices.
pub fn qaoa_expected_cut(
    n: usize,
    edges: &[(usize, usize)],
    params: &[f64],
    entangled: bool,
    plus_init: bool,
) -> f64 {
    let dim = 1usize << n;
    let mut psi: Vec<C> = if plus_init {
        vec![c((dim as f64).sqrt().recip(), 0.0); dim]
    } else {
        (0..dim)
            .map(|z| if z == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) })
            .collect()
    };
    for layer in params.chunks(3) {
        let (g, b1, b2) = (layer[0], layer[1], layer[2]);
        let mut h = vec![vec![c(0.0, 0.0); dim]; dim];
        for &(j, k) in edges {
            h = add(&h, &lift(&[(j, pauli_z()), (k, pauli_z())], n));
        }
        psi = apply(&expm(&scale(&h, c(0.0, -g))), &psi);
        for q in 0..n {
            psi = apply(&gate_matrix(Gate::ExpX(q, b1), n), &psi);
        }
        if entangled {
            for j in 0..n {
                for k in j + 1..n {
                    psi = apply(&gate_matrix(Gate::Cnot(j, k), n), &psi);
                }
            }
        }
        for q in 0..n {
            psi = apply(&gate_matrix(Gate::ExpY(q, b2), n), &psi);
        }
    }
    psi.iter()
        .enumerate()
        .map(|(z, a)| {
            let cut = edges
                .iter()
                .filter(|&&(j, k)| ((z >> j) ^ (z >> k)) & 1 == 1)
                .count();
            a.norm_sqr() * cut as f64
        })
        .sum()
}
