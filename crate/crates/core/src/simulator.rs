//! Dense statevector simulator for the QAOA gate set.
//!
//! Qubit `q` is bit `q` of the basis index (qubit 0 is the least significant
//! bit). Rotations follow the convention `exp(+i*beta*P)` without the usual
//! factor of one half, and the two-qubit phase is `exp(-i*gamma*Z_j Z_k)`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    fn check_capacity(n: usize) -> Result<()> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Capacity(n));
        }
        Ok(())
    }

    /// Computational basis state `|z>`.
    pub fn basis(n: usize, z: usize) -> Result<Self> {
        Self::check_capacity(n)?;
        if z >> n != 0 {
            return Err(Error::Index(format!(
                "basis index {z} outside {n}-qubit register"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[z] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// Uniform superposition, every amplitude `2^(-n/2)`.
    pub fn plus(n: usize) -> Result<Self> {
        Self::check_capacity(n)?;
        let a = (-(n as f64) / 2.0).exp2();
        Ok(Self {
            n,
            amps: vec![Complex64::new(a, 0.0); 1 << n],
        })
    }

    /// Wraps raw amplitudes; the length must be a power of two. The state is
    /// not renormalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::Dimension {
                expected: len.next_power_of_two(),
                actual: len,
            });
        }
        let n = len.trailing_zeros() as usize;
        Self::check_capacity(n)?;
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::Index(format!(
                "qubit {q} outside {}-qubit register",
                self.n
            )));
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::Index(format!(
                "two-qubit gate on repeated qubit {a}"
            )));
        }
        Ok(())
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << qubit;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    /// `exp(i*beta*X)` on `qubit`.
    pub fn apply_exp_ix(&mut self, qubit: usize, beta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = beta.sin_cos();
        let c = Complex64::new(c, 0.0);
        let is = I * s;
        self.apply_single(qubit, [[c, is], [is, c]]);
        Ok(())
    }

    /// `exp(i*beta*Y)` on `qubit`.
    pub fn apply_exp_iy(&mut self, qubit: usize, beta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = beta.sin_cos();
        let c = Complex64::new(c, 0.0);
        let s = Complex64::new(s, 0.0);
        self.apply_single(qubit, [[c, s], [-s, c]]);
        Ok(())
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_single(qubit, [[h, h], [h, -h]]);
        Ok(())
    }

    /// `exp(-i*gamma*Z_j Z_k)`: phase `e^{-i gamma}` where bits `j`, `k`
    /// agree and `e^{+i gamma}` where they differ.
    pub fn apply_zz_phase(&mut self, j: usize, k: usize, gamma: f64) -> Result<()> {
        self.check_pair(j, k)?;
        let agree = Complex64::from_polar(1.0, -gamma);
        let differ = agree.conj();
        for (z, a) in self.amps.iter_mut().enumerate() {
            *a *= if ((z >> j) ^ (z >> k)) & 1 == 0 {
                agree
            } else {
                differ
            };
        }
        Ok(())
    }

    /// Flips `target` on every basis state whose `control` bit is set.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        let (cm, tm) = (1usize << control, 1usize << target);
        for z in 0..self.amps.len() {
            if z & cm != 0 && z & tm == 0 {
                self.amps.swap(z, z | tm);
            }
        }
        Ok(())
    }

    /// Writes `index,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,re,im")?;
        for (z, a) in self.amps.iter().enumerate() {
            writeln!(w, "{z},{:.16e},{:.16e}", a.re, a.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amps(s: &Statevector, expected: &[Complex64], tol: f64) {
        assert_eq!(s.amplitudes().len(), expected.len());
        for (z, (a, e)) in s.amplitudes().iter().zip(expected).enumerate() {
            assert!((a - e).norm() < tol, "amp {z}: {a} vs {e}");
        }
    }

    #[test]
    fn plus_state_amplitudes() {
        let s = Statevector::plus(1).unwrap();
        assert_amps(&s, &[c(FRAC_1_SQRT_2, 0.0); 2], 1e-15);
        assert_amps(&Statevector::plus(2).unwrap(), &[c(0.5, 0.0); 4], 1e-15);
        let s15 = Statevector::plus(15).unwrap();
        assert_eq!(s15.amplitudes().len(), 32768);
        assert!((s15.amplitudes()[123].re - 2f64.powf(-7.5)).abs() < 1e-17);
        assert!(matches!(Statevector::plus(0), Err(Error::Capacity(0))));
        assert!(matches!(Statevector::plus(21), Err(Error::Capacity(21))));
    }

    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn exp_ix_examples() {
        let mut s = Statevector::plus(2).unwrap();
        s.apply_exp_ix(1, 0.0).unwrap();
        assert_eq!(s, Statevector::plus(2).unwrap());

        let mut s = Statevector::zero(1).unwrap();
        s.apply_exp_ix(0, FRAC_PI_2).unwrap();
        assert_amps(&s, &[c(0.0, 0.0), c(0.0, 1.0)], 1e-15);

        let mut s = Statevector::zero(1).unwrap();
        s.apply_exp_ix(0, FRAC_PI_4).unwrap();
        assert_amps(
            &s,
            &[c(FRAC_PI_4.cos(), 0.0), c(0.0, FRAC_PI_4.sin())],
            1e-15,
        );
        let p = s.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        assert!(matches!(s.apply_exp_ix(1, 0.1), Err(Error::Index(_))));
    }

    #[test]
    fn exp_iy_examples() {
        let mut s = Statevector::zero(1).unwrap();
        s.apply_exp_iy(0, FRAC_PI_2).unwrap();
        assert_amps(&s, &[c(0.0, 0.0), c(-1.0, 0.0)], 1e-15);

        let mut s = Statevector::basis(1, 1).unwrap();
        s.apply_exp_iy(0, FRAC_PI_2).unwrap();
        assert_amps(&s, &[c(1.0, 0.0), c(0.0, 0.0)], 1e-15);
        assert!(s.apply_exp_iy(3, 0.1).is_err());
    }

    #[test]
    fn zz_phase_examples() {
        let mut s = Statevector::zero(2).unwrap();
        s.apply_zz_phase(0, 1, FRAC_PI_2).unwrap();
        assert_amps(
            &s,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            1e-15,
        );

        // gamma = pi: e^{-i pi} = e^{+i pi} = -1 on every basis state
        let mut s = Statevector::plus(2).unwrap();
        s.apply_zz_phase(0, 1, PI).unwrap();
        assert_amps(&s, &[c(-0.5, 0.0); 4], 1e-15);

        assert!(s.apply_zz_phase(1, 1, 0.3).is_err());
        assert!(s.apply_zz_phase(0, 2, 0.3).is_err());
    }

    #[test]
    fn cnot_examples() {
        // |10> means qubit 1 (control) set
        let mut s = Statevector::basis(2, 0b10).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b11).unwrap());

        let mut s = Statevector::basis(2, 0b01).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b01).unwrap());

        let mut s = Statevector::zero(2).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_eq!(s, Statevector::zero(2).unwrap());

        assert!(s.apply_cnot(0, 0).is_err());
    }

    #[test]
    fn hadamard_builds_plus() {
        let mut s = Statevector::zero(3).unwrap();
        for q in 0..3 {
            s.apply_hadamard(q).unwrap();
        }
        assert_amps(&s, Statevector::plus(3).unwrap().amplitudes(), 1e-15);
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        Statevector::zero(1).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "index,re,im\n0,1.0000000000000000e0,0.0000000000000000e0\n1,0.0000000000000000e0,0.0000000000000000e0\n"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_state(n: usize, seed: &[f64]) -> Statevector {
            let mut s = Statevector::plus(n).unwrap();
            for (q, &b) in seed.iter().enumerate() {
                s.apply_exp_ix(q % n, b).unwrap();
                s.apply_exp_iy((q + 1) % n, 0.7 * b).unwrap();
            }
            s
        }

        proptest! {
            #[test]
            fn rotations_invert(n in 1usize..5, q in 0usize..4, beta in -7.0f64..7.0,
                                seed in proptest::collection::vec(-3.0f64..3.0, 4)) {
                let q = q % n;
                let s0 = random_state(n, &seed);
                let mut s = s0.clone();
                s.apply_exp_ix(q, beta).unwrap();
                s.apply_exp_ix(q, -beta).unwrap();
                s.apply_exp_iy(q, beta).unwrap();
                s.apply_exp_iy(q, -beta).unwrap();
                for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
                    prop_assert!((a - b).norm() < 1e-12);
                }
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }

            #[test]
            fn cnot_is_an_involution(n in 2usize..5, c in 0usize..4, t in 0usize..4,
                                     seed in proptest::collection::vec(-3.0f64..3.0, 4)) {
                let (c, t) = (c % n, t % n);
                prop_assume!(c != t);
                let s0 = random_state(n, &seed);
                let mut s = s0.clone();
                s.apply_cnot(c, t).unwrap();
                s.apply_cnot(c, t).unwrap();
                prop_assert_eq!(s, s0);
            }
        }
    }
}
