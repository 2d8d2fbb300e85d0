//! Exact statevector simulation.
//!
//! Qubit 0 is the least significant bit of the amplitude index. Rotations use
//! the full-angle convention `exp(-iθP)`, so `R_y(θ)|0⟩ = cos θ|0⟩ + sin θ|1⟩`.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const PARALLEL_MIN_AMPS: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis on a non-empty support, with a real
/// coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    ops: Vec<(usize, Pauli)>,
    coefficient: f64,
}

impl PauliString {
    pub fn new(mut ops: Vec<(usize, Pauli)>, coefficient: f64) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidParameter("Pauli string needs a non-empty support".into()));
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!("Pauli coefficient {coefficient} is not finite")));
        }
        ops.sort_by_key(|&(q, _)| q);
        if ops.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("Pauli string repeats a qubit".into()));
        }
        Ok(PauliString { ops, coefficient })
    }

    pub fn ops(&self) -> &[(usize, Pauli)] {
        &self.ops
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn max_qubit(&self) -> usize {
        self.ops.last().map_or(0, |&(q, _)| q)
    }

    /// `(flip mask, phase mask, number of Y factors)`: the string maps
    /// `|b⟩` to `i^{#Y} (-1)^{|b & phase|} |b ^ flip⟩`.
    fn masks(&self) -> (usize, usize, u32) {
        let (mut flip, mut phase, mut ny) = (0, 0, 0);
        for &(q, p) in &self.ops {
            match p {
                Pauli::X => flip |= 1 << q,
                Pauli::Z => phase |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    phase |= 1 << q;
                    ny += 1;
                }
            }
        }
        (flip, phase, ny)
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn check_cap(n: usize) -> Result<()> {
        let cap = crate::qubit_cap().min(40);
        if n > cap {
            return Err(Error::CapExceeded {
                what: "statevector simulation",
                n,
                cap,
            });
        }
        Ok(())
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidParameter("amplitude count must be a power of two".into()));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        Self::check_cap(num_qubits)?;
        Ok(StateVector { num_qubits, amps })
    }

    /// Product state `⊗_q (cos θ_q |0⟩ + sin θ_q |1⟩)`.
    pub fn prepare_product(angles: &[f64]) -> Result<Self> {
        Self::check_cap(angles.len())?;
        let mut amps = Vec::with_capacity(1 << angles.len());
        amps.push(Complex64::new(1.0, 0.0));
        for &theta in angles {
            let (s, c) = theta.sin_cos();
            let half = amps.len();
            amps.extend_from_within(..);
            for a in &mut amps[..half] {
                *a *= c;
            }
            for a in &mut amps[half..] {
                *a *= s;
            }
        }
        Ok(StateVector {
            num_qubits: angles.len(),
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Applies `exp(-i θ c P)` where `c` is the string's coefficient.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        if p.max_qubit() >= self.num_qubits {
            return Err(Error::IndexOutOfRange {
                index: p.max_qubit(),
                num_vars: self.num_qubits,
            });
        }
        let phi = theta * p.coefficient;
        let (sin, cos) = phi.sin_cos();
        let (flip, phase_mask, ny) = p.masks();
        let base = i_pow(ny);
        let phase = |b: usize| {
            if (b & phase_mask).count_ones() % 2 == 0 {
                base
            } else {
                -base
            }
        };
        let minus_i_sin = Complex64::new(0.0, -sin);
        let parallel = self.amps.len() >= PARALLEL_MIN_AMPS;
        if flip == 0 {
            // diagonal: P|b⟩ = ±|b⟩
            let plus = Complex64::new(cos, -sin);
            let minus = Complex64::new(cos, sin);
            let update = |(b, a): (usize, &mut Complex64)| {
                *a *= if (b & phase_mask).count_ones() % 2 == 0 { plus } else { minus };
            };
            if parallel {
                self.amps.par_iter_mut().enumerate().for_each(update);
            } else {
                self.amps.iter_mut().enumerate().for_each(update);
            }
            return Ok(());
        }
        // Blocks of 2h, h the highest flipped bit: every pair (b, b ^ flip)
        // has b in the lower half of a block and its partner in the upper half.
        let high = 1usize << (usize::BITS - 1 - flip.leading_zeros());
        let update = |(k, block): (usize, &mut [Complex64])| {
            let base = k * 2 * high;
            let (lower, upper) = block.split_at_mut(high);
            for (j, ab) in lower.iter_mut().enumerate() {
                let b = base + j;
                let c = b ^ flip;
                let ac = &mut upper[(j ^ flip) - high];
                let (old_b, old_c) = (*ab, *ac);
                *ab = cos * old_b + minus_i_sin * phase(c) * old_c;
                *ac = cos * old_c + minus_i_sin * phase(b) * old_b;
            }
        };
        if parallel {
            self.amps.par_chunks_mut(2 * high).enumerate().for_each(update);
        } else {
            self.amps.chunks_mut(2 * high).enumerate().for_each(update);
        }
        Ok(())
    }

    /// `⟨σ^z_q⟩`.
    pub fn expectation_z(&self, q: usize) -> Result<f64> {
        if q >= self.num_qubits {
            return Err(Error::IndexOutOfRange {
                index: q,
                num_vars: self.num_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| if b >> q & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// Draws `n_shots` computational-basis outcomes as basis indices.
    pub fn sample<R: Rng + ?Sized>(&self, n_shots: usize, rng: &mut R) -> Result<Vec<u64>> {
        if n_shots == 0 {
            return Err(Error::InvalidParameter("need at least one shot".into()));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| Error::InvalidParameter(format!("cannot sample state: {e}")))?;
        Ok((0..n_shots).map(|_| dist.sample(rng) as u64).collect())
    }
}
