//! Symbolic Pauli algebra on many qubits.
//!
//! Words are stored as `(x, z)` bitsets; a set `x` and `z` bit on the same
//! qubit is a `Y`. Sums keep insertion order so results are reproducible.

use indexmap::IndexMap;
use num_complex::Complex64;

use crate::statevector::Pauli;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliWord {
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliWord {
    pub fn identity(num_qubits: usize) -> Self {
        let words = num_qubits.div_ceil(64).max(1);
        PauliWord {
            x: vec![0; words],
            z: vec![0; words],
        }
    }

    pub fn single(num_qubits: usize, q: usize, p: Pauli) -> Self {
        Self::from_ops(num_qubits, &[(q, p)])
    }

    pub fn from_ops(num_qubits: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut w = Self::identity(num_qubits);
        for &(q, p) in ops {
            w.set(q, p);
        }
        w
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let (k, bit) = (q / 64, 1u64 << (q % 64));
        let (x, z) = match p {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        };
        if x {
            self.x[k] |= bit;
        }
        if z {
            self.z[k] |= bit;
        }
    }

    pub fn get(&self, q: usize) -> Option<Pauli> {
        let (k, bit) = (q / 64, 1u64 << (q % 64));
        match (self.x[k] & bit != 0, self.z[k] & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
        }
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        let mut parity = 0;
        for k in 0..self.x.len() {
            parity ^= ((self.x[k] & other.z[k]) ^ (self.z[k] & other.x[k])).count_ones() & 1;
        }
        parity == 0
    }

    /// Product `self · other = i^k · word`, returned as `(k mod 4, word)`.
    pub fn mul(&self, other: &PauliWord) -> (u32, PauliWord) {
        // With P = i^{|x&z|} X^x Z^z, the product picks up (-1)^{|z1 & x2|}.
        let mut ny = 0i64;
        let mut sign = 0u32;
        let mut out = PauliWord {
            x: Vec::with_capacity(self.x.len()),
            z: Vec::with_capacity(self.x.len()),
        };
        for k in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[k], self.z[k], other.x[k], other.z[k]);
            let (x, z) = (x1 ^ x2, z1 ^ z2);
            ny += (x1 & z1).count_ones() as i64 + (x2 & z2).count_ones() as i64 - (x & z).count_ones() as i64;
            sign += (z1 & x2).count_ones();
            out.x.push(x);
            out.z.push(z);
        }
        let k = (ny + 2 * sign as i64).rem_euclid(4) as u32;
        (k, out)
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

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    terms: IndexMap<PauliWord, Complex64>,
}

impl PauliSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, word: PauliWord, coeff: Complex64) {
        *self.terms.entry(word).or_default() += coeff;
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &PauliWord) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        PauliSum {
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c * factor)).collect(),
        }
    }

    pub fn plus(&self, other: &PauliSum) -> PauliSum {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    /// Drops terms whose coefficient magnitude is at most `tol`.
    pub fn pruned(mut self, tol: f64) -> PauliSum {
        self.terms.retain(|_, c| c.norm() > tol);
        self
    }

    /// Normalized Hilbert-Schmidt inner product `Tr(A† B) / 2^N`.
    pub fn inner(&self, other: &PauliSum) -> Complex64 {
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::default();
        for (w, c) in &small.terms {
            if let Some(d) = large.terms.get(w) {
                acc += if flip { d.conj() * c } else { c.conj() * d };
            }
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(Complex64::norm_sqr).sum()
    }

    /// `[A, B] = AB - BA`. Only anticommuting word pairs contribute.
    pub fn commutator(a: &PauliSum, b: &PauliSum) -> PauliSum {
        let mut out = PauliSum::new();
        for (wa, ca) in &a.terms {
            for (wb, cb) in &b.terms {
                if wa.commutes_with(wb) {
                    continue;
                }
                let (k, w) = wa.mul(wb);
                out.add_term(w, ca * cb * i_pow(k) * 2.0);
            }
        }
        out
    }
}
