//! Spin-form HUBO instances of order at most three.
//!
//! An instance is the polynomial `H(s) = Σ_T w_T Π_{j∈T} s_j` over spins
//! `s_j ∈ {+1, -1}`. Bits map to spins through `z = (1 - s) / 2`, so bit 0 is
//! spin +1 and bit 1 is spin -1.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::format::InstanceMetadata;

/// Highest interaction order supported.
pub const MAX_ORDER: usize = 3;

/// Absolute tolerance used when comparing energies.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    indices: Vec<usize>,
    weight: f64,
}

impl Term {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn order(&self) -> usize {
        self.indices.len()
    }

    fn value(&self, spins: &[i8]) -> f64 {
        let sign: i8 = self.indices.iter().map(|&j| spins[j]).product();
        self.weight * f64::from(sign)
    }
}

/// Per-variable coefficients of the local field, split by term order so the
/// single-flip delta needs no allocation.
#[derive(Clone, Debug, Default)]
struct LocalFields {
    linear: Vec<f64>,
    pair_start: Vec<usize>,
    pairs: Vec<(f64, usize)>,
    triple_start: Vec<usize>,
    triples: Vec<(f64, usize, usize)>,
}

impl LocalFields {
    fn build(num_vars: usize, terms: &[Term]) -> Self {
        let mut linear = vec![0.0; num_vars];
        let mut pairs: Vec<Vec<(f64, usize)>> = vec![Vec::new(); num_vars];
        let mut triples: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); num_vars];
        for term in terms {
            let w = term.weight;
            match *term.indices.as_slice() {
                [a] => linear[a] += w,
                [a, b] => {
                    pairs[a].push((w, b));
                    pairs[b].push((w, a));
                }
                [a, b, c] => {
                    triples[a].push((w, b, c));
                    triples[b].push((w, a, c));
                    triples[c].push((w, a, b));
                }
                _ => unreachable!("term order validated at construction"),
            }
        }
        fn flatten<T>(lists: Vec<Vec<T>>) -> (Vec<usize>, Vec<T>) {
            let mut start = Vec::with_capacity(lists.len() + 1);
            let mut flat = Vec::new();
            start.push(0);
            for list in lists {
                flat.extend(list);
                start.push(flat.len());
            }
            (start, flat)
        }
        let (pair_start, pairs) = flatten(pairs);
        let (triple_start, triples) = flatten(triples);
        LocalFields {
            linear,
            pair_start,
            pairs,
            triple_start,
            triples,
        }
    }

    #[inline]
    fn field(&self, spins: &[i8], i: usize) -> f64 {
        let mut f = self.linear[i];
        for &(w, j) in &self.pairs[self.pair_start[i]..self.pair_start[i + 1]] {
            f += w * f64::from(spins[j]);
        }
        for &(w, j, k) in &self.triples[self.triple_start[i]..self.triple_start[i + 1]] {
            f += w * f64::from(spins[j] * spins[k]);
        }
        f
    }
}

/// Immutable HUBO instance in spin form.
#[derive(Clone, Debug)]
pub struct HuboInstance {
    num_vars: usize,
    terms: Vec<Term>,
    adjacency: Vec<Vec<usize>>,
    fields: LocalFields,
    metadata: InstanceMetadata,
}

impl HuboInstance {
    /// Builds and validates an instance. Terms are stored in canonical
    /// (lexicographic index) order; duplicate index sets are rejected.
    pub fn new<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        if num_vars == 0 {
            return Err(Error::InvalidInstance("number of variables must be positive".into()));
        }
        let mut seen = HashSet::new();
        let mut checked = Vec::new();
        for (indices, weight) in terms {
            if indices.is_empty() || indices.len() > MAX_ORDER {
                return Err(Error::InvalidInstance(format!(
                    "term {indices:?} has order {} (allowed 1..={MAX_ORDER})",
                    indices.len()
                )));
            }
            if !indices.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidInstance(format!(
                    "term {indices:?} is not strictly increasing"
                )));
            }
            if let Some(&bad) = indices.iter().find(|&&j| j >= num_vars) {
                return Err(Error::InvalidInstance(format!(
                    "term {indices:?} references variable {bad} >= {num_vars}"
                )));
            }
            if !weight.is_finite() || weight == 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "term {indices:?} has weight {weight} (must be finite and nonzero)"
                )));
            }
            if !seen.insert(indices.clone()) {
                return Err(Error::InvalidInstance(format!("duplicate term {indices:?}")));
            }
            checked.push(Term { indices, weight });
        }
        checked.sort_by(|a, b| a.indices.cmp(&b.indices));

        let mut adjacency = vec![Vec::new(); num_vars];
        for (t, term) in checked.iter().enumerate() {
            for &j in &term.indices {
                adjacency[j].push(t);
            }
        }
        let fields = LocalFields::build(num_vars, &checked);
        Ok(HuboInstance {
            num_vars,
            terms: checked,
            adjacency,
            fields,
            metadata: InstanceMetadata::default(),
        })
    }

    pub fn with_metadata(mut self, metadata: InstanceMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Term ids containing variable `i`.
    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn metadata(&self) -> &InstanceMetadata {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut InstanceMetadata {
        &mut self.metadata
    }

    pub fn ground_state_energy(&self) -> Option<f64> {
        self.metadata.ground_state_energy
    }

    /// Number of terms of each order, indexed `[one, two, three]`.
    pub fn term_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for term in &self.terms {
            counts[term.order() - 1] += 1;
        }
        counts
    }

    fn check_len(&self, s: &SpinConfiguration) -> Result<()> {
        if s.len() != self.num_vars {
            return Err(Error::LengthMismatch {
                expected: self.num_vars,
                got: s.len(),
            });
        }
        Ok(())
    }

    pub fn energy(&self, s: &SpinConfiguration) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.energy_unchecked(s.as_slice()))
    }

    pub(crate) fn energy_unchecked(&self, spins: &[i8]) -> f64 {
        self.terms.iter().map(|t| t.value(spins)).sum()
    }

    /// Energy change caused by flipping spin `i`:
    /// `ΔE = -2 Σ_{T∋i} w_T Π_{j∈T} s_j`.
    pub fn delta_energy(&self, s: &SpinConfiguration, i: usize) -> Result<f64> {
        self.check_len(s)?;
        if i >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                index: i,
                num_vars: self.num_vars,
            });
        }
        Ok(self.delta_unchecked(s.as_slice(), i))
    }

    #[inline]
    pub(crate) fn delta_unchecked(&self, spins: &[i8], i: usize) -> f64 {
        -2.0 * f64::from(spins[i]) * self.fields.field(spins, i)
    }

    /// Upper bound `2 Σ_{T∋i} |w_T|` on the magnitude of any single-flip delta of `i`.
    pub fn max_delta_bound(&self, i: usize) -> f64 {
        2.0 * self.adjacency[i]
            .iter()
            .map(|&t| self.terms[t].weight.abs())
            .sum::<f64>()
    }
}

/// A spin vector over `{+1, -1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(position) = spins.iter().position(|&s| s != 1 && s != -1) {
            let symbol = char::from_digit(spins[position].unsigned_abs() as u32 % 10, 10).unwrap_or('?');
            return Err(Error::InvalidSymbol { symbol, position });
        }
        Ok(SpinConfiguration(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfiguration(vec![1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        SpinConfiguration((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Maps bits to spins with `0 -> +1`, `1 -> -1`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .enumerate()
            .map(|(position, &b)| match b {
                0 => Ok(1),
                1 => Ok(-1),
                other => Err(Error::InvalidSymbol {
                    symbol: char::from_digit(u32::from(other) % 36, 36).unwrap_or('?'),
                    position,
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(SpinConfiguration)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&s| u8::from(s < 0)).collect()
    }

    /// Spins from the low `n` bits of a basis-state index (qubit 0 is the
    /// least significant bit).
    pub fn from_index(index: u64, n: usize) -> Self {
        SpinConfiguration((0..n).map(|q| if index >> q & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |acc, (q, _)| acc | 1 << q)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [i8] {
        &mut self.0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn hamming_distance(&self, other: &SpinConfiguration) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// Bitstring text form: one `0`/`1` character per variable, qubit 0 first.
impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

/// Optimality gap in percent: `100 (e_min - e_gs) / |e_gs|`.
pub fn optimality_gap(e_min: f64, e_gs: f64) -> Result<f64> {
    if e_gs == 0.0 {
        return Err(Error::UndefinedGap);
    }
    let tol = ENERGY_TOLERANCE * e_gs.abs().max(1.0);
    if e_min < e_gs - tol {
        return Err(Error::InvalidParameter(format!(
            "energy {e_min} lies below the ground-state energy {e_gs}"
        )));
    }
    Ok((100.0 * (e_min - e_gs) / e_gs.abs()).max(0.0))
}
