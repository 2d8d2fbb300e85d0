//! Bias-field digitized counterdiabatic quantum optimization, emulated on an
//! exact statevector.
//!
//! Each iteration prepares the ground state of the biased mixer, applies the
//! first-order counterdiabatic rotations in the impulse regime, samples, polishes
//! the best sample with a short SA, and feeds the CVaR tail back into the bias.
//!
//! Sign conventions: the interpolation is `H(λ) = (1-λ) H_m + λ H_P` with
//! `H_m = -Σ (h^x σ^x + h^b σ^z)`. The prepared product state is the ground
//! state of that operator, i.e. the `+r` eigenstate of `h^x σ^x + h^b σ^z`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, SpinConfiguration};
use crate::pauli::{PauliSum, PauliWord};
use crate::report::{Counters, Stage, StageReport};
use crate::rng::stream_rng;
use crate::sa::local_refine;
use crate::statevector::{Pauli, PauliString, StateVector};
use crate::timing::bfdcqo_model_time;

/// Number of lowest distinct samples kept for seeding a final SA stage.
pub const POOL_SIZE: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixerFields {
    pub h_x: Vec<f64>,
    pub h_b: Vec<f64>,
}

impl MixerFields {
    pub fn new(h_x: Vec<f64>, h_b: Vec<f64>) -> Result<Self> {
        if h_x.len() != h_b.len() {
            return Err(Error::LengthMismatch {
                expected: h_x.len(),
                got: h_b.len(),
            });
        }
        if let Some(i) = h_x.iter().position(|&h| h == 0.0 || !h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transverse field on qubit {i} must be nonzero and finite"
            )));
        }
        if h_b.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter("bias fields must be finite".into()));
        }
        Ok(MixerFields { h_x, h_b })
    }

    /// Uniform transverse field `h_x` and zero bias.
    pub fn unbiased(n: usize, h_x: f64) -> Result<Self> {
        Self::new(vec![h_x; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.h_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_x.is_empty()
    }
}

/// `θ_i = atan(h^x / (h^b + sqrt(h^b² + h^x²)))`, for use with
/// [`StateVector::prepare_product`].
pub fn initial_angles(fields: &MixerFields) -> Result<Vec<f64>> {
    fields
        .h_x
        .iter()
        .zip(&fields.h_b)
        .map(|(&hx, &hb)| {
            if hx == 0.0 {
                return Err(Error::InvalidParameter("transverse field must be nonzero".into()));
            }
            let r = hb.hypot(hx);
            // for negative h_b, h_b + r = h_x² / (r - h_b) avoids cancellation
            Ok(if hb >= 0.0 {
                (hx / (hb + r)).atan()
            } else {
                ((r - hb) / hx).atan()
            })
        })
        .collect()
}

/// Bias `h^b_i = magnitude · s_i` with a uniform transverse field.
pub fn seed_bias_from_bitstring(s: &SpinConfiguration, magnitude: f64, h_x: f64) -> Result<MixerFields> {
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bias magnitude {magnitude} must be positive"
        )));
    }
    MixerFields::new(
        vec![h_x; s.len()],
        s.as_slice().iter().map(|&v| magnitude * f64::from(v)).collect(),
    )
}

/// Which longitudinal field multiplies the one-body counterdiabatic terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OneBodyField {
    /// `h^z_i = h_i + h^b_i`.
    #[default]
    WithBias,
    /// `h^z_i = h_i`.
    ProblemOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdTerm {
    /// One `Y` on the rotated site and `Z` on the other members, unit coefficient.
    pub pauli: PauliString,
    /// Coupling times `h^x` of the `Y` site, without the `-2β₁` factor.
    pub base_coefficient: f64,
    pub order: usize,
}

/// First-order counterdiabatic terms: one per (problem term, member qubit),
/// emitted in canonical term order.
pub fn build_cd_terms(inst: &HuboInstance, fields: &MixerFields, one_body: OneBodyField) -> Result<Vec<CdTerm>> {
    if fields.len() != inst.num_vars() {
        return Err(Error::LengthMismatch {
            expected: inst.num_vars(),
            got: fields.len(),
        });
    }
    let mut out = Vec::new();
    for term in inst.terms() {
        let idx = term.indices();
        for &site in idx {
            let ops = idx
                .iter()
                .map(|&q| (q, if q == site { Pauli::Y } else { Pauli::Z }))
                .collect();
            let coupling = match (idx.len(), one_body) {
                (1, OneBodyField::WithBias) => term.weight() + fields.h_b[site],
                _ => term.weight(),
            };
            out.push(CdTerm {
                pauli: PauliString::new(ops, 1.0)?,
                base_coefficient: fields.h_x[site] * coupling,
                order: idx.len(),
            });
        }
    }
    Ok(out)
}

fn z_word(n: usize, idx: &[usize]) -> PauliWord {
    let ops: Vec<_> = idx.iter().map(|&q| (q, Pauli::Z)).collect();
    PauliWord::from_ops(n, &ops)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Mixer and problem Hamiltonians in Pauli form, reused across schedule points.
#[derive(Clone, Debug)]
pub struct AgpOperators {
    mixer: PauliSum,
    problem: PauliSum,
}

impl AgpOperators {
    pub fn new(inst: &HuboInstance, fields: &MixerFields) -> Result<Self> {
        let n = inst.num_vars();
        if fields.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: fields.len(),
            });
        }
        let mut mixer = PauliSum::new();
        for q in 0..n {
            mixer.add_term(PauliWord::single(n, q, Pauli::X), real(-fields.h_x[q]));
            if fields.h_b[q] != 0.0 {
                mixer.add_term(PauliWord::single(n, q, Pauli::Z), real(-fields.h_b[q]));
            }
        }
        let mut problem = PauliSum::new();
        for t in inst.terms() {
            problem.add_term(z_word(n, t.indices()), real(t.weight()));
        }
        Ok(AgpOperators { mixer, problem })
    }

    /// `(H(λ), ∂_λ H)`.
    pub fn hamiltonian(&self, lambda: f64) -> (PauliSum, PauliSum) {
        let h = self.mixer.scaled(1.0 - lambda).plus(&self.problem.scaled(lambda));
        let d = self.problem.plus(&self.mixer.scaled(-1.0));
        (h, d)
    }

    pub fn beta1(&self, lambda: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("λ = {lambda} outside [0, 1]")));
        }
        let (h, d) = self.hamiltonian(lambda);
        variational_beta1(&h, &d)
    }
}

/// Double commutator `[H, [H, ∂H]]`.
pub fn nested_commutator(h: &PauliSum, d: &PauliSum) -> PauliSum {
    let inner = PauliSum::commutator(h, d);
    PauliSum::commutator(h, &inner)
}

/// `β₁ = -⟨∂H, C⟩ / ⟨C, C⟩`, the minimizer of `‖∂H + β₁ C‖`.
pub fn variational_beta1(h: &PauliSum, d: &PauliSum) -> Result<f64> {
    let c = nested_commutator(h, d);
    let cc = c.norm_sqr();
    let scale = h.norm_sqr().powi(2) * d.norm_sqr();
    if cc <= 1e-24 * scale || cc == 0.0 {
        return Err(Error::DegenerateSchedule);
    }
    Ok(-d.inner(&c).re / cc)
}

pub fn agp_coefficient(inst: &HuboInstance, fields: &MixerFields, lambda: f64) -> Result<f64> {
    AgpOperators::new(inst, fields)?.beta1(lambda)
}

/// `|⟨G, C⟩| / (‖G‖ ‖C‖)` for `G = ∂H + β₁ C`; zero at the minimizer.
pub fn agp_residual(h: &PauliSum, d: &PauliSum, beta1: f64) -> f64 {
    let c = nested_commutator(h, d);
    let g = d.plus(&c.scaled(beta1));
    g.inner(&c).norm() / (g.norm_sqr() * c.norm_sqr()).sqrt()
}

/// `λ(t) = sin²(π t / 2T)`.
pub fn schedule_lambda(t: f64, total_time: f64) -> f64 {
    (PI * t / (2.0 * total_time)).sin().powi(2)
}

pub fn schedule_lambda_dot(t: f64, total_time: f64) -> f64 {
    PI / (2.0 * total_time) * (PI * t / total_time).sin()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrotterStep {
    pub dt: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
    pub beta1: f64,
}

impl TrotterStep {
    /// Rotation angle of a term with the given base coefficient.
    pub fn angle(&self, base_coefficient: f64) -> f64 {
        self.dt * (-2.0 * self.beta1) * self.lambda_dot * base_coefficient
    }
}

/// Steps at the midpoints `t_k = (k + 1/2) T / n_trot`.
pub fn trotter_steps(ops: &AgpOperators, n_trot: usize, total_time: f64) -> Result<Vec<TrotterStep>> {
    if n_trot == 0 || !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidParameter(
            "need n_trot >= 1 and a positive total time".into(),
        ));
    }
    let dt = total_time / n_trot as f64;
    (0..n_trot)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            let lambda = schedule_lambda(t, total_time);
            Ok(TrotterStep {
                dt,
                lambda,
                lambda_dot: schedule_lambda_dot(t, total_time),
                beta1: ops.beta1(lambda)?,
            })
        })
        .collect()
}

/// Applies every step: one-body rotations, then three-body, then two-body.
pub fn evolve_impulse(state: &mut StateVector, terms: &[CdTerm], steps: &[TrotterStep]) -> Result<()> {
    let rank = |order: usize| match order {
        1 => 0,
        3 => 1,
        _ => 2,
    };
    let mut ordered: Vec<&CdTerm> = terms.iter().collect();
    ordered.sort_by_key(|t| rank(t.order));
    for step in steps {
        for term in &ordered {
            state.apply_pauli_rotation(&term.pauli, step.angle(term.base_coefficient))?;
        }
    }
    Ok(())
}

/// Lexicographic order of the 0/1 strings, qubit 0 first.
fn cmp_bitstrings(a: &SpinConfiguration, b: &SpinConfiguration) -> Ordering {
    // bit 0 is spin +1, so the order on spins is reversed
    b.as_slice().cmp(a.as_slice())
}

fn cmp_samples(a: &(SpinConfiguration, f64), b: &(SpinConfiguration, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| cmp_bitstrings(&a.0, &b.0))
}

/// The `n_cvar` lowest-energy samples, counted with multiplicity.
pub fn cvar_select(
    samples: &[(SpinConfiguration, f64)],
    n_cvar: usize,
) -> Result<Vec<(SpinConfiguration, f64)>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples to select from".into()));
    }
    if n_cvar == 0 || n_cvar > samples.len() {
        return Err(Error::InvalidParameter(format!(
            "n_cvar = {n_cvar} outside 1..={}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(cmp_samples);
    sorted.truncate(n_cvar);
    Ok(sorted)
}

/// `h^b_i = ⟨σ^z_i⟩` over the selection.
pub fn update_bias(selected: &[(SpinConfiguration, f64)]) -> Result<Vec<f64>> {
    let first = selected
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty selection".into()))?;
    let n = first.0.len();
    let mut sum = vec![0.0; n];
    for (s, _) in selected {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: s.len(),
            });
        }
        for (acc, &v) in sum.iter_mut().zip(s.as_slice()) {
            *acc += f64::from(v);
        }
    }
    let k = selected.len() as f64;
    Ok(sum.into_iter().map(|v| v / k).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcqoParams {
    pub n_shots: usize,
    pub n_iter: usize,
    pub n_cvar: usize,
    pub n_trot: usize,
    pub total_time: f64,
    pub h_x: f64,
    pub bias_magnitude: f64,
    /// Local SA sweeps applied to the best sample of each iteration.
    pub loc_sweeps: usize,
    pub one_body_field: OneBodyField,
    pub seed: u64,
}

impl Default for DcqoParams {
    fn default() -> Self {
        DcqoParams {
            n_shots: 5000,
            n_iter: 1,
            n_cvar: 500,
            n_trot: 1,
            total_time: 1.0,
            h_x: 1.0,
            bias_magnitude: 1.0,
            loc_sweeps: 900,
            one_body_field: OneBodyField::WithBias,
            seed: 0,
        }
    }
}

impl DcqoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_shots == 0 {
            return bad("need at least one shot".into());
        }
        if self.n_cvar == 0 || self.n_cvar > self.n_shots {
            return bad(format!("n_cvar = {} outside 1..={}", self.n_cvar, self.n_shots));
        }
        if self.n_trot == 0 {
            return bad("need at least one Trotter step".into());
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return bad(format!("total time {} must be positive", self.total_time));
        }
        if self.h_x == 0.0 || !self.h_x.is_finite() {
            return bad("transverse field must be nonzero and finite".into());
        }
        if !(self.bias_magnitude > 0.0 && self.bias_magnitude.is_finite()) {
            return bad(format!("bias magnitude {} must be positive", self.bias_magnitude));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcqoOutcome {
    pub report: StageReport,
    /// Lowest distinct observed configurations (at most [`POOL_SIZE`]),
    /// sorted by energy then bitstring.
    pub pool: Vec<(SpinConfiguration, f64)>,
    /// Bias fields after the last iteration.
    pub final_bias: Vec<f64>,
}

/// Runs `n_iter` feedback iterations starting from the bias of `seed_config`.
pub fn run(inst: &HuboInstance, seed_config: &SpinConfiguration, params: &DcqoParams) -> Result<DcqoOutcome> {
    params.validate()?;
    let n = inst.num_vars();
    let cap = crate::qubit_cap();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "statevector simulation",
            n,
            cap,
        });
    }
    let clock = Instant::now();
    let mut best = seed_config.clone();
    let mut best_energy = inst.energy(seed_config)?;
    let mut fields = seed_bias_from_bitstring(seed_config, params.bias_magnitude, params.h_x)?;
    let mut observed: HashMap<SpinConfiguration, f64> = HashMap::new();
    observed.insert(best.clone(), best_energy);
    let mut history = Vec::with_capacity(params.n_iter);

    for it in 0..params.n_iter {
        let mut rng = stream_rng(params.seed, it as u64);
        let ops = AgpOperators::new(inst, &fields)?;
        let steps = trotter_steps(&ops, params.n_trot, params.total_time)?;
        let terms = build_cd_terms(inst, &fields, params.one_body_field)?;
        let mut state = StateVector::prepare_product(&initial_angles(&fields)?)?;
        evolve_impulse(&mut state, &terms, &steps)?;

        let mut energies: HashMap<u64, f64> = HashMap::new();
        let mut samples: Vec<(SpinConfiguration, f64)> = state
            .sample(params.n_shots, &mut rng)?
            .into_iter()
            .map(|b| {
                let s = SpinConfiguration::from_index(b, n);
                let e = *energies.entry(b).or_insert_with(|| inst.energy_unchecked(s.as_slice()));
                (s, e)
            })
            .collect();

        let lowest = (0..samples.len())
            .min_by(|&a, &b| cmp_samples(&samples[a], &samples[b]))
            .expect("at least one shot");
        let (refined, refined_energy) = local_refine(inst, &samples[lowest].0, params.loc_sweeps, &mut rng)?;
        samples[lowest] = (refined, refined_energy);

        for (s, e) in &samples {
            observed.entry(s.clone()).or_insert(*e);
        }
        let (top, top_energy) = &samples[lowest];
        if *top_energy < best_energy {
            best = top.clone();
            best_energy = *top_energy;
        }
        history.push(best_energy);

        let selected = cvar_select(&samples, params.n_cvar)?;
        fields.h_b = update_bias(&selected)?;
    }

    let mut pool: Vec<(SpinConfiguration, f64)> = observed.into_iter().collect();
    pool.sort_by(cmp_samples);
    pool.truncate(POOL_SIZE);

    let shots = (params.n_iter * params.n_shots) as u64;
    let loc_sweeps = (params.n_iter * params.loc_sweeps) as u64;
    let report = StageReport {
        stage: Stage::Bfdcqo,
        best,
        best_energy,
        model_time_s: bfdcqo_model_time(shots, loc_sweeps),
        counters: Counters {
            shots,
            loc_sweeps,
            iterations: params.n_iter as u64,
            ..Counters::default()
        },
        seed: params.seed,
        history,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    Ok(DcqoOutcome {
        report,
        pool,
        final_bias: fields.h_b,
    })
}
