//! Simulated annealing on the spin form.
//!
//! Each run starts from a random configuration (or a supplied one), visits the
//! spins in a fresh random order every sweep and applies the Metropolis rule at
//! one temperature per sweep. Temperatures decay geometrically from
//! `T_init = max_i 2 Σ_{T∋i} |w_T|` to `T_final = 0.01 T_init`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, SpinConfiguration};
use crate::report::{Counters, Stage, StageReport};
use crate::rng::stream_rng;
use crate::timing::sa_model_time;

pub const FINAL_TEMPERATURE_RATIO: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct SaParams {
    pub n_sweep: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub t_init_override: Option<f64>,
    pub t_final_override: Option<f64>,
}

impl SaParams {
    pub fn new(n_sweep: usize, n_runs: usize, seed: u64) -> Self {
        SaParams {
            n_sweep,
            n_runs,
            seed,
            t_init_override: None,
            t_final_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweep == 0 || self.n_runs == 0 {
            return Err(Error::InvalidParameter("SA needs at least one sweep and one run".into()));
        }
        for t in [self.t_init_override, self.t_final_override].into_iter().flatten() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("temperature {t} must be positive")));
            }
        }
        if let (Some(hi), Some(lo)) = (self.t_init_override, self.t_final_override) {
            if lo >= hi {
                return Err(Error::InvalidParameter(format!(
                    "final temperature {lo} must be below initial temperature {hi}"
                )));
            }
        }
        Ok(())
    }

    fn temperatures(&self, inst: &HuboInstance) -> Result<(f64, f64)> {
        let (t_init, t_final) = match (self.t_init_override, self.t_final_override) {
            (Some(hi), Some(lo)) => (hi, lo),
            (Some(hi), None) => (hi, FINAL_TEMPERATURE_RATIO * hi),
            (None, lo) => {
                let (hi, default_lo) = initial_temperature(inst)?;
                (hi, lo.unwrap_or(default_lo))
            }
        };
        if t_final >= t_init {
            return Err(Error::InvalidParameter(format!(
                "final temperature {t_final} must be below initial temperature {t_init}"
            )));
        }
        Ok((t_init, t_final))
    }
}

/// `(T_init, T_final)` from the largest single-flip energy bound.
pub fn initial_temperature(inst: &HuboInstance) -> Result<(f64, f64)> {
    let t_init = (0..inst.num_vars())
        .map(|i| inst.max_delta_bound(i))
        .fold(0.0, f64::max);
    if t_init <= 0.0 {
        return Err(Error::EmptyInstance);
    }
    Ok((t_init, FINAL_TEMPERATURE_RATIO * t_init))
}

/// Geometric schedule with `T_1 = t_init` and `T_n = t_final`.
pub fn temperature_schedule(t_init: f64, t_final: f64, n_sweep: usize) -> Vec<f64> {
    match n_sweep {
        0 => Vec::new(),
        1 => vec![t_init],
        n => {
            let ratio = (t_final / t_init).powf(1.0 / (n - 1) as f64);
            let mut temps: Vec<f64> = (0..n).map(|k| t_init * ratio.powi(k as i32)).collect();
            temps[n - 1] = t_final;
            temps
        }
    }
}

pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepTrace {
    pub run: usize,
    pub sweep: usize,
    pub temperature: f64,
    pub current_energy: f64,
    pub best_energy: f64,
}

/// One annealing run. Returns the lowest-energy configuration encountered.
pub fn anneal_run<R: Rng + ?Sized>(
    inst: &HuboInstance,
    schedule: &[f64],
    start: Option<&SpinConfiguration>,
    rng: &mut R,
    mut trace: Option<&mut dyn FnMut(usize, f64, f64, f64)>,
) -> (SpinConfiguration, f64) {
    let n = inst.num_vars();
    let mut state = match start {
        Some(s) => s.clone(),
        None => SpinConfiguration::random(n, rng),
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut energy = inst.energy_unchecked(state.as_slice());
    let mut best = state.clone();
    let mut best_energy = energy;
    for (k, &t) in schedule.iter().enumerate() {
        order.shuffle(rng);
        let spins = state.as_mut_slice();
        for &i in &order {
            let delta = inst.delta_unchecked(spins, i);
            if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                spins[i] = -spins[i];
                energy += delta;
                if energy < best_energy {
                    best_energy = energy;
                    best.as_mut_slice().copy_from_slice(spins);
                }
            }
        }
        if let Some(f) = trace.as_mut() {
            f(k, t, energy, best_energy);
        }
    }
    let best_energy = inst.energy_unchecked(best.as_slice());
    (best, best_energy)
}

/// Low-temperature SA polish of a single configuration, used between
/// quantum iterations. The schedule runs from `T_final` down to `T_final / 10`.
pub fn local_refine<R: Rng + ?Sized>(
    inst: &HuboInstance,
    start: &SpinConfiguration,
    n_sweep: usize,
    rng: &mut R,
) -> Result<(SpinConfiguration, f64)> {
    let energy = inst.energy(start)?;
    if n_sweep == 0 {
        return Ok((start.clone(), energy));
    }
    let (_, t_final) = initial_temperature(inst)?;
    let schedule = temperature_schedule(t_final, t_final / 10.0, n_sweep);
    let (best, best_energy) = anneal_run(inst, &schedule, Some(start), rng, None);
    Ok(if best_energy < energy {
        (best, best_energy)
    } else {
        (start.clone(), energy)
    })
}

struct RunResult {
    best: SpinConfiguration,
    energy: f64,
    trace: Vec<SweepTrace>,
}

fn run_all(
    inst: &HuboInstance,
    params: &SaParams,
    starts: &[SpinConfiguration],
    stage: Stage,
    keep_trace: bool,
) -> Result<(StageReport, Vec<SweepTrace>)> {
    params.validate()?;
    for s in starts {
        if s.len() != inst.num_vars() {
            return Err(Error::LengthMismatch {
                expected: inst.num_vars(),
                got: s.len(),
            });
        }
    }
    let clock = Instant::now();
    let (t_init, t_final) = params.temperatures(inst)?;
    let schedule = temperature_schedule(t_init, t_final, params.n_sweep);
    let runs: Vec<RunResult> = (0..params.n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(params.seed, run as u64);
            let start = (!starts.is_empty()).then(|| &starts[run % starts.len()]);
            let mut trace = Vec::new();
            let mut record = |sweep, temperature, current_energy, best_energy| {
                trace.push(SweepTrace {
                    run,
                    sweep,
                    temperature,
                    current_energy,
                    best_energy,
                })
            };
            let sink: Option<&mut dyn FnMut(usize, f64, f64, f64)> =
                if keep_trace { Some(&mut record) } else { None };
            let (best, energy) = anneal_run(inst, &schedule, start, &mut rng, sink);
            RunResult { best, energy, trace }
        })
        .collect();

    let mut history = Vec::with_capacity(runs.len());
    let mut best_idx = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.energy < runs[best_idx].energy {
            best_idx = r;
        }
        history.push(runs[best_idx].energy);
    }
    let best = runs[best_idx].best.clone();
    let best_energy = runs[best_idx].energy;
    let trace = runs.into_iter().flat_map(|r| r.trace).collect();
    let report = StageReport {
        stage,
        best,
        best_energy,
        model_time_s: sa_model_time(params.n_sweep as u64, params.n_runs as u64),
        counters: Counters {
            sweeps: params.n_sweep as u64,
            runs: params.n_runs as u64,
            ..Counters::default()
        },
        seed: params.seed,
        history,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    Ok((report, trace))
}

/// Best of `n_runs` independent runs; run `r` draws from stream `(seed, r)`.
pub fn anneal(inst: &HuboInstance, params: &SaParams) -> Result<StageReport> {
    run_all(inst, params, &[], Stage::Sa, false).map(|(r, _)| r)
}

pub fn anneal_traced(
    inst: &HuboInstance,
    params: &SaParams,
) -> Result<(StageReport, Vec<SweepTrace>)> {
    run_all(inst, params, &[], Stage::Sa, true)
}

/// Runs start from `starts[r % starts.len()]` instead of random states.
pub fn anneal_from(
    inst: &HuboInstance,
    params: &SaParams,
    starts: &[SpinConfiguration],
    stage: Stage,
) -> Result<StageReport> {
    run_all(inst, params, starts, stage, false).map(|(r, _)| r)
}
