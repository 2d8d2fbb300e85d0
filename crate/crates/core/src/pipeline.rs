//! Sequential SA → BF-DCQO → (MTS | SA) pipeline and its runtime accounting.

use rayon::prelude::*;
use serde::Serialize;

use crate::bfdcqo::{self, DcqoParams};
use crate::error::{Error, Result};
use crate::hubo::{optimality_gap, HuboInstance, SpinConfiguration};
use crate::mts::{memetic_search, MtsParams};
use crate::report::{Stage, StageReport};
use crate::rng::derive_seed;
use crate::sa::{anneal, anneal_from, SaParams};
use crate::timing::{hsqc_total_time, FinalCounters, PipelineCounters, TimeBreakdown, SWEEP_SECONDS};

#[derive(Clone, Debug, PartialEq)]
pub enum FinalStage {
    /// MTS population cloned from the quantum stage's best bitstring.
    Mts(MtsParams),
    /// SA runs started from the lowest distinct quantum-stage samples.
    Sa(SaParams),
    /// Zero final budget.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HsqcParams {
    pub sa: SaParams,
    pub dcqo: DcqoParams,
    pub final_stage: FinalStage,
    /// Master seed; each stage draws from its own derived stream.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HsqcSummary {
    pub best: SpinConfiguration,
    pub best_energy: f64,
    pub best_stage: Stage,
    pub times: TimeBreakdown,
    pub total_model_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_state_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_percent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HsqcOutcome {
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub summary: HsqcSummary,
}

impl HsqcOutcome {
    pub fn wall_time_s(&self) -> f64 {
        self.stages.iter().map(|s| s.wall_time_s).sum()
    }
}

/// Seeds of the SA, quantum and final stages for a master seed.
pub fn stage_seeds(seed: u64) -> [u64; 3] {
    [derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3)]
}

pub fn run_hsqc(inst: &HuboInstance, params: &HsqcParams) -> Result<HsqcOutcome> {
    let [sa_seed, dcqo_seed, final_seed] = stage_seeds(params.seed);
    let sa_params = SaParams {
        seed: sa_seed,
        ..params.sa.clone()
    };
    let sa = anneal(inst, &sa_params).map_err(|e| e.in_stage("sa"))?;

    let dcqo_params = DcqoParams {
        seed: dcqo_seed,
        ..params.dcqo.clone()
    };
    let quantum = bfdcqo::run(inst, &sa.best, &dcqo_params).map_err(|e| e.in_stage("bfdcqo"))?;

    let (last, last_counters) = match &params.final_stage {
        FinalStage::Mts(mts) => {
            let mts_params = MtsParams {
                seed: final_seed,
                warm_start: Some(quantum.report.best.clone()),
                ..mts.clone()
            };
            let out = memetic_search(inst, &mts_params).map_err(|e| e.in_stage("mts"))?;
            let flips = out.report.counters.bitflips;
            (Some(out.report), FinalCounters::Mts { bitflips: flips })
        }
        FinalStage::Sa(sa_final) => {
            let final_params = SaParams {
                seed: final_seed,
                ..sa_final.clone()
            };
            let starts: Vec<SpinConfiguration> = quantum.pool.iter().map(|(s, _)| s.clone()).collect();
            let report =
                anneal_from(inst, &final_params, &starts, Stage::SaFinal).map_err(|e| e.in_stage("sa_final"))?;
            let counters = FinalCounters::Sa {
                sweeps: report.counters.sweeps,
                runs: report.counters.runs,
            };
            (Some(report), counters)
        }
        FinalStage::None => (None, FinalCounters::None),
    };

    let counters = PipelineCounters {
        sa_sweeps: sa.counters.sweeps,
        sa_runs: sa.counters.runs,
        shots: quantum.report.counters.shots,
        loc_sweeps: quantum.report.counters.loc_sweeps,
        last: last_counters,
    };
    let mut stages = vec![sa, quantum.report];
    stages.extend(last);
    let summary = summarize(inst, &stages, hsqc_total_time(&counters))?;
    Ok(HsqcOutcome {
        seed: params.seed,
        stages,
        summary,
    })
}

/// Minimum over stage bests (earliest stage wins ties).
pub fn summarize(inst: &HuboInstance, stages: &[StageReport], times: TimeBreakdown) -> Result<HsqcSummary> {
    let best = stages
        .iter()
        .reduce(|a, b| if b.best_energy < a.best_energy { b } else { a })
        .ok_or_else(|| Error::InvalidParameter("pipeline produced no stages".into()))?;
    let ground_state_energy = inst.ground_state_energy();
    let gap_percent = match ground_state_energy {
        Some(e_gs) if e_gs != 0.0 => Some(optimality_gap(best.best_energy, e_gs)?),
        _ => None,
    };
    Ok(HsqcSummary {
        best: best.best.clone(),
        best_energy: best.best_energy,
        best_stage: best.stage,
        times,
        total_model_time_s: times.total,
        ground_state_energy,
        gap_percent,
    })
}

/// Independent pipeline trials, one per master seed, run concurrently.
pub fn run_trials(inst: &HuboInstance, params: &HsqcParams, seeds: &[u64]) -> Result<Vec<HsqcOutcome>> {
    seeds
        .par_iter()
        .map(|&seed| run_hsqc(inst, &HsqcParams { seed, ..params.clone() }))
        .collect()
}

/// SA sweep count whose model time over `n_runs` runs is closest to `seconds`.
pub fn sa_sweeps_for_time(seconds: f64, n_runs: usize) -> Result<usize> {
    if !(seconds >= 0.0 && seconds.is_finite()) || n_runs == 0 {
        return Err(Error::InvalidParameter(
            "budget must be finite and non-negative with at least one run".into(),
        ));
    }
    Ok((seconds / (n_runs as f64 * SWEEP_SECONDS)).round() as usize)
}
