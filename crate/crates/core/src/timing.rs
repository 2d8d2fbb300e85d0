//! Runtime model and convergence statistics.
//!
//! Stage times are computed from work counters with fixed per-unit costs, so
//! reported runtimes do not depend on the machine running the emulation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Seconds per SA sweep.
pub const SWEEP_SECONDS: f64 = 0.6e-5;
/// Seconds per measured shot on the quantum processor.
pub const SHOT_SECONDS: f64 = 1e-4;
/// Seconds per MTS neighbor evaluation.
pub const BITFLIP_SECONDS: f64 = 5.740e-8;

pub fn sa_model_time(n_sweep: u64, n_runs: u64) -> f64 {
    n_sweep as f64 * n_runs as f64 * SWEEP_SECONDS
}

pub fn bfdcqo_model_time(n_shots: u64, n_loc_sweeps: u64) -> f64 {
    n_shots as f64 * SHOT_SECONDS + n_loc_sweeps as f64 * SWEEP_SECONDS
}

pub fn mts_model_time(n_bitflip: u64) -> f64 {
    n_bitflip as f64 * BITFLIP_SECONDS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FinalCounters {
    Mts { bitflips: u64 },
    Sa { sweeps: u64, runs: u64 },
    None,
}

/// Work counters of a full pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineCounters {
    pub sa_sweeps: u64,
    pub sa_runs: u64,
    pub shots: u64,
    pub loc_sweeps: u64,
    pub last: FinalCounters,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeBreakdown {
    pub sa: f64,
    pub bfdcqo: f64,
    pub last: f64,
    pub total: f64,
}

/// Total modeled runtime: SA, then the quantum stage, then MTS (bit flips) or
/// a second SA (sweeps × runs).
pub fn hsqc_total_time(c: &PipelineCounters) -> TimeBreakdown {
    let sa = sa_model_time(c.sa_sweeps, c.sa_runs);
    let bfdcqo = bfdcqo_model_time(c.shots, c.loc_sweeps);
    let last = match c.last {
        FinalCounters::Mts { bitflips } => mts_model_time(bitflips),
        FinalCounters::Sa { sweeps, runs } => sa_model_time(sweeps, runs),
        FinalCounters::None => 0.0,
    };
    TimeBreakdown {
        sa,
        bfdcqo,
        last,
        total: sa + bfdcqo + last,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seconds")]
pub enum Tau {
    Finite(f64),
    /// The ground state was never observed.
    Infinite,
    /// Every trial succeeded.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauEstimate {
    pub p_gs: f64,
    pub t_f: f64,
    pub confidence: f64,
    pub tau: Tau,
}

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Time to reach the ground state with the given confidence:
/// `τ = t_f ln(1 - confidence) / ln(1 - p_gs)`.
pub fn convergence_time(p_gs: f64, t_f: f64, confidence: f64) -> Result<TauEstimate> {
    if !(0.0..=1.0).contains(&p_gs) {
        return Err(Error::InvalidParameter(format!("p_gs = {p_gs} outside [0, 1]")));
    }
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_f = {t_f} must be positive")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence = {confidence} outside (0, 1)"
        )));
    }
    let tau = if p_gs == 0.0 {
        Tau::Infinite
    } else if p_gs == 1.0 {
        Tau::Zero
    } else if p_gs == confidence {
        Tau::Finite(t_f)
    } else {
        Tau::Finite(t_f * (1.0 - confidence).ln() / (1.0 - p_gs).ln())
    };
    Ok(TauEstimate {
        p_gs,
        t_f,
        confidence,
        tau,
    })
}

/// Default success tolerance relative to the ground-state magnitude.
pub const PGS_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Fraction of trials whose best energy is within `tolerance` of `e_gs`
/// (default `1e-6 |e_gs|`).
pub fn estimate_pgs(trials: &[f64], e_gs: f64, tolerance: Option<f64>) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::InvalidParameter("no trials to estimate p_gs from".into()));
    }
    let tol = tolerance.unwrap_or(PGS_RELATIVE_TOLERANCE * e_gs.abs());
    let hits = trials.iter().filter(|&&e| (e - e_gs).abs() <= tol).count();
    Ok(hits as f64 / trials.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(t: TauEstimate) -> f64 {
        match t.tau {
            Tau::Finite(x) => x,
            other => panic!("expected finite tau, got {other:?}"),
        }
    }

    #[test]
    fn table_decomposition() {
        assert!((sa_model_time(1000, 100) - 0.600).abs() < 1e-12);
        assert!((sa_model_time(50_000, 1000) - 300.0).abs() < 1e-9);
        let dcqo = bfdcqo_model_time(5000, 900);
        assert!((dcqo - 0.5054).abs() < 1e-12);
        assert_eq!((dcqo * 1000.0).round() / 1000.0, 0.505);
        assert_eq!(mts_model_time(0), 0.0);
        assert!((mts_model_time(1_000_000) - 0.0574).abs() < 1e-12);
        let flips = (0.475 / BITFLIP_SECONDS).round();
        assert!((flips - 8.275e6).abs() < 1e4);
    }

    #[test]
    fn sweep_matched_totals() {
        // 10000 plain SA sweeps against 8167 final-stage sweeps after the
        // 0.600 s + 0.505 s prefix, all at 100 runs
        let plain = sa_model_time(10_000, 100);
        let hybrid = hsqc_total_time(&PipelineCounters {
            sa_sweeps: 1000,
            sa_runs: 100,
            shots: 5000,
            loc_sweeps: 900,
            last: FinalCounters::Sa {
                sweeps: 8167,
                runs: 100,
            },
        });
        assert_eq!(format!("{plain:.1}"), "6.0");
        assert_eq!(format!("{:.1}", hybrid.total), "6.0");
        assert!((hybrid.total - (hybrid.sa + hybrid.bfdcqo + hybrid.last)).abs() < 1e-15);
    }

    #[test]
    fn tau_reference_rows() {
        let t = finite(convergence_time(0.52, 300.0, DEFAULT_CONFIDENCE).unwrap());
        assert!((t - 1882.30).abs() < 0.1, "{t}");
        let t = finite(convergence_time(0.26, 180.0, DEFAULT_CONFIDENCE).unwrap());
        assert!((t - 2752.96).abs() < 0.1, "{t}");
        assert_eq!(finite(convergence_time(0.99, 7.0, DEFAULT_CONFIDENCE).unwrap()), 7.0);
        assert_eq!(convergence_time(0.0, 1.0, 0.99).unwrap().tau, Tau::Infinite);
        assert_eq!(convergence_time(1.0, 1.0, 0.99).unwrap().tau, Tau::Zero);
        assert!(convergence_time(1.5, 1.0, 0.99).is_err());
        assert!(convergence_time(0.5, 0.0, 0.99).is_err());
    }

    #[test]
    fn tau_monotone_and_linear() {
        let mut last = f64::INFINITY;
        for k in 1..100 {
            let t = finite(convergence_time(k as f64 / 100.0, 2.0, 0.99).unwrap());
            assert!(t < last);
            last = t;
            let scaled = finite(convergence_time(k as f64 / 100.0, 6.0, 0.99).unwrap());
            assert!((scaled - 3.0 * t).abs() < 1e-9 * scaled);
        }
    }

    #[test]
    fn pgs_counts() {
        let gs = -10.0;
        assert_eq!(estimate_pgs(&[gs; 4], gs, None).unwrap(), 1.0);
        assert_eq!(estimate_pgs(&[-9.0, -8.0], gs, None).unwrap(), 0.0);
        let mut trials = vec![gs; 52];
        trials.extend(vec![-9.5; 48]);
        assert_eq!(estimate_pgs(&trials, gs, None).unwrap(), 0.52);
        assert!(estimate_pgs(&[], gs, None).is_err());
    }
}
