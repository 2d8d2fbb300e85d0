//! Acceptance suite. Runs every criterion in order and prints one
//! `PASS`/`FAIL` line per criterion; exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde_json::Value;

use hsqc::bfdcqo::{
    self, agp_coefficient, agp_residual, build_cd_terms, evolve_impulse, initial_angles, trotter_steps,
    AgpOperators, DcqoParams, MixerFields, OneBodyField,
};
use hsqc::exact::brute_force_ground_state;
use hsqc::hubo::{optimality_gap, HuboInstance};
use hsqc::instance_gen::{ring_instance, sample_couplings, CouplingDistribution};
use hsqc::mts::{memetic_search, mutation_rate, MtsParams};
use hsqc::pipeline::{run_hsqc, sa_sweeps_for_time, FinalStage, HsqcParams};
use hsqc::rng::stream_rng;
use hsqc::sa::{anneal, SaParams};
use hsqc::statevector::{Pauli, PauliString, StateVector};
use hsqc::timing::{
    bfdcqo_model_time, convergence_time, hsqc_total_time, FinalCounters, PipelineCounters, Tau,
    BITFLIP_SECONDS,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn table_arithmetic() -> Verdict {
    let c = PipelineCounters {
        sa_sweeps: 1000,
        sa_runs: 100,
        shots: 5000,
        loc_sweeps: 900,
        last: FinalCounters::Mts {
            bitflips: (0.475 / BITFLIP_SECONDS).round() as u64,
        },
    };
    let t = hsqc_total_time(&c);
    let dcqo_rounded = (t.bfdcqo * 1000.0).round() / 1000.0;
    let pass = close(t.sa, 0.600, 1e-3)
        && close(dcqo_rounded, 0.505, 1e-3)
        && close(t.bfdcqo, bfdcqo_model_time(5000, 900), 0.0)
        && close(t.last, 0.475, 1e-3)
        && close(t.total, 1.580, 1e-3);
    verdict(
        pass,
        format!(
            "T_SA={:.3} T_BFDCQO={:.4} T_MTS={:.3} total={:.3}",
            t.sa, t.bfdcqo, t.last, t.total
        ),
    )
}

fn convergence_formula() -> Verdict {
    let tau = |p, tf| match convergence_time(p, tf, 0.99).unwrap().tau {
        Tau::Finite(t) => t,
        _ => f64::NAN,
    };
    let a = tau(0.52, 300.0);
    let b = tau(0.26, 180.0);
    verdict(
        close(a, 1882.30, 0.1) && close(b, 2752.96, 0.1),
        format!("tau(0.52,300)={a:.2} tau(0.26,180)={b:.2}"),
    )
}

fn success(energy: f64, e_gs: f64) -> bool {
    (energy - e_gs).abs() <= 1e-6 * e_gs.abs()
}

fn oracle_equivalence() -> Verdict {
    let mut sa_hits = 0;
    let mut mts_hits = 0;
    let total = 100;
    for k in 0..total as u64 {
        let n = 8 + (k % 7) as usize;
        let inst = ring_instance(n, 10_000 + k).unwrap();
        let e_gs = brute_force_ground_state(&inst).unwrap().energy;
        let sa = anneal(&inst, &SaParams::new(5000, 32, k)).unwrap();
        sa_hits += success(sa.best_energy, e_gs) as usize;
        let mts = memetic_search(
            &inst,
            &MtsParams {
                population: 8,
                generations: 200,
                tabu_iters: 10,
                seed: k,
                ..MtsParams::default()
            },
        )
        .unwrap();
        mts_hits += success(mts.report.best_energy, e_gs) as usize;
    }
    verdict(
        sa_hits * 100 >= 95 * total && mts_hits * 100 >= 80 * total,
        format!("SA {sa_hits}/{total} (need 95), MTS {mts_hits}/{total} (need 80)"),
    )
}

fn monotonicity() -> Verdict {
    let non_increasing = |h: &[f64]| h.windows(2).filter(|w| w[1] > w[0]).count();

    let mut checkpoints = 0;
    let mut mts_violations = 0;
    for k in 0..50u64 {
        let inst = ring_instance(8 + (k % 7) as usize, 30_000 + k).unwrap();
        let out = memetic_search(
            &inst,
            &MtsParams {
                generations: 200,
                stop_on_stagnation: false,
                seed: k,
                ..MtsParams::default()
            },
        )
        .unwrap();
        checkpoints += out.report.history.len();
        mts_violations += non_increasing(&out.report.history);
    }

    let mut dcqo_violations = 0;
    for k in 0..20u64 {
        let inst = ring_instance(10, 31_000 + k).unwrap();
        let seed_config = hsqc::SpinConfiguration::random(10, &mut stream_rng(k, 9));
        let params = DcqoParams {
            n_shots: 200,
            n_iter: 5,
            n_cvar: 20,
            loc_sweeps: 10,
            seed: k,
            ..DcqoParams::default()
        };
        let out = bfdcqo::run(&inst, &seed_config, &params).unwrap();
        dcqo_violations += non_increasing(&out.report.history);
    }

    let mut sa_violations = 0;
    for k in 0..20u64 {
        let inst = ring_instance(12, 32_000 + k).unwrap();
        let short = anneal(&inst, &SaParams::new(50, 8, k)).unwrap();
        let long = anneal(&inst, &SaParams::new(50, 24, k)).unwrap();
        sa_violations += non_increasing(&long.history);
        sa_violations += (long.best_energy > short.best_energy) as usize;
        sa_violations += (long.history[..8] != short.history[..]) as usize;
    }
    verdict(
        checkpoints >= 10_000 && mts_violations == 0 && dcqo_violations == 0 && sa_violations == 0,
        format!(
            "MTS {checkpoints} checkpoints/{mts_violations} violations, BF-DCQO {dcqo_violations}, SA {sa_violations}"
        ),
    )
}

fn dense(p: &PauliString, n: usize) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let single = |op: Option<Pauli>| {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        match op {
            None => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            Some(Pauli::X) => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Some(Pauli::Y) => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Some(Pauli::Z) => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    };
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in (0..n).rev() {
        let op = p.ops().iter().find(|(k, _)| *k == q).map(|&(_, o)| o);
        m = m.kronecker(&single(op));
    }
    m * c(p.coefficient(), 0.0)
}

fn random_pauli<R: Rng>(n: usize, rng: &mut R) -> PauliString {
    loop {
        let ops: Vec<_> = (0..n)
            .filter_map(|q| match rng.random_range(0..4) {
                0 => None,
                1 => Some((q, Pauli::X)),
                2 => Some((q, Pauli::Y)),
                _ => Some((q, Pauli::Z)),
            })
            .collect();
        if !ops.is_empty() {
            return PauliString::new(ops, rng.random_range(-1.5..1.5)).unwrap();
        }
    }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn quantum_numerics() -> Verdict {
    let mut rng = stream_rng(50, 0);

    let angles: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut state = StateVector::prepare_product(&angles).unwrap();
    for _ in 0..1000 {
        let p = random_pauli(10, &mut rng);
        state.apply_pauli_rotation(&p, rng.random_range(-3.0..3.0)).unwrap();
    }
    let drift = (state.norm() - 1.0).abs();

    let mut rotation_err: f64 = 0.0;
    for n in 1..=4 {
        for _ in 0..25 {
            let angles: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut psi = StateVector::prepare_product(&angles).unwrap();
            psi.apply_pauli_rotation(&random_pauli(n, &mut rng), 0.4).unwrap();
            let p = random_pauli(n, &mut rng);
            let theta = rng.random_range(-3.0..3.0);
            let mut fast = psi.clone();
            fast.apply_pauli_rotation(&p, theta).unwrap();
            let u = (dense(&p, n) * Complex64::new(0.0, -theta)).exp();
            let v = u * DMatrix::from_column_slice(1 << n, 1, psi.amplitudes());
            rotation_err = rotation_err.max(max_diff(fast.amplitudes(), v.as_slice()));
        }
    }

    let mut cd_err: f64 = 0.0;
    let dist = CouplingDistribution::default();
    for (k, idx) in [vec![0, 1, 2], vec![0, 1], vec![1, 3], vec![0, 2, 3]].into_iter().enumerate() {
        let n = idx.iter().max().unwrap() + 1;
        let w = sample_couplings(&dist, 1, k as u64).unwrap()[0];
        let inst = HuboInstance::new(n, [(idx, w)]).unwrap();
        let h_x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let h_b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fields = MixerFields::new(h_x, h_b).unwrap();
        let ops = AgpOperators::new(&inst, &fields).unwrap();
        let steps = trotter_steps(&ops, 1, 1.0).unwrap();
        let terms = build_cd_terms(&inst, &fields, OneBodyField::WithBias).unwrap();
        let psi = StateVector::prepare_product(&initial_angles(&fields).unwrap()).unwrap();
        let mut fast = psi.clone();
        evolve_impulse(&mut fast, &terms, &steps).unwrap();
        let mut generator = DMatrix::<Complex64>::zeros(1 << n, 1 << n);
        for t in &terms {
            generator += dense(&t.pauli, n) * Complex64::new(steps[0].angle(t.base_coefficient), 0.0);
        }
        let u = (generator * Complex64::new(0.0, -1.0)).exp();
        let v = u * DMatrix::from_column_slice(1 << n, 1, psi.amplitudes());
        cd_err = cd_err.max(max_diff(fast.amplitudes(), v.as_slice()));
    }

    let mut eigen_residual: f64 = 0.0;
    for _ in 0..50 {
        let hx = rng.random_range(-2.0..2.0);
        let hb = rng.random_range(-5.0..5.0);
        let fields = MixerFields::new(vec![hx], vec![hb]).unwrap();
        let s = StateVector::prepare_product(&initial_angles(&fields).unwrap()).unwrap();
        let a = s.amplitudes();
        let r = hb.hypot(hx);
        let out0 = hb * a[0] + hx * a[1] - r * a[0];
        let out1 = hx * a[0] - hb * a[1] - r * a[1];
        eigen_residual = eigen_residual.max(out0.norm().max(out1.norm()));
    }

    let mut orth: f64 = 0.0;
    for trial in 0..10u64 {
        let n = 6;
        let mut idx: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for i in 0..n {
            let mut e = vec![i, (i + 1) % n];
            e.sort();
            idx.push(e);
        }
        idx.push(vec![0, 2, 4]);
        idx.push(vec![1, 3, 5]);
        let w = sample_couplings(&dist, idx.len(), 100 + trial).unwrap();
        let inst = HuboInstance::new(n, idx.into_iter().zip(w)).unwrap();
        let h_b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fields = MixerFields::new(vec![1.0; n], h_b).unwrap();
        let ops = AgpOperators::new(&inst, &fields).unwrap();
        let lambda = rng.random_range(0.05..0.95);
        let beta = ops.beta1(lambda).unwrap();
        let (h, d) = ops.hamiltonian(lambda);
        orth = orth.max(agp_residual(&h, &d, beta));
    }

    let one = HuboInstance::new(1, [(vec![0], 1.0)]).unwrap();
    let fields = MixerFields::unbiased(1, 1.0).unwrap();
    let beta = agp_coefficient(&one, &fields, 0.5).unwrap();
    let base = build_cd_terms(&one, &fields, OneBodyField::WithBias).unwrap()[0].base_coefficient;
    let agp_err = (-2.0 * beta * base - 1.0).abs();

    verdict(
        drift < 1e-10 && rotation_err < 1e-10 && cd_err < 1e-10 && eigen_residual < 1e-10 && orth < 1e-10 && agp_err < 1e-9,
        format!(
            "drift {drift:.1e}, rotations {rotation_err:.1e}, CD {cd_err:.1e}, eigen {eigen_residual:.1e}, beta1 orth {orth:.1e}, AGP {agp_err:.1e}"
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn pipeline_benefit() -> Verdict {
    let mut hsqc_gaps = Vec::new();
    let mut sa_gaps = Vec::new();
    for seed in 0..50u64 {
        let inst = ring_instance(14, 1000 + seed).unwrap();
        let e_gs = brute_force_ground_state(&inst).unwrap().energy;
        let params = HsqcParams {
            sa: SaParams::new(20, 8, 0),
            dcqo: DcqoParams {
                n_shots: 50,
                n_iter: 1,
                n_cvar: 5,
                loc_sweeps: 20,
                ..DcqoParams::default()
            },
            final_stage: FinalStage::Mts(MtsParams {
                generations: 10,
                ..MtsParams::default()
            }),
            seed,
        };
        let out = run_hsqc(&inst, &params).unwrap();
        let sweeps = sa_sweeps_for_time(out.summary.total_model_time_s, 8).unwrap().max(1);
        let sa = anneal(&inst, &SaParams::new(sweeps, 8, 7777 + seed)).unwrap();
        hsqc_gaps.push(optimality_gap(out.summary.best_energy, e_gs).unwrap());
        sa_gaps.push(optimality_gap(sa.best_energy, e_gs).unwrap());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mh, ms) = (median(hsqc_gaps.clone()), median(sa_gaps.clone()));
    verdict(
        mh <= ms,
        format!(
            "median gap HSQC {mh:.3}% vs SA-only {ms:.3}% (means {:.3}% vs {:.3}%)",
            mean(&hsqc_gaps),
            mean(&sa_gaps)
        ),
    )
}

fn mutation_schedule() -> Verdict {
    let mut pass = true;
    for &(g_max, start, end) in &[(99usize, 0.1, 0.001), (25, 0.1, 0.001), (500, 0.3, 0.01), (1, 0.5, 0.2)] {
        pass &= mutation_rate(0, g_max, start, end).unwrap() == start;
        pass &= mutation_rate(g_max, g_max, start, end).unwrap() == end;
        for g in 0..g_max {
            pass &= mutation_rate(g + 1, g_max, start, end).unwrap() < mutation_rate(g, g_max, start, end).unwrap();
        }
    }
    verdict(pass, "endpoints exact, strictly decreasing for 4 schedules")
}

fn strip_measured(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("measured");
            map.values_mut().for_each(strip_measured);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_measured),
        _ => {}
    }
}

fn cli_output(args: &[&str], jobs: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hsqc"))
        .arg("--jobs")
        .arg(jobs)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism(dir: &Path) -> Verdict {
    let instance = dir.join("instance.json");
    let generate = ["generate", "--topology", "ring", "--qubits", "10", "--rho2", "2", "--seed", "7", "--with-ground-state"];
    match cli_output(&generate, "1") {
        Ok(bytes) => std::fs::write(&instance, bytes).unwrap(),
        Err(e) => return verdict(false, e),
    }
    let inst = instance.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        generate.to_vec(),
        vec!["exact", inst],
        vec!["sa", inst, "--sweeps", "200", "--runs", "16", "--seed", "3"],
        vec!["mts", inst, "--generations", "30", "--seed", "3"],
        vec!["dcqo", inst, "--shots", "300", "--iters", "3", "--cvar", "30", "--loc-sweeps", "20", "--seed", "3"],
        vec!["hsqc", inst, "--trials", "4", "--sa-sweeps", "50", "--sa-runs", "8", "--shots", "200", "--cvar", "20", "--seed", "3"],
        vec!["hsqc", inst, "--final", "sa", "--trials", "3", "--sa-sweeps", "50", "--sa-runs", "8", "--shots", "200", "--cvar", "20", "--final-sweeps", "50", "--final-runs", "16", "--seed", "3"],
        vec!["tau", "--pgs", "0.52", "--tf", "300"],
    ];
    let mut mismatches = Vec::new();
    for cmd in &commands {
        let mut outputs = Vec::new();
        for jobs in ["1", "1", "8"] {
            match cli_output(cmd, jobs) {
                Ok(bytes) => {
                    let mut v: Value = match serde_json::from_slice(&bytes) {
                        Ok(v) => v,
                        Err(e) => return verdict(false, format!("{}: {e}", cmd[0])),
                    };
                    strip_measured(&mut v);
                    outputs.push(serde_json::to_vec(&v).unwrap());
                }
                Err(e) => return verdict(false, e),
            }
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            mismatches.push(cmd[0]);
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("{} commands, repeat and --jobs 1/8; mismatches: {mismatches:?}", commands.len()),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("table arithmetic", Box::new(table_arithmetic)),
        ("convergence formula", Box::new(convergence_formula)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("monotonicity suites", Box::new(monotonicity)),
        ("quantum-stage numerics", Box::new(quantum_numerics)),
        ("pipeline benefit", Box::new(pipeline_benefit)),
        ("mutation schedule endpoints", Box::new(mutation_schedule)),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let v = check();
        failed += !v.pass as usize;
        let status = if v.pass { "PASS" } else { "FAIL" };
        let line = format!(
            "criterion {} {status} {name}: {} [{:.1}s]",
            k + 1,
            v.detail,
            clock.elapsed().as_secs_f64()
        );
        println!("{line}");
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
