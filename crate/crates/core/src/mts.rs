//! Memetic tabu search.
//!
//! A population of bitstrings evolves by uniform parent selection, single-point
//! crossover and per-bit mutation with a logarithmically decaying rate. Every
//! new individual is polished by a tabu-guided Hamming-1 local search whose
//! tabu list holds recently visited configurations (as Zobrist hashes).

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, SpinConfiguration, ENERGY_TOLERANCE};
use crate::report::{Counters, Stage, StageReport};
use crate::rng::stream_rng;
use crate::timing::mts_model_time;

#[derive(Clone, Debug, PartialEq)]
pub struct MtsParams {
    pub population: usize,
    pub generations: usize,
    pub tabu_iters: usize,
    pub tabu_len: usize,
    pub mu_start: f64,
    pub mu_end: f64,
    pub warm_start: Option<SpinConfiguration>,
    pub target: Option<f64>,
    /// Stop after a generation in which no refined child beats the better of its parents.
    pub stop_on_stagnation: bool,
    pub seed: u64,
}

impl Default for MtsParams {
    fn default() -> Self {
        MtsParams {
            population: 8,
            generations: 100,
            tabu_iters: 10,
            tabu_len: 10,
            mu_start: 0.1,
            mu_end: 0.001,
            warm_start: None,
            target: None,
            stop_on_stagnation: true,
            seed: 0,
        }
    }
}

impl MtsParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.population < 2 {
            return bad(format!("population {} must be at least 2", self.population));
        }
        if self.generations < 1 {
            return bad("MTS needs at least one generation".into());
        }
        if self.tabu_len < 1 {
            return bad("tabu list length must be at least 1".into());
        }
        let in_range = |mu: f64| mu > 0.0 && mu <= 1.0;
        if !in_range(self.mu_start) || !in_range(self.mu_end) || self.mu_end > self.mu_start {
            return bad(format!(
                "mutation range ({}, {}) must satisfy 0 < mu_end <= mu_start <= 1",
                self.mu_start, self.mu_end
            ));
        }
        if let Some(t) = self.target {
            if !t.is_finite() {
                return bad("target energy must be finite".into());
            }
        }
        Ok(())
    }
}

/// `μ_g = μ_end + (μ_start - μ_end) ln(G+1-g) / ln(G+1)`.
pub fn mutation_rate(g: usize, g_max: usize, mu_start: f64, mu_end: f64) -> Result<f64> {
    if g > g_max || g_max == 0 {
        return Err(Error::InvalidParameter(format!(
            "generation {g} outside 0..={g_max}"
        )));
    }
    if g == g_max {
        return Ok(mu_end);
    }
    let decay = ((g_max + 1 - g) as f64).ln() / ((g_max + 1) as f64).ln();
    Ok(mu_end + (mu_start - mu_end) * decay)
}

/// Zobrist keys for configuration hashing; a spin at -1 contributes its key.
#[derive(Clone, Debug)]
pub struct Zobrist(Vec<u64>);

impl Zobrist {
    pub fn new(n: usize) -> Self {
        let mut rng = stream_rng(0x5eed_2b15, n as u64);
        Zobrist((0..n).map(|_| rng.next_u64()).collect())
    }

    pub fn hash(&self, s: &SpinConfiguration) -> u64 {
        s.as_slice()
            .iter()
            .zip(&self.0)
            .filter(|(&spin, _)| spin < 0)
            .fold(0, |h, (_, &k)| h ^ k)
    }

    #[inline]
    pub fn key(&self, i: usize) -> u64 {
        self.0[i]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabuOutcome {
    pub best: SpinConfiguration,
    pub energy: f64,
    /// Neighbor energy evaluations performed.
    pub flips: u64,
    pub iterations: usize,
    /// Index of the spin flipped at each iteration.
    pub moves: Vec<usize>,
}

fn reached(energy: f64, target: Option<f64>) -> bool {
    target.is_some_and(|t| energy <= t + ENERGY_TOLERANCE * t.abs().max(1.0))
}

/// Tabu-guided local search from `start`. Each iteration moves to the
/// lowest-energy Hamming-1 neighbor not on the tabu list, even when that move
/// is uphill, and appends the configuration it left to the FIFO list of
/// length `tabu_len`. Returns the best configuration visited.
pub fn tabu_search(
    inst: &HuboInstance,
    zobrist: &Zobrist,
    start: &SpinConfiguration,
    tabu_len: usize,
    tabu_iters: usize,
    target: Option<f64>,
) -> Result<TabuOutcome> {
    let mut current = start.clone();
    let mut energy = inst.energy(start)?;
    let mut outcome = TabuOutcome {
        best: start.clone(),
        energy,
        flips: 0,
        iterations: 0,
        moves: Vec::new(),
    };
    if reached(energy, target) {
        return Ok(outcome);
    }
    let mut hash = zobrist.hash(&current);
    let mut tabu: VecDeque<u64> = VecDeque::with_capacity(tabu_len + 1);
    for _ in 0..tabu_iters {
        let spins = current.as_slice();
        let mut choice: Option<(usize, f64)> = None;
        for i in 0..spins.len() {
            if tabu.contains(&(hash ^ zobrist.key(i))) {
                continue;
            }
            outcome.flips += 1;
            let e = energy + inst.delta_unchecked(spins, i);
            if choice.is_none_or(|(_, best)| e < best) {
                choice = Some((i, e));
            }
        }
        let Some((i, e)) = choice else { break };
        tabu.push_back(hash);
        if tabu.len() > tabu_len {
            tabu.pop_front();
        }
        current.flip(i);
        hash ^= zobrist.key(i);
        energy = e;
        outcome.iterations += 1;
        outcome.moves.push(i);
        if energy < outcome.energy {
            outcome.best = current.clone();
            outcome.energy = energy;
            if reached(energy, target) {
                break;
            }
        }
    }
    outcome.energy = inst.energy_unchecked(outcome.best.as_slice());
    Ok(outcome)
}

fn crossover<R: Rng + ?Sized>(a: &SpinConfiguration, b: &SpinConfiguration, rng: &mut R) -> SpinConfiguration {
    let n = a.len();
    if n < 2 {
        return a.clone();
    }
    let point = rng.random_range(1..n);
    let spins = a.as_slice()[..point]
        .iter()
        .chain(&b.as_slice()[point..])
        .copied()
        .collect();
    SpinConfiguration::new(spins).expect("spins copied from valid parents")
}

fn mutate<R: Rng + ?Sized>(c: &mut SpinConfiguration, mu: f64, rng: &mut R) {
    for i in 0..c.len() {
        if rng.random::<f64>() < mu {
            c.flip(i);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Target,
    Generations,
    Stagnation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MtsOutcome {
    pub report: StageReport,
    pub termination: Termination,
}

struct Member {
    config: SpinConfiguration,
    energy: f64,
}

pub fn memetic_search(inst: &HuboInstance, params: &MtsParams) -> Result<MtsOutcome> {
    params.validate()?;
    let clock = Instant::now();
    let n = inst.num_vars();
    if let Some(ws) = &params.warm_start {
        if ws.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: ws.len(),
            });
        }
    }
    let zobrist = Zobrist::new(n);
    let refine = |s: &SpinConfiguration| {
        tabu_search(inst, &zobrist, s, params.tabu_len, params.tabu_iters, params.target)
    };

    let mut init_rng = stream_rng(params.seed, 0);
    let seeds: Vec<SpinConfiguration> = (0..params.population)
        .map(|_| match &params.warm_start {
            Some(ws) => ws.clone(),
            None => SpinConfiguration::random(n, &mut init_rng),
        })
        .collect();
    let refined: Vec<TabuOutcome> = seeds.par_iter().map(refine).collect::<Result<_>>()?;

    let mut flips = 0u64;
    let mut generations = 0u64;
    let mut history = Vec::new();
    let finish = |best: Member, flips: u64, generations: u64, history: Vec<f64>, termination| {
        let report = StageReport {
            stage: Stage::Mts,
            best: best.config,
            best_energy: best.energy,
            model_time_s: mts_model_time(flips),
            counters: Counters {
                generations,
                bitflips: flips,
                ..Counters::default()
            },
            seed: params.seed,
            history,
            wall_time_s: clock.elapsed().as_secs_f64(),
        };
        MtsOutcome { report, termination }
    };

    let mut population = Vec::with_capacity(params.population);
    for outcome in refined {
        flips += outcome.flips;
        let member = Member {
            config: outcome.best,
            energy: outcome.energy,
        };
        if reached(member.energy, params.target) {
            history.push(member.energy);
            return Ok(finish(member, flips, 0, history, Termination::Target));
        }
        population.push(member);
    }
    let mut best_idx = 0;
    for (i, m) in population.iter().enumerate() {
        if m.energy < population[best_idx].energy {
            best_idx = i;
        }
    }
    let mut best = Member {
        config: population[best_idx].config.clone(),
        energy: population[best_idx].energy,
    };
    history.push(best.energy);

    let p = params.population;
    for g in 0..params.generations {
        let mu = mutation_rate(g, params.generations, params.mu_start, params.mu_end)?;
        let mut rng = stream_rng(params.seed, 1 + g as u64);
        let mut children = Vec::with_capacity(p);
        let mut parent_min = Vec::with_capacity(p);
        for _ in 0..p {
            let a = rng.random_range(0..p);
            let mut b = rng.random_range(0..p - 1);
            if b >= a {
                b += 1;
            }
            let mut child = crossover(&population[a].config, &population[b].config, &mut rng);
            mutate(&mut child, mu, &mut rng);
            children.push(child);
            parent_min.push(population[a].energy.min(population[b].energy));
        }
        let refined: Vec<TabuOutcome> = children.par_iter().map(refine).collect::<Result<_>>()?;
        generations += 1;

        let mut improved = false;
        let mut offspring = Vec::with_capacity(p);
        for (outcome, pmin) in refined.into_iter().zip(parent_min) {
            flips += outcome.flips;
            if outcome.energy < pmin - ENERGY_TOLERANCE * pmin.abs().max(1.0) {
                improved = true;
            }
            let member = Member {
                config: outcome.best,
                energy: outcome.energy,
            };
            if reached(member.energy, params.target) {
                history.push(member.energy.min(best.energy));
                return Ok(finish(member, flips, generations, history, Termination::Target));
            }
            offspring.push(member);
        }

        population.extend(offspring);
        population.sort_by(|x, y| x.energy.total_cmp(&y.energy));
        population.truncate(p);
        if population[0].energy < best.energy {
            best = Member {
                config: population[0].config.clone(),
                energy: population[0].energy,
            };
        }
        history.push(best.energy);
        if params.stop_on_stagnation && !improved {
            return Ok(finish(best, flips, generations, history, Termination::Stagnation));
        }
    }
    Ok(finish(best, flips, generations, history, Termination::Generations))
}
