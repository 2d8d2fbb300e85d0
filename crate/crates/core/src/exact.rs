//! Exhaustive ground-state search by Gray-code enumeration.
//!
//! Consecutive Gray codes differ in one bit, so each of the `2^N` states costs
//! one single-flip delta. The code range is split into contiguous shards that
//! are reduced in order; ties keep the first minimizer in Gray-code order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, SpinConfiguration, ENERGY_TOLERANCE};

#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub config: SpinConfiguration,
    pub energy: f64,
    /// Number of configurations within tolerance of the minimum.
    pub degeneracy: u64,
}

struct Shard {
    energy: f64,
    code: u64,
    count: u64,
}

fn tolerance(e: f64) -> f64 {
    ENERGY_TOLERANCE * e.abs().max(1.0)
}

fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

fn enumerate_shard(inst: &HuboInstance, start: u64, end: u64) -> Shard {
    let n = inst.num_vars();
    let mut spins = SpinConfiguration::from_index(gray(start), n);
    let s = spins.as_mut_slice();
    let mut energy = inst.energy_unchecked(s);
    let mut best = Shard {
        energy,
        code: gray(start),
        count: 1,
    };
    for k in start + 1..end {
        let bit = k.trailing_zeros() as usize;
        energy += inst.delta_unchecked(s, bit);
        s[bit] = -s[bit];
        let tol = tolerance(best.energy);
        if energy < best.energy - tol {
            best = Shard {
                energy,
                code: gray(k),
                count: 1,
            };
        } else if energy <= best.energy + tol {
            best.count += 1;
        }
    }
    best
}

pub fn brute_force_ground_state(inst: &HuboInstance) -> Result<GroundState> {
    brute_force_with_cap(inst, crate::qubit_cap())
}

pub fn brute_force_with_cap(inst: &HuboInstance, cap: usize) -> Result<GroundState> {
    let n = inst.num_vars();
    if n > cap || n > 62 {
        return Err(Error::CapExceeded {
            what: "exhaustive search",
            n,
            cap: cap.min(62),
        });
    }
    let total = 1u64 << n;
    let shards = total.min(256);
    let len = total / shards;
    let results: Vec<Shard> = (0..shards)
        .into_par_iter()
        .map(|c| enumerate_shard(inst, c * len, (c + 1) * len))
        .collect();
    let mut best = Shard {
        energy: f64::INFINITY,
        code: 0,
        count: 0,
    };
    for shard in results {
        if best.count == 0 || shard.energy < best.energy - tolerance(best.energy) {
            best = shard;
        } else if shard.energy <= best.energy + tolerance(best.energy) {
            best.count += shard.count;
        }
    }
    let config = SpinConfiguration::from_index(best.code, n);
    let energy = inst.energy_unchecked(config.as_slice());
    Ok(GroundState {
        config,
        energy,
        degeneracy: best.count,
    })
}
