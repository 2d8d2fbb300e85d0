//! On-disk formats: instance JSON, bitstrings and connectivity maps.
//!
//! Instance files look like
//!
//! ```json
//! { "n": 3, "terms": [ { "idx": [0], "w": 1.5 }, { "idx": [0, 1, 2], "w": -0.7 } ],
//!   "metadata": { "seed": 7, "ground_state_energy": -2.2 } }
//! ```
//!
//! Serialization always writes terms sorted lexicographically by `idx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, SpinConfiguration};
use crate::instance_gen::{ConnectivityMap, CouplingDistribution};

/// Largest variable count accepted from a file.
pub const MAX_FILE_VARS: usize = 1 << 20;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<CouplingDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho3: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_state_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_state_degeneracy: Option<u64>,
}

impl InstanceMetadata {
    fn is_empty(&self) -> bool {
        *self == InstanceMetadata::default()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    idx: Vec<usize>,
    w: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    terms: Vec<TermRecord>,
    #[serde(default, skip_serializing_if = "InstanceMetadata::is_empty")]
    metadata: InstanceMetadata,
}

pub fn parse_instance(text: &str) -> Result<HuboInstance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    if file.n > MAX_FILE_VARS {
        return Err(Error::InvalidInstance(format!(
            "n = {} exceeds the file limit {MAX_FILE_VARS}",
            file.n
        )));
    }
    if let Some(e) = file.metadata.ground_state_energy {
        if !e.is_finite() {
            return Err(Error::InvalidInstance("ground_state_energy must be finite".into()));
        }
    }
    let inst = HuboInstance::new(file.n, file.terms.into_iter().map(|t| (t.idx, t.w)))?;
    Ok(inst.with_metadata(file.metadata))
}

pub fn instance_to_json(inst: &HuboInstance) -> String {
    let file = InstanceFile {
        n: inst.num_vars(),
        terms: inst
            .terms()
            .iter()
            .map(|t| TermRecord {
                idx: t.indices().to_vec(),
                w: t.weight(),
            })
            .collect(),
        metadata: inst.metadata().clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("instance serializes");
    text.push('\n');
    text
}

/// Parses a bitstring line of `0`/`1` characters, qubit 0 first. Surrounding
/// whitespace is ignored.
pub fn parse_bitstring(text: &str) -> Result<SpinConfiguration> {
    let line = text.trim();
    if line.is_empty() {
        return Err(Error::InvalidParameter("empty bitstring".into()));
    }
    let bits = line
        .chars()
        .enumerate()
        .map(|(position, c)| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            symbol => Err(Error::InvalidSymbol { symbol, position }),
        })
        .collect::<Result<Vec<u8>>>()?;
    SpinConfiguration::from_bits(&bits)
}

/// Parses a hexadecimal bitstring of `n` qubits, where qubit `q` is bit `q`
/// of the number (least significant first). An optional `0x` prefix is allowed.
pub fn parse_hex_bitstring(text: &str, n: usize) -> Result<SpinConfiguration> {
    let trimmed = text.trim();
    let digits = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
        .unwrap_or(trimmed);
    if digits.is_empty() {
        return Err(Error::InvalidParameter("empty hex bitstring".into()));
    }
    let offset = trimmed.len() - digits.len();
    let mut bits = vec![0u8; n];
    for (k, (position, c)) in digits.char_indices().rev().enumerate() {
        let nibble = c.to_digit(16).ok_or(Error::InvalidSymbol {
            symbol: c,
            position: position + offset,
        })?;
        for b in 0..4 {
            if nibble >> b & 1 == 1 {
                let q = 4 * k + b;
                if q >= n {
                    return Err(Error::InvalidParameter(format!(
                        "hex bitstring sets qubit {q} but only {n} qubits exist"
                    )));
                }
                bits[q] = 1;
            }
        }
    }
    SpinConfiguration::from_bits(&bits)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
}

/// Parses a connectivity map `{ "num_qubits": n, "edges": [[u, v], ...] }`.
pub fn parse_connectivity(text: &str) -> Result<ConnectivityMap> {
    let file: MapFile = serde_json::from_str(text)?;
    if file.num_qubits > MAX_FILE_VARS {
        return Err(Error::InvalidMap(format!(
            "num_qubits = {} exceeds the file limit {MAX_FILE_VARS}",
            file.num_qubits
        )));
    }
    ConnectivityMap::new(file.num_qubits, file.edges.into_iter().map(|[u, v]| (u, v)))
}

pub fn connectivity_to_json(map: &ConnectivityMap) -> String {
    let file = MapFile {
        num_qubits: map.num_qubits(),
        edges: map.edges().into_iter().map(|(u, v)| [u, v]).collect(),
    };
    serde_json::to_string(&file).expect("map serializes")
}
