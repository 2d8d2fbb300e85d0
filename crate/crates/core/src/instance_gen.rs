//! Hardware-aware instance generation.
//!
//! Interactions are laid out on a qubit connectivity graph: every round colors
//! the current graph into qubit-disjoint layers of edges and length-2 paths,
//! keeps the leading `rho2`/`rho3` layers, and then relabels the qubits by
//! treating the first edge layer as a layer of SWAP gates. Couplings are drawn
//! from a clipped Cauchy distribution.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Cauchy, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{InstanceMetadata, MAX_FILE_VARS};
use crate::hubo::HuboInstance;
use crate::rng::stream_rng;

/// Chain count and chain length of the 156-qubit heavy-hex processor layout.
pub const HERON_ROWS: usize = 8;
pub const HERON_COLS: usize = 16;

/// Undirected qubit graph over physical sites together with the logical label
/// currently sitting on each site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityMap {
    num_qubits: usize,
    sites: Vec<(usize, usize)>,
    labeling: Vec<usize>,
}

impl ConnectivityMap {
    pub fn new<I>(num_qubits: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if num_qubits == 0 {
            return Err(Error::InvalidMap("map needs at least one qubit".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidMap(format!("self-loop on qubit {u}")));
            }
            if u >= num_qubits || v >= num_qubits {
                return Err(Error::InvalidMap(format!(
                    "edge ({u}, {v}) references a qubit >= {num_qubits}"
                )));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(ConnectivityMap {
            num_qubits,
            sites: set.into_iter().collect(),
            labeling: (0..num_qubits).collect(),
        })
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidMap(format!("a ring needs at least 3 qubits, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Logical label on each physical site.
    pub fn labeling(&self) -> &[usize] {
        &self.labeling
    }

    /// Edges between logical labels, normalized `(min, max)` and sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .sites
            .iter()
            .map(|&(a, b)| {
                let (u, v) = (self.labeling[a], self.labeling[b]);
                (u.min(v), u.max(v))
            })
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges().binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Sorted logical neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_qubits];
        for (u, v) in self.edges() {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors().iter().map(Vec::len).collect()
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.neighbors();
        let mut seen = vec![false; self.num_qubits];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Heavy-hex patch of `rows` horizontal chains with `cols` qubits each.
///
/// Chains are joined by degree-2 bridge qubits: between chains `r` and `r+1`
/// a bridge sits at every column `c ≡ 3 (mod 4)` for even `r` and
/// `c ≡ 1 (mod 4)` for odd `r`. Qubits are numbered chain by chain with each
/// gap's bridges following the chain above it, so `heavy_hex_map(8, 16)` gives
/// the 156-qubit processor numbering.
pub fn heavy_hex_map(rows: usize, cols: usize) -> Result<ConnectivityMap> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidMap("heavy-hex patch needs rows, cols >= 1".into()));
    }
    let bridge_cols = |gap: usize| -> Vec<usize> {
        let offset = if gap % 2 == 0 { 3 } else { 1 };
        (offset..cols).step_by(4).collect()
    };
    let total = rows * cols + (0..rows - 1).map(|g| bridge_cols(g).len()).sum::<usize>();
    if total > MAX_FILE_VARS {
        return Err(Error::InvalidMap(format!("heavy-hex patch of {total} qubits is too large")));
    }
    let mut edges = Vec::new();
    let mut chain_start = Vec::with_capacity(rows);
    let mut next = 0;
    let mut bridges = Vec::new();
    for r in 0..rows {
        chain_start.push(next);
        for c in 1..cols {
            edges.push((next + c - 1, next + c));
        }
        next += cols;
        if r + 1 < rows {
            let cs = bridge_cols(r);
            bridges.push((next, cs.clone()));
            next += cs.len();
        }
    }
    for (gap, (first, cs)) in bridges.into_iter().enumerate() {
        for (k, c) in cs.into_iter().enumerate() {
            edges.push((chain_start[gap] + c, first + k));
            edges.push((first + k, chain_start[gap + 1] + c));
        }
    }
    ConnectivityMap::new(next, edges)
}

/// A set of qubit-disjoint interactions of one order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionLayer {
    order: usize,
    groups: Vec<Vec<usize>>,
}

impl InteractionLayer {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.groups.iter().filter(|g| g.len() == 2).map(|g| (g[0], g[1])).collect()
    }

    pub fn is_qubit_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.groups.iter().flatten().all(|&q| seen.insert(q))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerFamilies {
    pub two_body: Vec<InteractionLayer>,
    pub three_body: Vec<InteractionLayer>,
}

/// All length-2 paths `a - v - b` of the map, as sorted index triples.
pub fn path_triples(map: &ConnectivityMap) -> Vec<Vec<usize>> {
    let adj = map.neighbors();
    let mut triples = BTreeSet::new();
    for (v, nbrs) in adj.iter().enumerate() {
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                let mut t = vec![a, v, b];
                t.sort_unstable();
                triples.insert(t);
            }
        }
    }
    triples.into_iter().collect()
}

fn first_fit(order: usize, items: Vec<Vec<usize>>, num_qubits: usize) -> Vec<InteractionLayer> {
    let mut layers: Vec<InteractionLayer> = Vec::new();
    let mut used: Vec<Vec<bool>> = Vec::new();
    for item in items {
        let slot = used
            .iter()
            .position(|u| item.iter().all(|&q| !u[q]))
            .unwrap_or_else(|| {
                layers.push(InteractionLayer {
                    order,
                    groups: Vec::new(),
                });
                used.push(vec![false; num_qubits]);
                layers.len() - 1
            });
        for &q in &item {
            used[slot][q] = true;
        }
        layers[slot].groups.push(item);
    }
    layers
}

/// Greedy first-fit coloring of edges and length-2 paths into qubit-disjoint
/// layers. Items are visited in sorted order, or in a seeded shuffled order
/// when `shuffle_seed` is given.
pub fn graph_coloring(map: &ConnectivityMap, shuffle_seed: Option<u64>) -> LayerFamilies {
    let mut pairs: Vec<Vec<usize>> = map.edges().into_iter().map(|(u, v)| vec![u, v]).collect();
    let mut triples = path_triples(map);
    if let Some(seed) = shuffle_seed {
        pairs.shuffle(&mut stream_rng(seed, 0x2b));
        triples.shuffle(&mut stream_rng(seed, 0x3b));
    }
    LayerFamilies {
        two_body: first_fit(2, pairs, map.num_qubits()),
        three_body: first_fit(3, triples, map.num_qubits()),
    }
}

/// Exchanges the labels at the two ends of every pair.
pub fn swap_register(map: &ConnectivityMap, pairs: &[(usize, usize)]) -> Result<ConnectivityMap> {
    let mut touched = BTreeSet::new();
    for &(u, v) in pairs {
        if !touched.insert(u) || !touched.insert(v) {
            return Err(Error::InvalidSwap(format!("pair ({u}, {v}) overlaps another pair")));
        }
        if !map.has_edge(u, v) {
            return Err(Error::InvalidSwap(format!("({u}, {v}) is not an edge")));
        }
    }
    let mut site_of = vec![0; map.num_qubits];
    for (site, &label) in map.labeling.iter().enumerate() {
        site_of[label] = site;
    }
    let mut next = map.clone();
    for &(u, v) in pairs {
        next.labeling.swap(site_of[u], site_of[v]);
    }
    Ok(next)
}

/// Coupling distribution: Cauchy with rejection of `|w| > clip`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingDistribution {
    pub location: f64,
    pub scale: f64,
    pub clip: f64,
}

impl Default for CouplingDistribution {
    fn default() -> Self {
        CouplingDistribution {
            location: 0.0,
            scale: 1.0,
            clip: 6.0,
        }
    }
}

impl CouplingDistribution {
    fn validate(&self) -> Result<()> {
        let ok = self.scale > 0.0
            && self.scale.is_finite()
            && self.clip > 0.0
            && self.clip.is_finite()
            && self.location.is_finite()
            && self.location.abs() <= self.clip;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "coupling distribution needs scale > 0, clip > 0 and |location| <= clip, got {self:?}"
            )))
        }
    }
}

pub fn sample_couplings_with<R: Rng + ?Sized>(
    dist: &CouplingDistribution,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    dist.validate()?;
    let cauchy = Cauchy::new(dist.location, dist.scale)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = cauchy.sample(rng);
        if w.is_finite() && w != 0.0 && w.abs() <= dist.clip {
            out.push(w);
        }
    }
    Ok(out)
}

pub fn sample_couplings(dist: &CouplingDistribution, count: usize, seed: u64) -> Result<Vec<f64>> {
    sample_couplings_with(dist, count, &mut stream_rng(seed, 0xc0))
}

/// One round of the layout recursion: the map that was colored and the
/// interactions kept from it.
#[derive(Clone, Debug)]
pub struct LayoutRound {
    pub map: ConnectivityMap,
    pub two_body: Vec<InteractionLayer>,
    pub three_body: Vec<InteractionLayer>,
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub rounds: Vec<LayoutRound>,
    pub pairs: BTreeSet<Vec<usize>>,
    pub triples: BTreeSet<Vec<usize>>,
}

/// Runs the swap-round recursion and returns the selected interaction sets.
pub fn generate_layout(
    map: &ConnectivityMap,
    n_swap: usize,
    rho2: usize,
    rho3: usize,
) -> Result<Layout> {
    if n_swap == 0 {
        return Err(Error::InvalidParameter("swap rounds must be >= 1".into()));
    }
    let mut current = map.clone();
    let mut rounds = Vec::with_capacity(n_swap);
    let mut pairs = BTreeSet::new();
    let mut triples = BTreeSet::new();
    for r in 1..=n_swap {
        let families = graph_coloring(&current, None);
        for (order, requested, available) in [
            (2, rho2, families.two_body.len()),
            (3, rho3, families.three_body.len()),
        ] {
            if requested > 0 && available == 0 {
                return Err(Error::EmptyLayerFamily(order));
            }
            if requested > available {
                return Err(Error::InfeasibleLayers {
                    order,
                    requested,
                    available,
                });
            }
        }
        let two_body: Vec<_> = families.two_body[..rho2].to_vec();
        let three_body: Vec<_> = families.three_body[..rho3].to_vec();
        pairs.extend(two_body.iter().flat_map(|l| l.groups.iter().cloned()));
        triples.extend(three_body.iter().flat_map(|l| l.groups.iter().cloned()));
        let next = if r < n_swap {
            let leading = families.two_body.first().ok_or(Error::EmptyLayerFamily(2))?;
            Some(swap_register(&current, &leading.pairs())?)
        } else {
            None
        };
        rounds.push(LayoutRound {
            map: current.clone(),
            two_body,
            three_body,
        });
        if let Some(next) = next {
            current = next;
        }
    }
    Ok(Layout {
        rounds,
        pairs,
        triples,
    })
}

#[derive(Clone, Debug)]
pub struct GenerationParams {
    pub n_swap: usize,
    pub rho2: usize,
    pub rho3: usize,
    pub dist: CouplingDistribution,
    pub seed: u64,
}

/// Generates an instance with one-body fields on every qubit plus the
/// interactions selected by [`generate_layout`]. Weights are drawn in
/// canonical term order, so the result is a pure function of the inputs.
pub fn generate_instance(
    map: &ConnectivityMap,
    params: &GenerationParams,
    topology: &str,
) -> Result<HuboInstance> {
    let layout = generate_layout(map, params.n_swap, params.rho2, params.rho3)?;
    let mut index_sets: Vec<Vec<usize>> = (0..map.num_qubits()).map(|q| vec![q]).collect();
    index_sets.extend(layout.pairs);
    index_sets.extend(layout.triples);
    index_sets.sort();
    let weights = sample_couplings(&params.dist, index_sets.len(), params.seed)?;
    let inst = HuboInstance::new(map.num_qubits(), index_sets.into_iter().zip(weights))?;
    Ok(inst.with_metadata(InstanceMetadata {
        seed: Some(params.seed),
        topology: Some(topology.to_string()),
        distribution: Some(params.dist),
        swap_rounds: Some(params.n_swap),
        rho2: Some(params.rho2),
        rho3: Some(params.rho3),
        ..InstanceMetadata::default()
    }))
}

/// Ring instance used throughout the test suites: `n` qubits, two swap
/// rounds, two edge layers and one path layer per round.
pub fn ring_instance(n: usize, seed: u64) -> Result<HuboInstance> {
    let params = GenerationParams {
        n_swap: 2,
        rho2: 2,
        rho3: 1,
        dist: CouplingDistribution::default(),
        seed,
    };
    generate_instance(&ConnectivityMap::ring(n)?, &params, &format!("ring:{n}"))
}

/// Histogram of node degrees, used by structural audits.
pub fn degree_histogram(map: &ConnectivityMap) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for d in map.degrees() {
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}
