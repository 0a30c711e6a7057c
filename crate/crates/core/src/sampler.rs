//! Sub-network sampling strategies and training-batch planning.
//!
//! Three strategies grow a connected node set from a random seed (BFS, DFS
//! and a hybrid of the two); two draw nodes or edges with degree-biased
//! probabilities and capture global structure instead. Connected strategies
//! restart from a fresh random seed whenever the current component is used
//! up before `k` nodes have been collected.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Graph, SubNetwork};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Bfs,
    Dfs,
    /// Hybrid search: a biased coin picks a BFS or a DFS step each time.
    Hs,
    /// Degree-biased node sampling.
    Ns,
    /// Degree-biased edge sampling.
    Es,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Bfs,
        Strategy::Dfs,
        Strategy::Hs,
        Strategy::Ns,
        Strategy::Es,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bfs => "bfs",
            Strategy::Dfs => "dfs",
            Strategy::Hs => "hs",
            Strategy::Ns => "ns",
            Strategy::Es => "es",
        }
    }

    /// Stable integer tag used when deriving random streams.
    pub fn tag(self) -> u64 {
        self as u64
    }

    /// Whether every sample has exactly `k` nodes.
    pub fn fixed_size(self) -> bool {
        self != Strategy::Es
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown sampling strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    /// Sub-network size.
    pub k: usize,
    pub pool_size: usize,
    /// Probability of a breadth step in hybrid search.
    pub hs_bfs_prob: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        check_k(graph, self.k)?;
        if self.pool_size == 0 {
            return Err(Error::invalid("pool_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.hs_bfs_prob) {
            return Err(Error::invalid(format!(
                "hs_bfs_prob must lie in [0, 1], got {}",
                self.hs_bfs_prob
            )));
        }
        if self.strategy == Strategy::Es {
            check_edge_sampling(graph, self.k)?;
        }
        Ok(())
    }
}

/// Sub-networks drawn i.i.d. under one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePool {
    pub strategy: Strategy,
    pub k: usize,
    pub subnetworks: Vec<SubNetwork>,
}

impl SamplePool {
    pub fn len(&self) -> usize {
        self.subnetworks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subnetworks.is_empty()
    }

    /// Bytes held by the pooled sub-networks, headers included.
    pub fn storage_bytes(&self) -> usize {
        self.subnetworks.capacity() * core::mem::size_of::<SubNetwork>()
            + self.subnetworks.iter().map(SubNetwork::heap_bytes).sum::<usize>()
    }
}

/// Training batches for one generation plus the validation set, as indices
/// into a [`SamplePool`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batches: Vec<Vec<usize>>,
    pub validation: Vec<usize>,
}

fn check_k(graph: &Graph, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("sub-network size k must be at least 1"));
    }
    if k > graph.node_count() {
        return Err(Error::invalid(format!(
            "sub-network size k = {k} exceeds node count {}",
            graph.node_count()
        )));
    }
    Ok(())
}

fn check_edge_sampling(graph: &Graph, k: usize) -> Result<()> {
    if graph.edge_count() == 0 {
        return Err(Error::invalid("edge sampling needs at least one edge"));
    }
    if k < 2 {
        return Err(Error::invalid("edge sampling needs k >= 2"));
    }
    Ok(())
}

/// Uniform node not yet in `taken`.
fn fresh_seed<R: Rng + ?Sized>(n: usize, taken: &BTreeSet<usize>, rng: &mut R) -> usize {
    debug_assert!(taken.len() < n);
    if taken.len() * 2 <= n {
        loop {
            let v = rng.random_range(0..n);
            if !taken.contains(&v) {
                return v;
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|v| !taken.contains(v)).collect();
    free[rng.random_range(0..free.len())]
}

/// Index drawn with probability proportional to `weights`; `None` when the
/// total weight is zero.
fn weighted_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

/// Breadth-first sample: a random seed, then its hop-1 ring in random
/// order, then its hop-2 ring, and so on.
pub fn sample_bfs<R: Rng + ?Sized>(graph: &Graph, k: usize, rng: &mut R) -> Result<SubNetwork> {
    check_k(graph, k)?;
    let n = graph.node_count();
    let mut picked = Vec::with_capacity(k);
    let mut taken = BTreeSet::new();
    while picked.len() < k {
        let seed = fresh_seed(n, &taken, rng);
        taken.insert(seed);
        picked.push(seed);
        let mut ring = vec![seed];
        while picked.len() < k && !ring.is_empty() {
            let mut next = Vec::new();
            for &v in &ring {
                for &u in graph.adjacent(v)? {
                    if taken.insert(u) {
                        next.push(u);
                    }
                }
            }
            next.shuffle(rng);
            let room = k - picked.len();
            picked.extend(next.iter().take(room));
            ring = next;
        }
    }
    graph.induced_subgraph(&picked)
}

/// Depth-first sample with an explicit stack; neighbours are pushed in
/// random order so the walk takes a uniform unvisited branch.
pub fn sample_dfs<R: Rng + ?Sized>(graph: &Graph, k: usize, rng: &mut R) -> Result<SubNetwork> {
    check_k(graph, k)?;
    let n = graph.node_count();
    let mut picked = Vec::with_capacity(k);
    let mut taken = BTreeSet::new();
    while picked.len() < k {
        let mut stack = vec![fresh_seed(n, &taken, rng)];
        while let Some(v) = stack.pop() {
            if !taken.insert(v) {
                continue;
            }
            picked.push(v);
            if picked.len() == k {
                break;
            }
            let mut branch: Vec<usize> = graph
                .adjacent(v)?
                .iter()
                .copied()
                .filter(|u| !taken.contains(u))
                .collect();
            branch.shuffle(rng);
            stack.extend(branch);
        }
    }
    graph.induced_subgraph(&picked)
}

/// Hop rings around an anchor, discovered lazily.
struct Rings {
    rings: Vec<Vec<usize>>,
    discovered: BTreeSet<usize>,
}

impl Rings {
    fn new(anchor: usize) -> Self {
        Rings {
            rings: vec![vec![anchor]],
            discovered: BTreeSet::from([anchor]),
        }
    }

    /// A uniform untaken node from the innermost ring that still has one.
    fn breadth_step<R: Rng + ?Sized>(
        &mut self,
        graph: &Graph,
        taken: &BTreeSet<usize>,
        rng: &mut R,
    ) -> Option<usize> {
        let mut depth = 0;
        loop {
            if depth == self.rings.len() {
                let mut next = Vec::new();
                for &v in &self.rings[depth - 1] {
                    for &u in graph.adjacency_slice(v) {
                        if self.discovered.insert(u) {
                            next.push(u);
                        }
                    }
                }
                if next.is_empty() {
                    return None;
                }
                self.rings.push(next);
            }
            let open: Vec<usize> = self.rings[depth]
                .iter()
                .copied()
                .filter(|u| !taken.contains(u))
                .collect();
            if !open.is_empty() {
                return Some(open[rng.random_range(0..open.len())]);
            }
            depth += 1;
        }
    }
}

impl Graph {
    fn adjacency_slice(&self, v: usize) -> &[usize] {
        self.adjacent(v).unwrap_or(&[])
    }
}

/// Hybrid search. Before each step a coin with success probability
/// `hs_bfs_prob` decides between a breadth step (uniform node from the
/// innermost unexhausted hop ring around the seed) and a depth step
/// (uniform untaken neighbour of the most recent node, backtracking through
/// earlier nodes when it has none). With probability 1 this is BFS, with 0
/// it is DFS.
pub fn sample_hs<R: Rng + ?Sized>(
    graph: &Graph,
    k: usize,
    hs_bfs_prob: f64,
    rng: &mut R,
) -> Result<SubNetwork> {
    check_k(graph, k)?;
    if !(0.0..=1.0).contains(&hs_bfs_prob) {
        return Err(Error::invalid(format!(
            "hs_bfs_prob must lie in [0, 1], got {hs_bfs_prob}"
        )));
    }
    let n = graph.node_count();
    let mut picked = Vec::with_capacity(k);
    let mut taken = BTreeSet::new();
    while picked.len() < k {
        let seed = fresh_seed(n, &taken, rng);
        taken.insert(seed);
        picked.push(seed);
        let mut rings = Rings::new(seed);
        let mut trail = vec![seed];
        while picked.len() < k {
            let breadth = rng.random_bool(hs_bfs_prob);
            let next = if breadth {
                rings.breadth_step(graph, &taken, rng)
            } else {
                depth_step(graph, &mut trail, &taken, rng)
            };
            let Some(v) = next else { break };
            taken.insert(v);
            picked.push(v);
            trail.push(v);
        }
    }
    graph.induced_subgraph(&picked)
}

fn depth_step<R: Rng + ?Sized>(
    graph: &Graph,
    trail: &mut Vec<usize>,
    taken: &BTreeSet<usize>,
    rng: &mut R,
) -> Option<usize> {
    while let Some(&top) = trail.last() {
        let open: Vec<usize> = graph
            .adjacency_slice(top)
            .iter()
            .copied()
            .filter(|u| !taken.contains(u))
            .collect();
        if !open.is_empty() {
            return Some(open[rng.random_range(0..open.len())]);
        }
        trail.pop();
    }
    None
}

/// `k` distinct nodes, each draw proportional to degree among the nodes not
/// yet drawn. Falls back to uniform draws once only isolated nodes remain.
pub fn sample_biased_node<R: Rng + ?Sized>(
    graph: &Graph,
    k: usize,
    rng: &mut R,
) -> Result<SubNetwork> {
    check_k(graph, k)?;
    let n = graph.node_count();
    let mut weights: Vec<f64> = (0..n).map(|v| graph.adjacency_slice(v).len() as f64).collect();
    let mut picked = Vec::with_capacity(k);
    let mut taken = BTreeSet::new();
    while picked.len() < k {
        let v = match weighted_index(&weights, rng) {
            Some(v) => v,
            None => fresh_seed(n, &taken, rng),
        };
        weights[v] = 0.0;
        taken.insert(v);
        picked.push(v);
    }
    graph.induced_subgraph(&picked)
}

/// Edges drawn without replacement, each proportional to `d(u) + d(v)`.
/// Stops before the node count would exceed `k`, or when edges run out.
/// The sub-network keeps only the sampled edges.
pub fn sample_biased_edge<R: Rng + ?Sized>(
    graph: &Graph,
    k: usize,
    rng: &mut R,
) -> Result<SubNetwork> {
    check_k(graph, k)?;
    check_edge_sampling(graph, k)?;
    let edges = graph.edges();
    let mut weights: Vec<f64> = edges
        .iter()
        .map(|&(u, v)| (graph.adjacency_slice(u).len() + graph.adjacency_slice(v).len()) as f64)
        .collect();
    let mut ids: Vec<usize> = Vec::with_capacity(k);
    let mut local_edges = Vec::new();
    let local = |ids: &[usize], v: usize| ids.iter().position(|&x| x == v);
    while let Some(e) = weighted_index(&weights, rng) {
        weights[e] = 0.0;
        let (u, v) = edges[e];
        let new_nodes = [u, v].iter().filter(|&&x| local(&ids, x).is_none()).count();
        if ids.len() + new_nodes > k {
            break;
        }
        for x in [u, v] {
            if local(&ids, x).is_none() {
                ids.push(x);
            }
        }
        let (a, b) = (local(&ids, u).unwrap(), local(&ids, v).unwrap());
        local_edges.push((a.min(b), a.max(b)));
    }
    SubNetwork::new(ids, local_edges)
}

/// Draws one sub-network under `strategy`.
pub fn sample<R: Rng + ?Sized>(
    graph: &Graph,
    strategy: Strategy,
    k: usize,
    hs_bfs_prob: f64,
    rng: &mut R,
) -> Result<SubNetwork> {
    match strategy {
        Strategy::Bfs => sample_bfs(graph, k, rng),
        Strategy::Dfs => sample_dfs(graph, k, rng),
        Strategy::Hs => sample_hs(graph, k, hs_bfs_prob, rng),
        Strategy::Ns => sample_biased_node(graph, k, rng),
        Strategy::Es => sample_biased_edge(graph, k, rng),
    }
}

/// `pool_size` independent samples. Sample `i` uses its own stream derived
/// from `(seed, i)`, so the pool is reproducible bit for bit.
pub fn build_pool(graph: &Graph, cfg: &SamplerConfig) -> Result<SamplePool> {
    cfg.validate(graph)?;
    let subnetworks = (0..cfg.pool_size)
        .map(|i| {
            let mut r = rng::substream(cfg.seed, &[cfg.strategy.tag(), i as u64]);
            sample(graph, cfg.strategy, cfg.k, cfg.hs_bfs_prob, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplePool {
        strategy: cfg.strategy,
        k: cfg.k,
        subnetworks,
    })
}

/// `count` batches of `batch_size` pool indices, uniform with replacement.
pub fn draw_batches<R: Rng + ?Sized>(
    pool_len: usize,
    count: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 || batch_size > pool_len {
        return Err(Error::invalid(format!(
            "batch size {batch_size} must lie in [1, pool size {pool_len}]"
        )));
    }
    Ok((0..count)
        .map(|_| (0..batch_size).map(|_| rng.random_range(0..pool_len)).collect())
        .collect())
}

/// `m` training batches plus a validation set of `v_size` distinct indices.
pub fn plan_batches<R: Rng + ?Sized>(
    pool: &SamplePool,
    m: usize,
    b: usize,
    v_size: usize,
    rng: &mut R,
) -> Result<BatchPlan> {
    if v_size == 0 || v_size > pool.len() {
        return Err(Error::invalid(format!(
            "validation size {v_size} must lie in [1, pool size {}]",
            pool.len()
        )));
    }
    let batches = draw_batches(pool.len(), m, b, rng)?;
    let validation = rand::seq::index::sample(rng, pool.len(), v_size).into_vec();
    Ok(BatchPlan {
        batches,
        validation,
    })
}
