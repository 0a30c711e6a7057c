//! Synthetic planted-community graphs.

use alloc::vec::Vec;

use rand::Rng;

use crate::graph::Graph;
use crate::{Error, Result};

/// Stochastic block model. Blocks occupy contiguous id ranges in the order
/// given; each pair inside a block is linked with probability `p_in`, each
/// pair across blocks with probability `p_out`.
pub fn stochastic_block_model<R: Rng + ?Sized>(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> Result<Graph> {
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("block probabilities must lie in [0, 1]"));
        }
    }
    let block_of: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| core::iter::repeat_n(b, size))
        .collect();
    let n = block_of.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block_of[u] == block_of[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Block label of every node for [`stochastic_block_model`] with these sizes.
pub fn block_labels(block_sizes: &[usize]) -> Vec<usize> {
    block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| core::iter::repeat_n(b, size))
        .collect()
}
