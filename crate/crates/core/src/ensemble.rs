//! Local and global result ensembles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::evolution::UnitModel;
use crate::graph::Graph;
use crate::sampler::SamplePool;
use crate::{Error, Result};

/// One fixed-length vector per node, plus a presence mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    values: Vec<f64>,
    present: Vec<bool>,
}

impl EmbeddingTable {
    /// A table over `node_count` nodes with every node absent.
    pub fn empty(node_count: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            values: vec![0.0; node_count * dim],
            present: vec![false; node_count],
        }
    }

    /// A table with every node present.
    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut table = EmbeddingTable::empty(rows.len(), dim);
        for (v, row) in rows.iter().enumerate() {
            table.set(v, row)?;
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.present.len()
    }

    pub fn is_present(&self, v: usize) -> bool {
        self.present.get(v).copied().unwrap_or(false)
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// The vector of `v`, or `None` when `v` is absent.
    pub fn get(&self, v: usize) -> Option<&[f64]> {
        self.is_present(v)
            .then(|| &self.values[v * self.dim..(v + 1) * self.dim])
    }

    /// Stored row of `v`; zeros for absent nodes.
    pub fn row(&self, v: usize) -> &[f64] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }

    pub fn set(&mut self, v: usize, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape("embedding vector", self.dim, vector.len()));
        }
        if v >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node: v,
                node_count: self.node_count(),
            });
        }
        self.values[v * self.dim..(v + 1) * self.dim].copy_from_slice(vector);
        self.present[v] = true;
        Ok(())
    }
}

/// Fuses the final generation on one pool. For each model, a node's codes
/// across every sub-network containing it are averaged; the per-model means
/// are concatenated in model order, giving `m * d` entries. Nodes in no
/// sub-network stay absent.
pub fn local_ensemble<U: UnitModel>(
    unit: &U,
    models: &[U::Model],
    pool: &SamplePool,
    node_count: usize,
) -> Result<EmbeddingTable> {
    if pool.is_empty() {
        return Err(Error::invalid("cannot ensemble an empty pool"));
    }
    if models.is_empty() {
        return Err(Error::invalid("cannot ensemble an empty generation"));
    }
    let d = unit.embedding_dim();
    let width = d * models.len();
    let mut sums = vec![0.0; node_count * width];
    let mut counts = vec![0usize; node_count];
    for sub in &pool.subnetworks {
        for &q in sub.original_ids() {
            if q >= node_count {
                return Err(Error::NodeOutOfRange {
                    node: q,
                    node_count,
                });
            }
            counts[q] += 1;
        }
        for (j, model) in models.iter().enumerate() {
            let codes = unit.embed(model, sub)?;
            for (&q, z) in sub.original_ids().iter().zip(&codes) {
                if z.len() != d {
                    return Err(Error::shape("unit model code", d, z.len()));
                }
                let slot = &mut sums[q * width + j * d..q * width + (j + 1) * d];
                for (s, &x) in slot.iter_mut().zip(z) {
                    *s += x;
                }
            }
        }
    }
    let mut table = EmbeddingTable::empty(node_count, width);
    for q in 0..node_count {
        if counts[q] > 0 {
            let c = counts[q] as f64;
            let row: Vec<f64> = sums[q * width..(q + 1) * width].iter().map(|s| s / c).collect();
            table.set(q, &row)?;
        }
    }
    Ok(table)
}

/// Fills absent nodes in one pass over ascending node ids. A node with at
/// least one neighbour that was present before the pass gets the mean of
/// those neighbours; a node with none gets i.i.d. uniform `[0, 1)` entries.
pub fn propagate_missing<R: Rng + ?Sized>(
    table: &EmbeddingTable,
    graph: &Graph,
    rng: &mut R,
) -> Result<EmbeddingTable> {
    if table.node_count() != graph.node_count() {
        return Err(Error::shape("embedding table nodes", graph.node_count(), table.node_count()));
    }
    let dim = table.dim();
    let mut out = table.clone();
    let mut mean = vec![0.0; dim];
    for p in 0..graph.node_count() {
        if table.is_present(p) {
            continue;
        }
        mean.fill(0.0);
        let mut count = 0usize;
        for &o in graph.adjacent(p)? {
            if let Some(z) = table.get(o) {
                for (m, &x) in mean.iter_mut().zip(z) {
                    *m += x;
                }
                count += 1;
            }
        }
        if count > 0 {
            for m in &mut mean {
                *m /= count as f64;
            }
        } else {
            for m in &mut mean {
                *m = rng.random::<f64>();
            }
        }
        out.set(p, &mean)?;
    }
    Ok(out)
}

/// Equal-weight average over per-strategy tables. An absent entry counts as
/// a zero vector, so a node absent everywhere ends up all zeros.
pub fn global_ensemble(tables: &[EmbeddingTable]) -> Result<EmbeddingTable> {
    let first = tables
        .first()
        .ok_or_else(|| Error::invalid("global ensemble needs at least one table"))?;
    let (n, dim) = (first.node_count(), first.dim());
    for t in tables {
        if t.dim() != dim {
            return Err(Error::shape("embedding dimension", dim, t.dim()));
        }
        if t.node_count() != n {
            return Err(Error::invalid(format!(
                "tables disagree on node count: {n} vs {}",
                t.node_count()
            )));
        }
    }
    let weight = 1.0 / tables.len() as f64;
    let mut out = EmbeddingTable::empty(n, dim);
    let mut acc = vec![0.0; dim];
    for q in 0..n {
        acc.fill(0.0);
        for t in tables {
            if let Some(z) = t.get(q) {
                for (a, &x) in acc.iter_mut().zip(z) {
                    *a += weight * x;
                }
            }
        }
        out.set(q, &acc)?;
    }
    Ok(out)
}
