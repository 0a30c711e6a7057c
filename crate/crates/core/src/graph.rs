//! Undirected simple graphs and induced sub-networks.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// An undirected simple graph over dense node ids `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; adjacency lists
/// are sorted and symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph with `node_count` nodes. Duplicate and reversed
    /// duplicate edges collapse into one; self-loops are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange { node, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { line: 0, node: u });
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph { adjacency, edges })
    }

    /// Parses a whitespace-separated edge list. Blank lines and lines whose
    /// first non-blank character is `#` are skipped. The node count is one
    /// more than the largest id seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut max_id: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two node ids, got {line:?}"),
                });
            };
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("{s:?} is not a nonnegative integer node id"),
                })
            };
            let (u, v) = (parse(a)?, parse(b)?);
            if u == v {
                return Err(Error::SelfLoop {
                    line: line_no,
                    node: u,
                });
            }
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
            pairs.push((u, v));
        }
        Graph::from_edges(max_id.map_or(0, |m| m + 1), pairs)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v,
                node_count: self.node_count(),
            })
        }
    }

    /// Sorted neighbour list of `v`.
    pub fn adjacent(&self, v: usize) -> Result<&[usize]> {
        self.check_node(v)?;
        Ok(&self.adjacency[v])
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check_node(v)?;
        Ok(self.adjacency[v].len())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// `hops = 1`: the direct neighbours of `v`. `hops = 2`: nodes reachable
    /// through one intermediate that are neither `v` nor a direct neighbour.
    /// Returned sorted.
    pub fn neighbors(&self, v: usize, hops: usize) -> Result<Vec<usize>> {
        self.check_node(v)?;
        match hops {
            1 => Ok(self.adjacency[v].clone()),
            2 => {
                let mut out = BTreeSet::new();
                for &w in &self.adjacency[v] {
                    for &u in &self.adjacency[w] {
                        if u != v && !self.has_edge(u, v) {
                            out.insert(u);
                        }
                    }
                }
                Ok(out.into_iter().collect())
            }
            other => Err(Error::invalid(format!("hops must be 1 or 2, got {other}"))),
        }
    }

    /// The sub-network on `ids` with every parent edge between them,
    /// reindexed so that `ids[i]` becomes local node `i`.
    pub fn induced_subgraph(&self, ids: &[usize]) -> Result<SubNetwork> {
        let mut seen = BTreeSet::new();
        for &id in ids {
            self.check_node(id)?;
            if !seen.insert(id) {
                return Err(Error::invalid(format!("duplicate node id {id} in sub-network")));
            }
        }
        let mut local_edges = Vec::new();
        for (i, &u) in ids.iter().enumerate() {
            for (j, &v) in ids.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    local_edges.push((i, j));
                }
            }
        }
        Ok(SubNetwork {
            original_ids: ids.to_vec(),
            local_edges,
        })
    }
}

/// A small sampled graph with a mapping back to parent node ids.
///
/// Local node `i` is parent node `original_ids[i]`. Local edges are stored as
/// `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubNetwork {
    original_ids: Vec<usize>,
    local_edges: Vec<(usize, usize)>,
}

impl SubNetwork {
    /// Builds a sub-network from explicit parts, validating local indices.
    pub fn new(original_ids: Vec<usize>, local_edges: Vec<(usize, usize)>) -> Result<Self> {
        let k = original_ids.len();
        let distinct: BTreeSet<_> = original_ids.iter().collect();
        if distinct.len() != k {
            return Err(Error::invalid("sub-network ids must be distinct"));
        }
        let mut edges = BTreeSet::new();
        for (a, b) in local_edges {
            if a >= k || b >= k {
                return Err(Error::NodeOutOfRange {
                    node: a.max(b),
                    node_count: k,
                });
            }
            if a == b {
                return Err(Error::SelfLoop { line: 0, node: a });
            }
            edges.insert((a.min(b), a.max(b)));
        }
        Ok(SubNetwork {
            original_ids,
            local_edges: edges.into_iter().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.original_ids.len()
    }

    pub fn original_ids(&self) -> &[usize] {
        &self.original_ids
    }

    pub fn local_edges(&self) -> &[(usize, usize)] {
        &self.local_edges
    }

    /// Heap bytes held by this sub-network's id and edge lists.
    pub fn heap_bytes(&self) -> usize {
        self.original_ids.capacity() * core::mem::size_of::<usize>()
            + self.local_edges.capacity() * core::mem::size_of::<(usize, usize)>()
    }

    /// Dense `k x k` row-major 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Vec<f64> {
        let k = self.k();
        let mut a = vec![0.0; k * k];
        for &(i, j) in &self.local_edges {
            a[i * k + j] = 1.0;
            a[j * k + i] = 1.0;
        }
        a
    }

    /// Row `i` of the adjacency matrix.
    pub fn adjacency_row(&self, i: usize) -> Result<Vec<f64>> {
        let k = self.k();
        if i >= k {
            return Err(Error::NodeOutOfRange {
                node: i,
                node_count: k,
            });
        }
        let mut row = vec![0.0; k];
        for &(a, b) in &self.local_edges {
            if a == i {
                row[b] = 1.0;
            } else if b == i {
                row[a] = 1.0;
            }
        }
        Ok(row)
    }
}
