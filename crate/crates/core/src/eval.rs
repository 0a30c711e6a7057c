//! Network recovery and community detection metrics.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ensemble::EmbeddingTable;
use crate::graph::Graph;
use crate::math::squared_distance;
use crate::{Error, Result};

/// Negative squared Euclidean distance: higher means more likely linked.
pub fn link_score(z_u: &[f64], z_v: &[f64]) -> Result<f64> {
    if z_u.len() != z_v.len() {
        return Err(Error::shape("link score operands", z_u.len(), z_v.len()));
    }
    Ok(-squared_distance(z_u, z_v))
}

/// Area under the ROC curve from the rank statistic; tied scores earn half
/// credit.
pub fn auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::invalid("AUC needs at least one positive and one negative"));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share their average.
        let avg = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Fraction of positives among the `k` highest-scored candidates. `k` is
/// truncated to the candidate count; ties are broken by a random shuffle.
pub fn precision_at_k<R: Rng + ?Sized>(
    scored: &[(f64, bool)],
    k: usize,
    rng: &mut R,
) -> Result<f64> {
    let cutoff = k.min(scored.len());
    if cutoff == 0 {
        return Err(Error::invalid("precision@k needs k >= 1 and a nonempty candidate list"));
    }
    let mut ranked = scored.to_vec();
    ranked.shuffle(rng);
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ranked[..cutoff].iter().filter(|e| e.1).count() as f64 / cutoff as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub np_ratio: usize,
    pub auc: f64,
    pub prec_at_k: f64,
    /// Precision cutoff as requested.
    pub k: usize,
}

fn complete_row(table: &EmbeddingTable, v: usize) -> Result<&[f64]> {
    table
        .get(v)
        .ok_or_else(|| Error::invalid(format!("node {v} has no embedding")))
}

/// `count` distinct node pairs `(u < v)` that are not edges of `graph`.
pub fn sample_non_edges<R: Rng + ?Sized>(
    graph: &Graph,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = graph.node_count();
    let available = n * n.saturating_sub(1) / 2 - graph.edge_count();
    if count > available {
        return Err(Error::invalid(format!(
            "need {count} negative pairs but the graph has only {available} non-edges"
        )));
    }
    if count * 2 > available {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !graph.has_edge(u, v))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut chosen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || graph.has_edge(u, v) {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if chosen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// All edges as positives against `np_ratio * |E|` sampled non-edges.
pub fn network_recovery<R: Rng + ?Sized>(
    table: &EmbeddingTable,
    graph: &Graph,
    np_ratio: usize,
    k_cutoff: usize,
    rng: &mut R,
) -> Result<RecoveryReport> {
    if np_ratio == 0 {
        return Err(Error::invalid("np_ratio must be at least 1"));
    }
    if graph.edge_count() == 0 {
        return Err(Error::invalid("network recovery needs at least one edge"));
    }
    if table.node_count() != graph.node_count() {
        return Err(Error::shape("embedding table nodes", graph.node_count(), table.node_count()));
    }
    let negatives = sample_non_edges(graph, np_ratio * graph.edge_count(), rng)?;
    let score = |&(u, v): &(usize, usize)| link_score(complete_row(table, u)?, complete_row(table, v)?);
    let pos: Vec<f64> = graph.edges().iter().map(score).collect::<Result<_>>()?;
    let neg: Vec<f64> = negatives.iter().map(score).collect::<Result<_>>()?;
    let auc = auc(&pos, &neg)?;
    let scored: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    Ok(RecoveryReport {
        np_ratio,
        auc,
        prec_at_k: precision_at_k(&scored, k_cutoff, rng)?,
        k: k_cutoff,
    })
}

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to assigned centroids after each assignment
    /// step.
    pub objective_trace: Vec<f64>,
}

impl KMeans {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centre) in centroids.iter().enumerate() {
        let d = squared_distance(point, centre);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeds<R: Rng + ?Sized>(points: &[Vec<f64>], c: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| squared_distance(p, &points[first])).collect();
    while centroids.len() < c {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if target < acc {
                    break;
                }
            }
            pick.unwrap()
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &points[pick]));
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding on raw points.
pub fn kmeans_points<R: Rng + ?Sized>(points: &[Vec<f64>], c: usize, rng: &mut R) -> Result<KMeans> {
    let n = points.len();
    if c == 0 || c > n {
        return Err(Error::invalid(format!("cluster count {c} must lie in [1, {n}]")));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::shape("k-means point", dim, p.len()));
    }
    let mut centroids = plus_plus_seeds(points, c, rng);
    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();
    for _ in 0..KMEANS_MAX_ITER {
        let mut cost = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (cl, d) = nearest(p, &centroids);
            assignment[i] = cl;
            cost[i] = d;
        }
        // Empty clusters take the point farthest from its centroid, drawn
        // from clusters that can spare one.
        let mut sizes = vec![0usize; c];
        for &a in &assignment {
            sizes[a] += 1;
        }
        for empty in 0..c {
            if sizes[empty] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[assignment[i]] > 1)
                .max_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(b.cmp(&a)))
                .expect("c <= n leaves a cluster with a spare point");
            sizes[assignment[far]] -= 1;
            sizes[empty] = 1;
            assignment[far] = empty;
            cost[far] = 0.0;
            centroids[empty] = points[far].clone();
        }
        trace.push(cost.iter().sum());

        let mut next = vec![vec![0.0; dim]; c];
        for (p, &a) in points.iter().zip(&assignment) {
            for (s, &x) in next[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for (cl, centre) in next.iter_mut().enumerate() {
            let size = sizes[cl] as f64;
            for s in centre.iter_mut() {
                *s /= size;
            }
            shift = shift.max(libm::sqrt(squared_distance(centre, &centroids[cl])));
        }
        centroids = next;
        if shift < KMEANS_TOL {
            break;
        }
    }
    Ok(KMeans {
        assignment,
        centroids,
        objective_trace: trace,
    })
}

/// k-means over a complete embedding table.
pub fn kmeans<R: Rng + ?Sized>(table: &EmbeddingTable, c: usize, rng: &mut R) -> Result<KMeans> {
    let points = (0..table.node_count())
        .map(|v| complete_row(table, v).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    kmeans_points(&points, c, rng)
}

/// Fraction of edges whose endpoints share a cluster.
pub fn density(assignment: &[usize], graph: &Graph) -> Result<f64> {
    if assignment.len() != graph.node_count() {
        return Err(Error::shape("cluster assignment", graph.node_count(), assignment.len()));
    }
    if graph.edge_count() == 0 {
        return Err(Error::invalid("density is undefined on an edgeless graph"));
    }
    let intra = graph
        .edges()
        .iter()
        .filter(|&&(u, v)| assignment[u] == assignment[v])
        .count();
    Ok(intra as f64 / graph.edge_count() as f64)
}

/// Mean silhouette with Euclidean distance. Nodes in singleton clusters,
/// and nodes with `a = b = 0`, contribute 0.
pub fn silhouette_points(assignment: &[usize], points: &[Vec<f64>]) -> Result<f64> {
    let n = points.len();
    if assignment.len() != n {
        return Err(Error::shape("cluster assignment", n, assignment.len()));
    }
    let labels: BTreeSet<usize> = assignment.iter().copied().collect();
    if labels.len() < 2 {
        return Err(Error::invalid("silhouette needs at least two nonempty clusters"));
    }
    let labels: Vec<usize> = labels.into_iter().collect();
    let slot = |l: usize| labels.binary_search(&l).unwrap();
    let mut sizes = vec![0usize; labels.len()];
    for &a in assignment {
        sizes[slot(a)] += 1;
    }
    let mut total = 0.0;
    let mut dist_sum = vec![0.0; labels.len()];
    for i in 0..n {
        let own = slot(assignment[i]);
        if sizes[own] == 1 {
            continue;
        }
        dist_sum.fill(0.0);
        for j in 0..n {
            if j != i {
                dist_sum[slot(assignment[j])] += libm::sqrt(squared_distance(&points[i], &points[j]));
            }
        }
        let a = dist_sum[own] / (sizes[own] - 1) as f64;
        let b = (0..labels.len())
            .filter(|&c| c != own)
            .map(|c| dist_sum[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

pub fn silhouette(assignment: &[usize], table: &EmbeddingTable) -> Result<f64> {
    let points = (0..table.node_count())
        .map(|v| complete_row(table, v).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    silhouette_points(assignment, &points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub c: usize,
    pub density: f64,
    pub silhouette: f64,
    pub assignment: Vec<usize>,
}

/// k-means with `c` clusters, scored by density and silhouette.
pub fn community_detection<R: Rng + ?Sized>(
    table: &EmbeddingTable,
    graph: &Graph,
    c: usize,
    rng: &mut R,
) -> Result<ClusterReport> {
    let km = kmeans(table, c, rng)?;
    let density = density(&km.assignment, graph)?;
    let silhouette = silhouette(&km.assignment, table)?;
    Ok(ClusterReport {
        c,
        density,
        silhouette,
        assignment: km.assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::triangle;
    use crate::rng::from_seed;

    #[test]
    fn link_scores() {
        assert_eq!(link_score(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert_eq!(link_score(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), -1.0);
        let (a, b) = ([0.1, 0.9, 0.4], [0.7, 0.2, 0.5]);
        assert_eq!(link_score(&a, &b).unwrap(), link_score(&b, &a).unwrap());
        assert!(link_score(&a, &[1.0]).is_err());
    }

    #[test]
    fn auc_by_enumeration() {
        assert_eq!(auc(&[3.0, 1.0], &[2.0, 0.0]).unwrap(), 0.75);
        assert_eq!(auc(&[5.0, 6.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(auc(&[1.0; 3], &[1.0; 4]).unwrap(), 0.5);
        assert!(auc(&[], &[1.0]).is_err());
    }

    #[test]
    fn precision_truncates() {
        let scored = [(3.0, true), (2.0, false), (1.0, true)];
        assert_eq!(precision_at_k(&scored, 1, &mut from_seed(0)).unwrap(), 1.0);
        assert_eq!(precision_at_k(&scored, 2, &mut from_seed(0)).unwrap(), 0.5);
        let p = precision_at_k(&scored, 500, &mut from_seed(0)).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn density_cases() {
        let g = triangle();
        assert_eq!(density(&[0, 0, 0], &g).unwrap(), 1.0);
        assert_eq!(density(&[0, 1, 2], &g).unwrap(), 0.0);
        assert!((density(&[0, 0, 1], &g).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(density(&[0, 0], &g).is_err());
        assert!(density(&[0, 0, 0], &Graph::from_edges(3, []).unwrap()).is_err());
    }

    #[test]
    fn silhouette_cases() {
        let same = vec![vec![1.0, 1.0]; 4];
        assert_eq!(silhouette_points(&[0, 0, 1, 1], &same).unwrap(), 0.0);
        assert!(silhouette_points(&[0, 0, 0, 0], &same).is_err());
        let tight = vec![
            vec![0.0, 0.0],
            vec![0.01, 0.0],
            vec![1.0, 0.0],
            vec![1.01, 0.0],
        ];
        // a = 0.01, b = mean of {1.0, 1.01} or {0.99, 1.0}.
        let s = silhouette_points(&[0, 0, 1, 1], &tight).unwrap();
        let expect = [(1.005 - 0.01) / 1.005, (0.995 - 0.01) / 0.995];
        let manual = (expect[0] + expect[1] + expect[1] + expect[0]) / 4.0;
        assert!((s - manual).abs() < 1e-12);
        // Singleton cluster contributes 0.
        let s = silhouette_points(&[0, 0, 0, 1], &tight).unwrap();
        assert!(s.is_finite() && (-1.0..=1.0).contains(&s));
    }

    #[test]
    fn kmeans_degenerate_counts() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let one = kmeans_points(&pts, 1, &mut from_seed(1)).unwrap();
        assert!(one.assignment.iter().all(|&a| a == 0));
        let all = kmeans_points(&pts, 6, &mut from_seed(1)).unwrap();
        let labels: BTreeSet<_> = all.assignment.iter().collect();
        assert_eq!(labels.len(), 6);
        assert_eq!(all.objective(), 0.0);
        assert!(kmeans_points(&pts, 7, &mut from_seed(1)).is_err());
        assert!(kmeans_points(&pts, 0, &mut from_seed(1)).is_err());
    }

    #[test]
    fn recovery_rejects_dense_graphs() {
        let t = EmbeddingTable::from_rows(1, vec![vec![0.0]; 3]).unwrap();
        assert!(network_recovery(&t, &triangle(), 1, 10, &mut from_seed(0)).is_err());
    }

    #[test]
    fn non_edge_sampling_is_exact() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2)]).unwrap();
        let all = sample_non_edges(&g, 8, &mut from_seed(3)).unwrap();
        let set: BTreeSet<_> = all.iter().copied().collect();
        assert_eq!(set.len(), 8);
        assert!(all.iter().all(|&(u, v)| u < v && !g.has_edge(u, v)));
        assert!(sample_non_edges(&g, 9, &mut from_seed(3)).is_err());
        let few = sample_non_edges(&g, 2, &mut from_seed(3)).unwrap();
        assert_eq!(few.len(), 2);
    }
}
