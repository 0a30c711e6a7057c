//! Properties of the link-recovery and clustering scores.

use proptest::prelude::*;
use rand::Rng;
use segen_core::ensemble::EmbeddingTable;
use segen_core::eval::{
    auc, community_detection, density, kmeans_points, network_recovery, precision_at_k,
    silhouette_points,
};
use segen_core::rng::from_seed;
use segen_core::synth::{block_labels, stochastic_block_model};
use segen_core::Graph;

/// Brute-force pair count, independent of the rank formula.
fn auc_by_pairs(pos: &[f64], neg: &[f64]) -> f64 {
    let mut credit = 0.0;
    for &p in pos {
        for &n in neg {
            credit += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    credit / (pos.len() * neg.len()) as f64
}

fn scores() -> impl Strategy<Value = Vec<f64>> {
    // Small integer grid so ties are common.
    prop::collection::vec((-20i32..20).prop_map(|x| x as f64 / 4.0), 1..30)
}

proptest! {
    #[test]
    fn auc_matches_pair_counting(pos in scores(), neg in scores()) {
        let a = auc(&pos, &neg).unwrap();
        prop_assert!((a - auc_by_pairs(&pos, &neg)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_strictly_increasing_transforms(pos in scores(), neg in scores()) {
        let f = |x: &f64| (x * 0.7).exp() + 3.0 * x;
        let p2: Vec<f64> = pos.iter().map(f).collect();
        let n2: Vec<f64> = neg.iter().map(f).collect();
        prop_assert!((auc(&pos, &neg).unwrap() - auc(&p2, &n2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn swapping_labels_complements_auc(pos in scores(), neg in scores()) {
        let a = auc(&pos, &neg).unwrap();
        let b = auc(&neg, &pos).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn precision_lies_in_unit_interval(
        pos in scores(), neg in scores(), k in 1usize..80, seed in any::<u64>()
    ) {
        let scored: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true))
            .chain(neg.iter().map(|&s| (s, false))).collect();
        let p = precision_at_k(&scored, k, &mut from_seed(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if k >= scored.len() {
            prop_assert!((p - pos.len() as f64 / scored.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn merging_clusters_never_lowers_density(
        seed in any::<u64>(),
        labels in prop::collection::vec(0usize..5, 30),
        a in 0usize..5,
        b in 0usize..5,
    ) {
        let g = stochastic_block_model(&[15, 15], 0.3, 0.1, &mut from_seed(seed)).unwrap();
        prop_assume!(g.edge_count() > 0);
        let before = density(&labels, &g).unwrap();
        let merged: Vec<usize> = labels.iter().map(|&l| if l == b { a } else { l }).collect();
        prop_assert!(density(&merged, &g).unwrap() >= before);
    }

    #[test]
    fn kmeans_objective_never_increases(
        seed in any::<u64>(),
        n in 6usize..60,
        c in 1usize..6,
        dim in 1usize..4,
    ) {
        let mut rng = from_seed(seed);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let km = kmeans_points(&points, c, &mut rng).unwrap();
        for w in km.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", km.objective_trace);
        }
        prop_assert_eq!(km.assignment.len(), n);
        prop_assert!(km.assignment.iter().all(|&l| l < c));
        // Lloyd's fixed point: every point sits with its nearest centroid.
        for (p, &l) in points.iter().zip(&km.assignment) {
            let d = |q: &Vec<f64>| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            let own = d(&km.centroids[l]);
            at_nearest_centroid(own, km.centroids.iter().map(d).fold(f64::INFINITY, f64::min))?;
        }
    }
}

fn at_nearest_centroid(own: f64, best: f64) -> Result<(), TestCaseError> {
    prop_assert!(own <= best + 1e-9, "point not at nearest centroid: {own} > {best}");
    Ok(())
}

fn two_clouds(spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = from_seed(seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (label, centre) in [(0usize, [0.0, 0.0]), (1, [10.0, 10.0])] {
        for _ in 0..50 {
            points.push(vec![
                centre[0] + rng.random_range(-spread..spread),
                centre[1] + rng.random_range(-spread..spread),
            ]);
            labels.push(label);
        }
    }
    (points, labels)
}

#[test]
fn separated_clouds_are_recovered() {
    for seed in 0..10 {
        let (points, labels) = two_clouds(1.0, seed);
        let km = kmeans_points(&points, 2, &mut from_seed(seed + 100)).unwrap();
        let flip = km.assignment[0] != labels[0];
        for (a, l) in km.assignment.iter().zip(&labels) {
            assert_eq!((*a == 1) ^ flip, *l == 1);
        }
        let s = silhouette_points(&km.assignment, &points).unwrap();
        assert!(s > 0.9, "silhouette {s}");
    }
}

#[test]
fn silhouette_is_near_zero_for_arbitrary_split_of_one_cloud() {
    let (points, _) = two_clouds(1.0, 3);
    let one: Vec<Vec<f64>> = points[..50].to_vec();
    let labels: Vec<usize> = (0..50).map(|i| i % 2).collect();
    let s = silhouette_points(&labels, &one).unwrap();
    assert!(s.abs() < 0.1, "silhouette {s}");
}

fn block_table(labels: &[usize], noise: f64, seed: u64) -> EmbeddingTable {
    let mut rng = from_seed(seed);
    let rows = labels
        .iter()
        .map(|&l| {
            let mut row = [0.0; 2];
            row[l] = 1.0;
            row.iter().map(|x| x + rng.random_range(-noise..noise)).collect()
        })
        .collect();
    EmbeddingTable::from_rows(2, rows).unwrap()
}

#[test]
fn block_indicator_embeddings_reach_their_ceiling() {
    let g = stochastic_block_model(&[60, 60], 0.2, 0.01, &mut from_seed(2)).unwrap();
    let labels = block_labels(&[60, 60]);
    let table = block_table(&labels, 0.05, 4);
    let rec = network_recovery(&table, &g, 5, 100, &mut from_seed(5)).unwrap();
    // A block indicator cannot rank intra-block non-edges below edges, so the
    // expected AUC is P(pos intra) P(neg inter) + P(same side) / 2, with
    // small noise splitting same-side ties evenly.
    let intra_edges = g.edges().iter().filter(|&&(u, v)| labels[u] == labels[v]).count();
    let intra = intra_edges as f64 / g.edge_count() as f64;
    let intra_pairs = 2 * 60 * 59 / 2;
    let non_edges = 120 * 119 / 2 - g.edge_count();
    let neg_intra = (intra_pairs - intra_edges) as f64 / non_edges as f64;
    let expected = intra * (1.0 - neg_intra)
        + 0.5 * (intra * neg_intra + (1.0 - intra) * (1.0 - neg_intra));
    assert!((rec.auc - expected).abs() < 0.03, "auc {} vs {expected}", rec.auc);
    let rep = community_detection(&table, &g, 2, &mut from_seed(6)).unwrap();
    assert!((rep.density - intra).abs() < 1e-12);
    assert!(rep.silhouette > 0.9);
}

#[test]
fn identical_embeddings_give_chance_auc() {
    let g = Graph::from_edges(6, [(0, 1), (2, 3), (4, 5)]).unwrap();
    let table = EmbeddingTable::from_rows(3, vec![vec![0.2; 3]; 6]).unwrap();
    let rec = network_recovery(&table, &g, 2, 3, &mut from_seed(1)).unwrap();
    assert_eq!(rec.auc, 0.5);
}

#[test]
fn recovery_needs_a_complete_table() {
    let g = Graph::from_edges(3, [(0, 1)]).unwrap();
    let mut t = EmbeddingTable::empty(3, 1);
    t.set(0, &[0.0]).unwrap();
    t.set(1, &[1.0]).unwrap();
    assert!(network_recovery(&t, &g, 1, 1, &mut from_seed(1)).is_err());
}
