//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::Rng;
use segen::config::resolve;
use segen::io::load_edge_list;
use segen::pipeline::{embed, sample_pool, unit_model, EMBEDDINGS_FILE, METRICS_FILE};
use segen_core::autoencoder::{gradient, loss_le, AutoencoderParams, LayerSpec, TrainConfig};
use segen_core::ensemble::{global_ensemble, propagate_missing, EmbeddingTable};
use segen_core::eval::{community_detection, network_recovery};
use segen_core::evolution::{crossover, inheritance_prob, mutate, run_with, selection_probs};
use segen_core::rng::from_seed;
use segen_core::sampler::{sample_biased_edge, sample_biased_node, Strategy};
use segen_core::synth::stochastic_block_model;
use segen_core::{Graph, SubNetwork};

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Peak live heap growth while `f` runs.
fn peak_growth<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let base = LIVE.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let out = f();
    (out, PEAK.load(Ordering::Relaxed).saturating_sub(base))
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sbm300.txt")
}

fn sbm(n: usize, seed: u64) -> Graph {
    stochastic_block_model(&[n / 2, n - n / 2], 0.1, 0.01, &mut from_seed(seed)).unwrap()
}

// 1 -------------------------------------------------------------------------

fn random_subnetwork(k: usize, rng: &mut impl Rng) -> SubNetwork {
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.random_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(k, edges)
        .unwrap()
        .induced_subgraph(&(0..k).collect::<Vec<_>>())
        .unwrap()
}

fn gradient_oracle() -> Verdict {
    const STEP: f64 = 1e-5;
    // One hidden layer between the 6-wide input and the 3-wide code.
    let spec = LayerSpec::new(vec![6, 4, 3]).unwrap();
    let mut rng = from_seed(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let params = AutoencoderParams::init(&spec, &mut rng);
        let sub = random_subnetwork(6, &mut rng);
        let cfg = TrainConfig {
            alpha: rng.random_range(0.0..0.5),
            beta: rng.random_range(0.0..0.1),
            gamma_recon: rng.random_range(1.5..6.0),
            ..TrainConfig::default()
        };
        let analytic = gradient(&params, &sub, &cfg).unwrap();
        let base = params.to_chromosome();
        for (i, a) in analytic.iter().enumerate() {
            let shifted = |h: f64| {
                let mut c = base.clone();
                c[i] += h;
                loss_le(&AutoencoderParams::from_chromosome(&spec, &c).unwrap(), &sub, &cfg).unwrap()
            };
            let numeric = (shifted(STEP) - shifted(-STEP)) / (2.0 * STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    verdict(worst < 1e-4, format!("max relative error {worst:.2e} over 20 instances (limit 1e-4)"))
}

// 2 -------------------------------------------------------------------------

fn sampling_distributions() -> Verdict {
    const DRAWS: usize = 100_000;
    let star = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let mut rng = from_seed(2);
    let mut node = [0usize; 5];
    for _ in 0..DRAWS {
        node[sample_biased_node(&star, 1, &mut rng).unwrap().original_ids()[0]] += 1;
    }
    let mut edge: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for _ in 0..DRAWS {
        let s = sample_biased_edge(&path, 2, &mut rng).unwrap();
        let ids = s.original_ids();
        *edge.entry((ids[0].min(ids[1]), ids[0].max(ids[1]))).or_default() += 1;
    }
    let rel = |count: usize, p: f64| ((count as f64 / DRAWS as f64) - p).abs() / p;
    let mut worst: f64 = 0.0;
    worst = worst.max(rel(node[0], 0.5));
    for &c in &node[1..] {
        worst = worst.max(rel(c, 0.125));
    }
    for (e, p) in [((0, 1), 0.3), ((1, 2), 0.4), ((2, 3), 0.3)] {
        worst = worst.max(rel(edge.get(&e).copied().unwrap_or(0), p));
    }
    verdict(worst < 0.1, format!("worst relative deviation {:.2}% (limit 10%)", worst * 100.0))
}

// 3 -------------------------------------------------------------------------

fn evolution_statistics() -> Verdict {
    let n = 100_000;
    let mut rng = from_seed(3);
    let (li, lj) = (0.4, 1.3);
    let p = inheritance_prob(li, lj).unwrap();
    let child = crossover(&vec![1.0; n], &vec![0.0; n], li, lj, &mut rng).unwrap();
    let freq = child.iter().filter(|&&x| x == 1.0).count() as f64 / n as f64;
    let cross_ok = (freq - p).abs() <= 0.01;

    let rate = 0.01;
    let mut genes = vec![7.0; n];
    let count = mutate(&mut genes, rate, &mut rng).unwrap() as f64;
    let sigma = (n as f64 * rate * (1.0 - rate)).sqrt();
    let mut_ok = (count - n as f64 * rate).abs() <= 3.0 * sigma;

    let mut affine_worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(2..20);
        let losses: Vec<f64> = (0..m).map(|_| rng.random_range(-1e3..1e3)).collect();
        let (a, c) = (rng.random_range(0.01..100.0), rng.random_range(-1e3..1e3));
        let shifted: Vec<f64> = losses.iter().map(|x| a * x + c).collect();
        let p = selection_probs(&losses).unwrap();
        let q = selection_probs(&shifted).unwrap();
        for (x, y) in p.iter().zip(&q) {
            affine_worst = affine_worst.max((x - y).abs());
        }
    }
    let affine_ok = affine_worst <= 1e-12;
    verdict(
        cross_ok && mut_ok && affine_ok,
        format!(
            "inheritance {freq:.4} vs {p:.4}; mutations {count} vs {:.0} +- {:.1}; affine drift {affine_worst:.1e}",
            n as f64 * rate,
            3.0 * sigma
        ),
    )
}

// 4 -------------------------------------------------------------------------

fn ps1_args(graph: &Path, seed: u64) -> Vec<String> {
    vec![
        "--graph_path".into(),
        graph.display().to_string(),
        "--seed".into(),
        seed.to_string(),
    ]
}

fn convergence() -> Verdict {
    let mut improved = 0;
    let mut notes = Vec::new();
    for seed in 1..=10u64 {
        let graph = sbm(300, 1000 + seed);
        let cfg = resolve(Some("ps1"), None, &["--seed".into(), seed.to_string()]).unwrap();
        // Best validation loss summed over the five strategies.
        let trace = embed(&cfg, &graph).unwrap().trace;
        let (first, last) = (trace[0].best_loss, trace[29].best_loss);
        if last < first {
            improved += 1;
        }
        notes.push(format!("{first:.0}->{last:.0}"));
    }
    verdict(
        improved >= 9,
        format!("{improved}/10 seeds improved (need 9); summed best loss {}", notes.join(" ")),
    )
}

// 5 and 8 share one ps1 run on the fixture --------------------------------

struct Ps1Run {
    graph: Graph,
    global: EmbeddingTable,
    strategy_tables: Vec<(Strategy, EmbeddingTable)>,
}

fn ps1_run() -> Ps1Run {
    let cfg = resolve(Some("ps1"), None, &ps1_args(&fixture(), 1)).unwrap();
    let graph = load_edge_list(&fixture()).unwrap();
    let emb = embed(&cfg, &graph).unwrap();
    Ps1Run {
        strategy_tables: emb.outcomes.iter().map(|o| (o.strategy, o.table.clone())).collect(),
        global: emb.global,
        graph,
    }
}

fn end_task_quality(run: &Ps1Run) -> Verdict {
    let recovery = |t: &EmbeddingTable| network_recovery(t, &run.graph, 1, 500, &mut from_seed(55)).unwrap().auc;
    let global_auc = recovery(&run.global);
    let singles: Vec<(Strategy, f64)> = run.strategy_tables.iter().map(|(s, t)| (*s, recovery(t))).collect();
    let mean_single = singles.iter().map(|(_, a)| a).sum::<f64>() / singles.len() as f64;
    let density = community_detection(&run.global, &run.graph, 2, &mut from_seed(56))
        .unwrap()
        .density;
    let parts: Vec<String> = singles.iter().map(|(s, a)| format!("{s} {a:.3}")).collect();
    verdict(
        global_auc >= 0.80 && density >= 0.80 && global_auc >= mean_single,
        format!(
            "global AUC {global_auc:.3} (need 0.80), density c=2 {density:.3} (need 0.80), \
             single-strategy AUCs [{}] mean {mean_single:.3}",
            parts.join(", ")
        ),
    )
}

fn ensemble_invariants(run: &Ps1Run) -> Verdict {
    let complete = run.global.present_count() == run.graph.node_count()
        && run.strategy_tables.iter().all(|(_, t)| t.present_count() == run.graph.node_count());

    // Propagation fills everything even with most nodes absent.
    let mut sparse = EmbeddingTable::empty(run.graph.node_count(), 2);
    for v in (0..run.graph.node_count()).step_by(7) {
        sparse.set(v, &[1.0, 2.0]).unwrap();
    }
    let filled = propagate_missing(&sparse, &run.graph, &mut from_seed(8)).unwrap();
    let propagated = filled.present_count() == run.graph.node_count();

    // A node absent from every table averages to exact zeros.
    let mut a = EmbeddingTable::empty(3, 2);
    let mut b = EmbeddingTable::empty(3, 2);
    a.set(0, &[0.3, 0.7]).unwrap();
    b.set(1, &[0.1, 0.9]).unwrap();
    let g = global_ensemble(&[a, b]).unwrap();
    let zeros = g.get(2).unwrap().iter().all(|&x| x == 0.0);

    let (_, t) = &run.strategy_tables[0];
    let same = global_ensemble(&vec![t.clone(); 5]).unwrap();
    let mut drift: f64 = 0.0;
    for v in 0..t.node_count() {
        for (x, y) in same.row(v).iter().zip(t.row(v)) {
            drift = drift.max((x - y).abs());
        }
    }
    let identity = drift <= 1e-15;
    verdict(
        complete && propagated && zeros && identity,
        format!(
            "complete {complete}, propagation fills all {propagated}, absent->zero {zeros}, \
             identity drift {drift:.1e}"
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn complexity() -> Verdict {
    let mut storage = Vec::new();
    let mut peaks = Vec::new();
    let mut times = Vec::new();
    for n in [300, 3000] {
        let graph = sbm(n, 6);
        let cfg = resolve(None, None, &["--pool_size".into(), "200".into(), "--k".into(), "10".into()]).unwrap();
        let mut bytes = 0;
        let mut peak = 0;
        let mut bfs_pool = None;
        for &s in &cfg.strategies {
            let (pool, grown) = peak_growth(|| sample_pool(&cfg, &graph, s).unwrap());
            bytes += pool.storage_bytes();
            peak = peak.max(grown);
            if s == Strategy::Bfs {
                bfs_pool = Some(pool);
            }
        }
        storage.push(bytes);
        peaks.push(peak);
        let pool = bfs_pool.unwrap();
        let unit = unit_model(&cfg).unwrap();
        let best = (0..3)
            .map(|_| {
                let start = Instant::now();
                run_with(&unit, &pool, &cfg.evolution_config(), 9).unwrap();
                start.elapsed()
            })
            .min()
            .unwrap();
        times.push(best);
    }
    let storage_diff = (storage[1] as f64 - storage[0] as f64).abs() / storage[0] as f64;
    let time_ratio = times[1].as_secs_f64() / times[0].as_secs_f64();
    verdict(
        storage_diff < 0.10 && time_ratio <= 1.5,
        format!(
            "pool storage {} vs {} bytes ({:.1}% apart, limit 10%); peak sampling heap {} vs {} bytes; \
             training {:.2}s vs {:.2}s (ratio {time_ratio:.2}, limit 1.5)",
            storage[0],
            storage[1],
            storage_diff * 100.0,
            peaks[0],
            peaks[1],
            times[0].as_secs_f64(),
            times[1].as_secs_f64()
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn determinism() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_segen"))
            .args(["run", "--preset", "ps1", "--seed", "7", "--graph_path"])
            .arg(fixture())
            .arg("--output_dir")
            .arg(d.path())
            .status()
            .unwrap();
        if !status.success() {
            return verdict(false, format!("segen run exited with {status}"));
        }
    }
    let same = |f: &str| std::fs::read(dirs[0].path().join(f)).unwrap() == std::fs::read(dirs[1].path().join(f)).unwrap();
    let (emb, met) = (same(EMBEDDINGS_FILE), same(METRICS_FILE));
    verdict(emb && met, format!("embeddings.csv identical {emb}, metrics.csv identical {met}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let mut v = f();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                v.pass = false;
                v.detail.push_str(&format!("; over the {}s budget", limit.as_secs()));
            }
        }
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({name}, {:.1}s): {}", elapsed.as_secs_f64(), v.detail);
        if !v.pass {
            failures += 1;
        }
    };
    report(1, "gradient oracle", Some(Duration::from_secs(10)), &mut gradient_oracle);
    report(2, "sampling distributions", Some(Duration::from_secs(30)), &mut sampling_distributions);
    report(3, "evolution statistics", None, &mut evolution_statistics);
    report(4, "convergence", Some(Duration::from_secs(300)), &mut convergence);
    let start = Instant::now();
    let run = ps1_run();
    let shared = start.elapsed();
    report(5, "end-task quality", Some(Duration::from_secs(600).saturating_sub(shared)), &mut || {
        end_task_quality(&run)
    });
    report(6, "complexity", None, &mut complexity);
    report(7, "determinism", None, &mut determinism);
    report(8, "ensemble invariants", None, &mut || ensemble_invariants(&run));
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
