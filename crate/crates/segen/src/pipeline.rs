//! End-to-end orchestration: sampling, evolution, ensembles, evaluation and
//! the artifacts each subcommand leaves on disk.

use std::fs;
use std::path::{Path, PathBuf};

use segen_core::autoencoder::AutoencoderParams;
use segen_core::ensemble::{global_ensemble, local_ensemble, propagate_missing, EmbeddingTable};
use segen_core::eval::{community_detection, network_recovery};
use segen_core::evolution::{run_with, CorrelatedAutoencoder, EvolutionRun, TraceRow};
use segen_core::rng::{derive_seed, substream};
use segen_core::sampler::{build_pool, SamplePool, SamplerConfig, Strategy};
use segen_core::Graph;

use crate::config::RunConfig;
use crate::error::{RunError, StageExt};
use crate::io::{self, MetricRow};

pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const TRACE_FILE: &str = "fitness_trace.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "resolved_config.txt";

// Stream tags mixed into the master seed.
const SAMPLE_STREAM: u64 = 100;
const EVOLVE_STREAM: u64 = 101;
const PROPAGATE_STREAM: u64 = 102;
const RECOVERY_STREAM: u64 = 103;
const CLUSTER_STREAM: u64 = 104;

pub fn pool_file(strategy: Strategy) -> String {
    format!("pool_{strategy}.txt")
}

/// Caps the worker pool. Only the first call in a process takes effect.
pub fn configure_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| RunError::data("prepare output", &dir, e))?;
    fs::write(dir.join(CONFIG_FILE), cfg.snapshot())
        .map_err(|e| RunError::data("prepare output", dir.join(CONFIG_FILE), e))?;
    Ok(dir)
}

pub fn sampler_config(cfg: &RunConfig, strategy: Strategy) -> SamplerConfig {
    SamplerConfig {
        strategy,
        k: cfg.k,
        pool_size: cfg.pool_size,
        hs_bfs_prob: cfg.hs_bfs_prob,
        seed: derive_seed(cfg.seed, &[SAMPLE_STREAM, strategy.tag()]),
    }
}

pub fn sample_pool(cfg: &RunConfig, graph: &Graph, strategy: Strategy) -> Result<SamplePool, RunError> {
    build_pool(graph, &sampler_config(cfg, strategy)).stage("sampling")
}

/// Everything one strategy contributes to the run.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub run: EvolutionRun<AutoencoderParams>,
    /// Local ensemble after propagation; covers every node.
    pub table: EmbeddingTable,
}

pub fn unit_model(cfg: &RunConfig) -> Result<CorrelatedAutoencoder, RunError> {
    Ok(CorrelatedAutoencoder {
        spec: cfg.layer_spec()?,
        train: cfg.train_config(),
    })
}

/// Evolution on `pool`, then the local ensemble and propagation.
pub fn train_strategy(cfg: &RunConfig, graph: &Graph, pool: &SamplePool) -> Result<StrategyOutcome, RunError> {
    let unit = unit_model(cfg)?;
    let strategy = pool.strategy;
    if pool.k > cfg.k {
        return Err(RunError::usage(format!(
            "pool for {strategy} has k = {} but the configured k is {}",
            pool.k, cfg.k
        )));
    }
    let seed = derive_seed(cfg.seed, &[EVOLVE_STREAM, strategy.tag()]);
    let run = run_with(&unit, pool, &cfg.evolution_config(), seed).stage("evolution")?;
    let local = local_ensemble(&unit, &run.last.models, pool, graph.node_count()).stage("local ensemble")?;
    let mut rng = substream(cfg.seed, &[PROPAGATE_STREAM, strategy.tag()]);
    let table = propagate_missing(&local, graph, &mut rng).stage("propagation")?;
    Ok(StrategyOutcome { strategy, run, table })
}

/// Per-generation sums over strategies.
pub fn summed_trace(outcomes: &[StrategyOutcome]) -> Vec<TraceRow> {
    let generations = outcomes.iter().map(|o| o.run.trace.len()).min().unwrap_or(0);
    (0..generations)
        .map(|t| {
            let mut row = TraceRow {
                generation: t + 1,
                best_loss: 0.0,
                mean_loss: 0.0,
                worst_loss: 0.0,
            };
            for o in outcomes {
                let r = &o.run.trace[t];
                row.best_loss += r.best_loss;
                row.mean_loss += r.mean_loss;
                row.worst_loss += r.worst_loss;
            }
            row
        })
        .collect()
}

/// Result of the training stage over every configured strategy.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub outcomes: Vec<StrategyOutcome>,
    pub global: EmbeddingTable,
    pub trace: Vec<TraceRow>,
}

fn load_pools(cfg: &RunConfig, graph: &Graph) -> Result<Vec<SamplePool>, RunError> {
    cfg.strategies
        .iter()
        .map(|&s| match &cfg.pools_from {
            Some(dir) => {
                let pool = io::read_pool(&dir.join(pool_file(s)))?;
                if pool.strategy != s {
                    return Err(RunError::data(
                        "read pool",
                        dir.join(pool_file(s)),
                        format!("file holds a {} pool", pool.strategy),
                    ));
                }
                Ok(pool)
            }
            None => sample_pool(cfg, graph, s),
        })
        .collect()
}

pub fn embed(cfg: &RunConfig, graph: &Graph) -> Result<Embedding, RunError> {
    let pools = load_pools(cfg, graph)?;
    let outcomes = pools
        .iter()
        .map(|pool| train_strategy(cfg, graph, pool))
        .collect::<Result<Vec<_>, _>>()?;
    let tables: Vec<EmbeddingTable> = outcomes.iter().map(|o| o.table.clone()).collect();
    let global = global_ensemble(&tables).stage("global ensemble")?;
    let trace = summed_trace(&outcomes);
    Ok(Embedding {
        outcomes,
        global,
        trace,
    })
}

/// Both evaluation tasks over every configured np-ratio and cluster count.
pub fn evaluate(cfg: &RunConfig, graph: &Graph, table: &EmbeddingTable) -> Result<Vec<MetricRow>, RunError> {
    let mut rows = Vec::new();
    for &np in &cfg.np_ratios {
        let mut rng = substream(cfg.seed, &[RECOVERY_STREAM, np as u64]);
        let rep = network_recovery(table, graph, np, cfg.prec_cutoff, &mut rng).stage("network recovery")?;
        let param = format!("np_ratio={np}");
        rows.push(MetricRow::new("network_recovery", &param, "auc", rep.auc));
        rows.push(MetricRow::new(
            "network_recovery",
            &param,
            &format!("prec@{}", rep.k),
            rep.prec_at_k,
        ));
    }
    for &c in &cfg.cluster_counts {
        let mut rng = substream(cfg.seed, &[CLUSTER_STREAM, c as u64]);
        let rep = community_detection(table, graph, c, &mut rng).stage("community detection")?;
        let param = format!("c={c}");
        rows.push(MetricRow::new("community_detection", &param, "density", rep.density));
        rows.push(MetricRow::new("community_detection", &param, "silhouette", rep.silhouette));
    }
    Ok(rows)
}

fn write_training_artifacts(cfg: &RunConfig, dir: &Path, emb: &Embedding) -> Result<(), RunError> {
    io::write_embeddings(&dir.join(EMBEDDINGS_FILE), &emb.global)?;
    io::write_trace(&dir.join(TRACE_FILE), &emb.trace)?;
    if cfg.dump_chromosomes {
        let cdir = dir.join("chromosomes");
        fs::create_dir_all(&cdir).map_err(|e| RunError::data("write chromosome", &cdir, e))?;
        for o in &emb.outcomes {
            for (j, model) in o.run.last.models.iter().enumerate() {
                io::write_chromosome(&cdir.join(format!("{}_{j}.bin", o.strategy)), model.chromosome())?;
            }
        }
    }
    Ok(())
}

/// `sample`: writes one pool dump per strategy.
pub fn cmd_sample(cfg: &RunConfig) -> Result<(), RunError> {
    let graph = io::load_edge_list(cfg.require_graph()?)?;
    let dir = prepare_output(cfg)?;
    for &s in &cfg.strategies {
        let pool = sample_pool(cfg, &graph, s)?;
        io::write_pool(&dir.join(pool_file(s)), &pool)?;
    }
    Ok(())
}

/// `train`: embeddings and fitness trace.
pub fn cmd_train(cfg: &RunConfig) -> Result<Embedding, RunError> {
    let graph = io::load_edge_list(cfg.require_graph()?)?;
    let dir = prepare_output(cfg)?;
    let emb = embed(cfg, &graph)?;
    write_training_artifacts(cfg, &dir, &emb)?;
    Ok(emb)
}

/// `eval`: scores `embeddings.csv` in the output directory and appends to
/// the metrics file.
pub fn cmd_eval(cfg: &RunConfig) -> Result<Vec<MetricRow>, RunError> {
    let graph = io::load_edge_list(cfg.require_graph()?)?;
    let dir = prepare_output(cfg)?;
    let path = dir.join(EMBEDDINGS_FILE);
    let table = io::read_embeddings(&path)?;
    if table.node_count() != graph.node_count() || table.present_count() != graph.node_count() {
        return Err(RunError::data(
            "evaluation",
            path,
            format!(
                "embeddings cover {} of {} nodes",
                table.present_count(),
                graph.node_count()
            ),
        ));
    }
    let rows = evaluate(cfg, &graph, &table)?;
    io::append_metrics(&dir.join(METRICS_FILE), &rows)?;
    Ok(rows)
}

/// `run`: the whole pipeline; the metrics file is rewritten from scratch.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<MetricRow>, RunError> {
    let graph = io::load_edge_list(cfg.require_graph()?)?;
    let dir = prepare_output(cfg)?;
    let emb = embed(cfg, &graph)?;
    write_training_artifacts(cfg, &dir, &emb)?;
    // Evaluate what was written so `run` and `train` + `eval` agree exactly.
    let table = io::read_embeddings(&dir.join(EMBEDDINGS_FILE))?;
    let rows = evaluate(cfg, &graph, &table)?;
    let metrics = dir.join(METRICS_FILE);
    fs::write(&metrics, b"").map_err(|e| RunError::data("write metrics", &metrics, e))?;
    io::append_metrics(&metrics, &rows)?;
    Ok(rows)
}
