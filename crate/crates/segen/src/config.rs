//! Run configuration: built-in defaults, named presets, `key = value` files
//! and command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use segen_core::autoencoder::{LayerSpec, TrainConfig};
use segen_core::evolution::EvolutionConfig;
use segen_core::sampler::Strategy;

use crate::error::RunError;

/// Canonical keys, in snapshot order.
pub const KEYS: &[&str] = &[
    "graph_path",
    "strategies",
    "k",
    "pool_size",
    "hs_bfs_prob",
    "m",
    "K",
    "b",
    "v_size",
    "mutation_prob",
    "alpha",
    "beta",
    "gamma_recon",
    "learning_rate",
    "epochs_per_batch",
    "hidden",
    "d",
    "np_ratios",
    "cluster_counts",
    "prec_cutoff",
    "seed",
    "output_dir",
    "threads",
    "pools_from",
    "dump_chromosomes",
];

const ALIASES: &[(&str, &str)] = &[
    ("population", "m"),
    ("generations", "K"),
    ("batch_size", "b"),
    ("validation_size", "v_size"),
    ("graph", "graph_path"),
    ("out", "output_dir"),
];

/// Resolves an alias or a dashed spelling to its canonical key.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let key = key.replace('-', "_");
    KEYS.iter()
        .copied()
        .find(|k| *k == key)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == key).map(|(_, k)| *k))
}

pub const PRESETS: &[&str] = &["ps1", "ps2", "ps3", "ps4", "ps5"];

/// `(k, pool_size, b, m)` of each preset; all run 30 generations.
fn preset_values(name: &str) -> Option<[usize; 4]> {
    Some(match name {
        "ps1" => [10, 200, 10, 10],
        "ps2" => [50, 600, 5, 50],
        "ps3" => [25, 300, 35, 5],
        "ps4" => [50, 700, 10, 5],
        "ps5" => [45, 500, 50, 5],
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph_path: Option<PathBuf>,
    pub strategies: Vec<Strategy>,
    pub k: usize,
    pub pool_size: usize,
    pub hs_bfs_prob: f64,
    pub population: usize,
    pub generations: usize,
    pub batch_size: usize,
    pub v_size: usize,
    pub mutation_prob: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_recon: f64,
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
    pub hidden: Vec<usize>,
    pub d: usize,
    pub np_ratios: Vec<usize>,
    pub cluster_counts: Vec<usize>,
    pub prec_cutoff: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Directory of `pool_<strategy>.txt` dumps to train on instead of
    /// sampling afresh.
    pub pools_from: Option<PathBuf>,
    pub dump_chromosomes: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let [k, pool_size, batch_size, population] = preset_values("ps1").unwrap();
        let train = TrainConfig::default();
        let evo = EvolutionConfig::default();
        RunConfig {
            graph_path: None,
            strategies: Strategy::ALL.to_vec(),
            k,
            pool_size,
            hs_bfs_prob: 0.5,
            population,
            generations: 30,
            batch_size,
            v_size: evo.validation_size,
            mutation_prob: evo.mutation_prob,
            alpha: train.alpha,
            beta: train.beta,
            gamma_recon: train.gamma_recon,
            learning_rate: train.learning_rate,
            epochs_per_batch: train.epochs_per_batch,
            hidden: vec![32],
            d: 16,
            np_ratios: vec![1, 5, 10],
            cluster_counts: vec![5, 25, 50],
            prec_cutoff: 500,
            seed: 0,
            output_dir: PathBuf::from("segen_out"),
            threads: 0,
            pools_from: None,
            dump_chromosomes: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, RunError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| RunError::usage(format!("invalid value {value:?} for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, RunError>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(RunError::usage(format!("{key} must list at least one value")));
    }
    items.into_iter().map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, RunError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(RunError::usage(format!("invalid value {other:?} for {key}: expected true or false"))),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one canonical key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), RunError> {
        let key = canonical_key(key).ok_or_else(|| RunError::usage(format!("unknown key {key:?}")))?;
        let opt_path = |v: &str| {
            let v = v.trim();
            (!v.is_empty()).then(|| PathBuf::from(v))
        };
        match key {
            "graph_path" => self.graph_path = opt_path(value),
            "strategies" => {
                let list: Vec<Strategy> = parse_list(key, value)?;
                self.strategies.clear();
                for s in list {
                    if !self.strategies.contains(&s) {
                        self.strategies.push(s);
                    }
                }
            }
            "k" => self.k = parse(key, value)?,
            "pool_size" => self.pool_size = parse(key, value)?,
            "hs_bfs_prob" => self.hs_bfs_prob = parse(key, value)?,
            "m" => self.population = parse(key, value)?,
            "K" => self.generations = parse(key, value)?,
            "b" => self.batch_size = parse(key, value)?,
            "v_size" => self.v_size = parse(key, value)?,
            "mutation_prob" => self.mutation_prob = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma_recon" => self.gamma_recon = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "epochs_per_batch" => self.epochs_per_batch = parse(key, value)?,
            "hidden" => {
                self.hidden = if value.trim().is_empty() || value.trim() == "none" {
                    Vec::new()
                } else {
                    parse_list(key, value)?
                }
            }
            "d" => self.d = parse(key, value)?,
            "np_ratios" => self.np_ratios = parse_list(key, value)?,
            "cluster_counts" => self.cluster_counts = parse_list(key, value)?,
            "prec_cutoff" => self.prec_cutoff = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "output_dir" => {
                self.output_dir = opt_path(value).ok_or_else(|| RunError::usage("output_dir must not be empty"))?
            }
            "threads" => self.threads = parse(key, value)?,
            "pools_from" => self.pools_from = opt_path(value),
            "dump_chromosomes" => self.dump_chromosomes = parse_bool(key, value)?,
            _ => unreachable!("every canonical key is handled"),
        }
        Ok(())
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<(), RunError> {
        let [k, pool_size, b, m] = preset_values(name).ok_or_else(|| {
            RunError::usage(format!("unknown preset {name:?}; expected one of {}", PRESETS.join(", ")))
        })?;
        self.k = k;
        self.pool_size = pool_size;
        self.batch_size = b;
        self.population = m;
        self.generations = 30;
        Ok(())
    }

    /// Checks every field, naming the offending key on failure.
    pub fn validate(&self) -> Result<(), RunError> {
        let fail = |key: &str, msg: &str| Err(RunError::usage(format!("{key}: {msg}")));
        if self.strategies.is_empty() {
            return fail("strategies", "must name at least one strategy");
        }
        if self.k == 0 {
            return fail("k", "sub-network size must be at least 1");
        }
        if self.strategies.contains(&Strategy::Es) && self.k < 2 {
            return fail("k", "edge sampling needs k >= 2");
        }
        if self.pool_size == 0 {
            return fail("pool_size", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.hs_bfs_prob) {
            return fail("hs_bfs_prob", "must lie in [0, 1]");
        }
        if self.population < 2 {
            return fail("m", "a generation needs at least 2 unit models");
        }
        if self.generations == 0 {
            return fail("K", "must be at least 1");
        }
        if self.batch_size == 0 || self.batch_size > self.pool_size {
            return fail("b", "batch size must lie in [1, pool_size]");
        }
        if self.v_size == 0 || self.v_size > self.pool_size {
            return fail("v_size", "validation size must lie in [1, pool_size]");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return fail("mutation_prob", "must lie in [0, 1]");
        }
        for (key, v) in [("alpha", self.alpha), ("beta", self.beta), ("learning_rate", self.learning_rate)] {
            if !v.is_finite() || v < 0.0 {
                return fail(key, "must be finite and non-negative");
            }
        }
        if !self.gamma_recon.is_finite() || self.gamma_recon <= 1.0 {
            return fail("gamma_recon", "must be finite and greater than 1");
        }
        if self.hidden.contains(&0) {
            return fail("hidden", "layer widths must be positive");
        }
        if self.d == 0 {
            return fail("d", "must be at least 1");
        }
        if self.np_ratios.contains(&0) {
            return fail("np_ratios", "ratios must be at least 1");
        }
        if self.cluster_counts.contains(&0) {
            return fail("cluster_counts", "counts must be at least 1");
        }
        if self.prec_cutoff == 0 {
            return fail("prec_cutoff", "must be at least 1");
        }
        Ok(())
    }

    /// Layer widths `[k, hidden..., d]`.
    pub fn layer_spec(&self) -> Result<LayerSpec, RunError> {
        LayerSpec::with_hidden(self.k, &self.hidden, self.d)
            .map_err(|e| RunError::usage(format!("hidden/d: {e}")))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            beta: self.beta,
            gamma_recon: self.gamma_recon,
            learning_rate: self.learning_rate,
            epochs_per_batch: self.epochs_per_batch,
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            population: self.population,
            generations: self.generations,
            batch_size: self.batch_size,
            mutation_prob: self.mutation_prob,
            validation_size: self.v_size,
        }
    }

    /// The graph path, or a usage error when none was given.
    pub fn require_graph(&self) -> Result<&Path, RunError> {
        self.graph_path
            .as_deref()
            .ok_or_else(|| RunError::usage("graph_path is required"))
    }

    /// Every key with its resolved value, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        KEYS.iter()
            .map(|&key| {
                let value = match key {
                    "graph_path" => path(&self.graph_path),
                    "strategies" => join(&self.strategies),
                    "k" => self.k.to_string(),
                    "pool_size" => self.pool_size.to_string(),
                    "hs_bfs_prob" => self.hs_bfs_prob.to_string(),
                    "m" => self.population.to_string(),
                    "K" => self.generations.to_string(),
                    "b" => self.batch_size.to_string(),
                    "v_size" => self.v_size.to_string(),
                    "mutation_prob" => self.mutation_prob.to_string(),
                    "alpha" => self.alpha.to_string(),
                    "beta" => self.beta.to_string(),
                    "gamma_recon" => self.gamma_recon.to_string(),
                    "learning_rate" => self.learning_rate.to_string(),
                    "epochs_per_batch" => self.epochs_per_batch.to_string(),
                    "hidden" => {
                        if self.hidden.is_empty() {
                            "none".to_string()
                        } else {
                            join(&self.hidden)
                        }
                    }
                    "d" => self.d.to_string(),
                    "np_ratios" => join(&self.np_ratios),
                    "cluster_counts" => join(&self.cluster_counts),
                    "prec_cutoff" => self.prec_cutoff.to_string(),
                    "seed" => self.seed.to_string(),
                    "output_dir" => self.output_dir.display().to_string(),
                    "threads" => self.threads.to_string(),
                    "pools_from" => path(&self.pools_from),
                    "dump_chromosomes" => self.dump_chromosomes.to_string(),
                    _ => unreachable!(),
                };
                (key, value)
            })
            .collect()
    }

    /// The `key = value` snapshot written next to every run; it parses back
    /// to the same configuration.
    pub fn snapshot(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        for (key, value) in self.entries() {
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }
}

/// Parses a `key = value` file body. Blank lines and `#` comments are
/// skipped; keys are checked but not yet applied.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, RunError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| RunError::usage(format!("config line {}: expected 'key = value'", i + 1)))?;
        let key = key.trim();
        let canon = canonical_key(key)
            .ok_or_else(|| RunError::usage(format!("config line {}: unknown key {key:?}", i + 1)))?;
        pairs.push((canon.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Turns `--key value` and `--key=value` tokens into pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, RunError> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let name = arg
            .strip_prefix("--")
            .ok_or_else(|| RunError::usage(format!("expected --key, found {arg:?}")))?;
        let (name, value) = match name.split_once('=') {
            Some((n, v)) => (n, v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| RunError::usage(format!("--{name} needs a value")))?;
                (name, v.clone())
            }
        };
        let canon = canonical_key(name).ok_or_else(|| RunError::usage(format!("unknown key {name:?}")))?;
        pairs.push((canon.to_string(), value));
    }
    Ok(pairs)
}

/// Layers default < preset < file < command line, then validates.
pub fn resolve(
    preset: Option<&str>,
    file: Option<&Path>,
    overrides: &[String],
) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::default();
    let file_pairs = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    let cli_pairs = parse_overrides(overrides)?;
    let mut keyed: BTreeMap<String, String> = BTreeMap::new();
    for (k, v) in file_pairs.into_iter().chain(cli_pairs) {
        keyed.insert(k, v);
    }
    if let Some(name) = preset {
        cfg.apply_preset(name)?;
    }
    for (k, v) in &keyed {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
