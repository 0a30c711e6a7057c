//! Genetic evolution of unit-model populations.
//!
//! A generation of `m` models is trained on per-model batches drawn from a
//! sample pool and scored on a shared validation set. The next generation
//! is bred from fitness-weighted parent pairs by uniform crossover and
//! rare mutation, then trained again. There is no elitism: each generation
//! replaces the previous one entirely.
//!
//! Randomness is keyed by `(master seed, generation, model)`, so the trace
//! is identical whether models are trained serially or in parallel.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::autoencoder::{self, AutoencoderParams, LayerSpec, TrainConfig};
use crate::graph::SubNetwork;
use crate::math::min_max_normalize;
use crate::rng;
use crate::sampler::{self, SamplePool};
use crate::{Error, Result};

/// What the evolution engine needs from a unit model.
pub trait UnitModel {
    type Model: Clone + Send + Sync;

    fn init(&self, rng: &mut dyn RngCore) -> Self::Model;

    fn to_chromosome(&self, model: &Self::Model) -> Vec<f64>;

    fn from_chromosome(&self, chromosome: &[f64]) -> Result<Self::Model>;

    fn train(
        &self,
        model: &Self::Model,
        batch: &[&SubNetwork],
        rng: &mut dyn RngCore,
    ) -> Result<Self::Model>;

    /// Validation loss; lower is fitter.
    fn fitness(&self, model: &Self::Model, validation: &[&SubNetwork]) -> Result<f64>;

    /// One embedding per real node of `sub`, in local order.
    fn embed(&self, model: &Self::Model, sub: &SubNetwork) -> Result<Vec<Vec<f64>>>;

    fn embedding_dim(&self) -> usize;
}

/// The correlated autoencoder as a unit model.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedAutoencoder {
    pub spec: LayerSpec,
    pub train: TrainConfig,
}

impl UnitModel for CorrelatedAutoencoder {
    type Model = AutoencoderParams;

    fn init(&self, rng: &mut dyn RngCore) -> AutoencoderParams {
        AutoencoderParams::init(&self.spec, rng)
    }

    fn to_chromosome(&self, model: &AutoencoderParams) -> Vec<f64> {
        model.to_chromosome()
    }

    fn from_chromosome(&self, chromosome: &[f64]) -> Result<AutoencoderParams> {
        AutoencoderParams::from_chromosome(&self.spec, chromosome)
    }

    fn train(
        &self,
        model: &AutoencoderParams,
        batch: &[&SubNetwork],
        rng: &mut dyn RngCore,
    ) -> Result<AutoencoderParams> {
        autoencoder::train_on_batch(model, batch, &self.train, rng)
    }

    fn fitness(&self, model: &AutoencoderParams, validation: &[&SubNetwork]) -> Result<f64> {
        fitness(model, validation)
    }

    fn embed(&self, model: &AutoencoderParams, sub: &SubNetwork) -> Result<Vec<Vec<f64>>> {
        model.encode_subnetwork(sub)
    }

    fn embedding_dim(&self) -> usize {
        self.spec.code_dim()
    }
}

/// Correlation-only loss of `model` summed over `validation`.
pub fn fitness(model: &AutoencoderParams, validation: &[&SubNetwork]) -> Result<f64> {
    if validation.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    let mut total = 0.0;
    for sub in validation {
        let codes = model.encode_subnetwork(sub)?;
        total += autoencoder::correlation_term(sub, &codes);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Population size `m`.
    pub population: usize,
    /// Number of generations `K`.
    pub generations: usize,
    pub batch_size: usize,
    pub mutation_prob: f64,
    pub validation_size: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population: 10,
            generations: 30,
            batch_size: 10,
            mutation_prob: 0.01,
            validation_size: 10,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid("population size must be at least 2"));
        }
        if self.generations == 0 {
            return Err(Error::invalid("generation count must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::invalid(format!(
                "mutation_prob must lie in [0, 1], got {}",
                self.mutation_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation<M> {
    /// 1-based generation number.
    pub index: usize,
    pub models: Vec<M>,
    pub fitness: Vec<f64>,
}

impl<M> Generation<M> {
    pub fn best(&self) -> f64 {
        self.fitness.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn worst(&self) -> f64 {
        self.fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.fitness.iter().sum::<f64>() / self.fitness.len() as f64
    }

    /// Index of the fittest model.
    pub fn fittest(&self) -> usize {
        let mut best = 0;
        for (i, &f) in self.fitness.iter().enumerate() {
            if f < self.fitness[best] {
                best = i;
            }
        }
        best
    }
}

/// One row of the per-generation fitness trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub generation: usize,
    pub best_loss: f64,
    pub mean_loss: f64,
    pub worst_loss: f64,
}

impl TraceRow {
    fn of<M>(gen: &Generation<M>) -> Self {
        TraceRow {
            generation: gen.index,
            best_loss: gen.best(),
            mean_loss: gen.mean(),
            worst_loss: gen.worst(),
        }
    }
}

fn check_finite(losses: &[f64]) -> Result<()> {
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::Numeric(format!("non-finite fitness value {bad}")));
    }
    Ok(())
}

fn softmax_neg(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = values.iter().map(|&v| libm::exp(-(v - lo))).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Parent selection probabilities: losses are min-max normalised to
/// `[0, 1]`, then passed through a softmax of their negation.
pub fn selection_probs(losses: &[f64]) -> Result<Vec<f64>> {
    if losses.len() < 2 {
        return Err(Error::invalid("selection needs at least two models"));
    }
    check_finite(losses)?;
    Ok(softmax_neg(&min_max_normalize(losses)))
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let target = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// `probs.len()` parent pairs. Both slots are drawn from `probs`; the second
/// is redrawn until it differs from the first.
pub fn select_parent_pairs<R: Rng + ?Sized>(
    probs: &[f64],
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if probs.len() < 2 {
        return Err(Error::invalid("pairing needs at least two models"));
    }
    check_finite(probs)?;
    if probs.iter().filter(|&&p| p > 0.0).count() < 2 {
        return Err(Error::invalid("pairing needs two models with positive probability"));
    }
    Ok((0..probs.len())
        .map(|_| {
            let i = draw(probs, rng);
            let mut j = draw(probs, rng);
            while j == i {
                j = draw(probs, rng);
            }
            (i, j)
        })
        .collect())
}

/// Probability that a child entry comes from the first parent: a softmax of
/// the pair's negated, min-max normalised losses.
pub fn inheritance_prob(loss_i: f64, loss_j: f64) -> Result<f64> {
    check_finite(&[loss_i, loss_j])?;
    Ok(softmax_neg(&min_max_normalize(&[loss_i, loss_j]))[0])
}

/// Uniform crossover: each entry is copied from `parent_i` with the
/// inheritance probability of `parent_i`, otherwise from `parent_j`.
pub fn crossover<R: Rng + ?Sized>(
    parent_i: &[f64],
    parent_j: &[f64],
    loss_i: f64,
    loss_j: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if parent_i.len() != parent_j.len() {
        return Err(Error::shape("crossover parents", parent_i.len(), parent_j.len()));
    }
    let p = inheritance_prob(loss_i, loss_j)?;
    Ok(parent_i
        .iter()
        .zip(parent_j)
        .map(|(&a, &b)| if rng.random::<f64>() < p { a } else { b })
        .collect())
}

/// Replaces each entry, with probability `mutation_prob`, by a uniform draw
/// from `[0, 1)`. Returns the number of mutated entries.
pub fn mutate<R: Rng + ?Sized>(
    chromosome: &mut [f64],
    mutation_prob: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&mutation_prob) {
        return Err(Error::invalid(format!(
            "mutation_prob must lie in [0, 1], got {mutation_prob}"
        )));
    }
    let mut count = 0;
    for gene in chromosome.iter_mut() {
        if rng.random::<f64>() < mutation_prob {
            *gene = rng.random::<f64>();
            count += 1;
        }
    }
    Ok(count)
}

fn collect_batch<'a>(pool: &'a SamplePool, indices: &[usize]) -> Result<Vec<&'a SubNetwork>> {
    indices
        .iter()
        .map(|&i| {
            pool.subnetworks
                .get(i)
                .ok_or_else(|| Error::invalid(format!("pool index {i} out of range")))
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..count).map(f).collect()
}

const STAGE_INIT: u64 = 0;
const STAGE_SELECT: u64 = 1;
const STAGE_BREED: u64 = 2;
const STAGE_TRAIN: u64 = 3;
const STAGE_BATCHES: u64 = 4;

/// Trains every model of generation 1 on its batch and scores it.
fn first_generation<U: UnitModel + Sync>(
    unit: &U,
    pool: &SamplePool,
    batches: &[Vec<usize>],
    validation: &[&SubNetwork],
    seed: u64,
) -> Result<Generation<U::Model>> {
    let trained = map_indexed(batches.len(), |k| {
        let mut r = rng::substream(seed, &[STAGE_INIT, k as u64]);
        let model = unit.init(&mut r);
        let batch = collect_batch(pool, &batches[k])?;
        let mut r = rng::substream(seed, &[STAGE_TRAIN, 1, k as u64]);
        let model = unit.train(&model, &batch, &mut r)?;
        let fit = unit.fitness(&model, validation)?;
        Ok((model, fit))
    })?;
    let (models, fitness) = trained.into_iter().unzip();
    Ok(Generation {
        index: 1,
        models,
        fitness,
    })
}

/// Breeds, trains and scores generation `gen.index + 1`. `batches` holds one
/// batch of pool indices per child.
pub fn evolve<U: UnitModel + Sync>(
    unit: &U,
    gen: &Generation<U::Model>,
    pool: &SamplePool,
    batches: &[Vec<usize>],
    validation: &[&SubNetwork],
    cfg: &EvolutionConfig,
    seed: u64,
) -> Result<Generation<U::Model>> {
    cfg.validate()?;
    if gen.models.len() != gen.fitness.len() || batches.len() != gen.models.len() {
        return Err(Error::shape("generation batches", gen.models.len(), batches.len()));
    }
    let next_index = gen.index + 1;
    let probs = selection_probs(&gen.fitness)?;
    let mut sel = rng::substream(seed, &[STAGE_SELECT, next_index as u64]);
    let pairs = select_parent_pairs(&probs, &mut sel)?;
    let chromosomes: Vec<Vec<f64>> = gen.models.iter().map(|m| unit.to_chromosome(m)).collect();

    let children = map_indexed(pairs.len(), |k| {
        let (i, j) = pairs[k];
        let mut r = rng::substream(seed, &[STAGE_BREED, next_index as u64, k as u64]);
        let mut child = crossover(
            &chromosomes[i],
            &chromosomes[j],
            gen.fitness[i],
            gen.fitness[j],
            &mut r,
        )?;
        mutate(&mut child, cfg.mutation_prob, &mut r)?;
        let model = unit.from_chromosome(&child)?;
        let batch = collect_batch(pool, &batches[k])?;
        let mut r = rng::substream(seed, &[STAGE_TRAIN, next_index as u64, k as u64]);
        let model = unit.train(&model, &batch, &mut r)?;
        let fit = unit.fitness(&model, validation)?;
        if !fit.is_finite() {
            return Err(Error::Numeric(format!("child {k} has non-finite fitness {fit}")));
        }
        Ok((model, fit))
    })?;
    let (models, fitness) = children.into_iter().unzip();
    Ok(Generation {
        index: next_index,
        models,
        fitness,
    })
}

/// Final generation of an evolution run and its per-generation trace.
#[derive(Debug, Clone)]
pub struct EvolutionRun<M> {
    pub last: Generation<M>,
    pub trace: Vec<TraceRow>,
}

/// Full evolution on one pool. The validation set is drawn once; training
/// batches are redrawn for every generation.
pub fn run_with<U: UnitModel + Sync>(
    unit: &U,
    pool: &SamplePool,
    cfg: &EvolutionConfig,
    seed: u64,
) -> Result<EvolutionRun<U::Model>> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::invalid("sample pool is empty"));
    }
    let mut r = rng::substream(seed, &[STAGE_BATCHES, 1]);
    let plan = sampler::plan_batches(
        pool,
        cfg.population,
        cfg.batch_size,
        cfg.validation_size,
        &mut r,
    )?;
    let validation = collect_batch(pool, &plan.validation)?;
    let mut gen = first_generation(unit, pool, &plan.batches, &validation, seed)?;
    check_finite(&gen.fitness)?;
    let mut trace = alloc::vec![TraceRow::of(&gen)];
    for t in 2..=cfg.generations {
        let mut r = rng::substream(seed, &[STAGE_BATCHES, t as u64]);
        let batches = sampler::draw_batches(pool.len(), cfg.population, cfg.batch_size, &mut r)?;
        gen = evolve(unit, &gen, pool, &batches, &validation, cfg, seed)?;
        trace.push(TraceRow::of(&gen));
    }
    Ok(EvolutionRun { last: gen, trace })
}

/// Evolves correlated autoencoders with layer widths `spec` on `pool`.
pub fn run<R: Rng + ?Sized>(
    pool: &SamplePool,
    evolution: &EvolutionConfig,
    train: &TrainConfig,
    spec: &LayerSpec,
    rng: &mut R,
) -> Result<EvolutionRun<AutoencoderParams>> {
    train.validate()?;
    if spec.input_dim() < pool.k {
        return Err(Error::shape("layer input width", pool.k, spec.input_dim()));
    }
    let unit = CorrelatedAutoencoder {
        spec: spec.clone(),
        train: *train,
    };
    run_with(&unit, pool, evolution, rng.next_u64())
}
