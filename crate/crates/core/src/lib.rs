//! Sample-ensemble genetic evolutionary network embedding.
//!
//! The pipeline has three stages:
//!
//! 1. [`sampler`] draws pools of small induced sub-networks from a large
//!    undirected graph with five strategies (BFS, DFS, hybrid search,
//!    degree-biased node sampling and degree-biased edge sampling).
//! 2. [`evolution`] trains a population of shallow [`autoencoder`] unit
//!    models on batches from each pool and breeds new generations through
//!    fitness-weighted selection, uniform crossover and mutation.
//! 3. [`ensemble`] fuses the last generation's node codes into one vector
//!    per node, fills never-sampled nodes from their neighbours, and averages
//!    the tables produced by the individual strategies.
//!
//! [`eval`] scores the resulting embeddings on network recovery (AUC,
//! precision@k) and community detection (k-means, density, silhouette).
//!
//! The crate is `no_std` with `alloc`. The `parallel` feature (on by default)
//! pulls in `std` and trains the models of one generation on a rayon pool;
//! results are bit-identical with and without it.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod autoencoder;
pub mod ensemble;
mod error;
pub mod eval;
pub mod evolution;
pub mod graph;
mod math;
pub mod rng;
pub mod sampler;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Graph, SubNetwork};
