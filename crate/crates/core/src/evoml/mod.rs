//! Machine-learning layer: k-means clustering, genetic programming for
//! classification and regression, metrics and counterfactual simulation.

mod counterfactual;
mod gp;
mod kmeans;
mod metrics;
mod tree;

pub use counterfactual::{simulate_counterfactual, CounterfactualRow, CounterfactualSummary};
pub use gp::{gp_evolve, gp_init_population, GpConfig, GpIndividual, GpRun, Task};
pub use kmeans::{kmeans_cluster, standardize, KMeansResult, MAX_ITERATIONS};
pub use metrics::{classification_metrics, mean_absolute_error, ClassMetrics};
pub use tree::{Node, Tree};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvomlError {
    #[error("k = {k} exceeds the {n} points")]
    DegenerateK { k: usize, n: usize },
    #[error("invalid GP configuration: {0}")]
    InvalidConfig(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("row {row} has {got} features, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },
    #[error("{0}")]
    Parse(String),
}

/// Random train/test partition with ceil(frac * n) training rows.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((train_fraction * n as f64).ceil() as usize).min(n);
    let test = idx.split_off(n_train);
    (idx, test)
}
