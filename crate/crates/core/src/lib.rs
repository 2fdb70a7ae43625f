//! Gradient descent for a single ReLU neuron with bias under agnostic
//! labels: exact Gaussian population oracles, Monte Carlo estimators for
//! general marginals, a GD driver with telemetry and best-iterate selection,
//! the random initializer, numerical lemma checks and an experiment CLI.

pub mod cli;
pub mod csv_out;
pub mod error;
pub mod gaussian;
pub mod gd;
pub mod init;
pub mod labels;
pub mod lemma_lab;
pub mod marginals;
pub mod neuron;
pub mod oracles;
pub mod quadrature;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use labels::{generate_dataset, opt_reference, Dataset, Instance, LabelModel, OptMode, OptReference};
pub use marginals::{Family, MarginalSpec};
pub use neuron::{relu, relu_prime, wv_distance, AugmentedSample, HypothesisSet, WeightVector};
pub use oracles::GaussOracle;
pub use gd::{run_gd, GDConfig, GradSource, Trajectory};
pub use init::{draw_init, InitSpec};
