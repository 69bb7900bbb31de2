//! Structural models used as ground truth and experiment generators.

mod discrete;
mod experiment;
mod linear;
mod random;
mod witness;

use thiserror::Error;

pub use discrete::{dag_for_admg, DiscreteSem, MAX_STATES};
pub use experiment::{
    diagnosis_graph, run_experiment, AMechanism, ExperimentConfig, ExperimentError, ExperimentResult, Method,
    Replicate, ResultRow, Scenario,
};
pub use linear::{EnvironmentFamily, Handle, LinearEquation, LinearGaussianSem};
pub use random::{random_admg, CorpusConfig};
pub use witness::{bow_witness, instrument_witness, WitnessPair};

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("joint state space exceeds {MAX_STATES} states")]
    StateSpaceTooLarge,
    #[error("selection vertices are not random variables of a model")]
    SelectionInModel,
    #[error("table for `{0}` has the wrong shape or does not sum to one")]
    BadTable(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
