//! Plausibility aggregation for partially ranked differential diagnoses.
//!
//! Annotators rank candidate classes with ties and may leave classes
//! unranked. This crate turns such annotations into posterior samples of a
//! plausibility vector on the simplex and evaluates classifiers against them.

pub mod error;
pub mod irn;
pub mod metrics;
pub mod pl_gibbs;
pub mod pl_likelihood;
pub mod posterior;
pub mod prirn;
pub mod rankings;
pub mod sampling;
pub mod sim_oracle;
pub mod simple_models;

pub use error::{Error, Result};
pub use irn::{irn_aggregate, irn_single, top1_label, IrnScores};
pub use pl_gibbs::{gibbs_run, GibbsConfig, GibbsSampler};
pub use pl_likelihood::{pl_partial_ranking_log_prob, PlParams};
pub use posterior::{argmax, top_set, AggregationModel, PosteriorSamples, Provenance, Reliability};
pub use prirn::{prirn_sample, PrIrnModel};
pub use rankings::{ClassSpace, PartialRanking, RiskLevel};
pub use sampling::derive_case_seed;
