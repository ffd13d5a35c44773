use std::path::PathBuf;

use plausible_core::pl_gibbs::GibbsConfig;
use plausible_core::pl_likelihood::DEFAULT_REPETITION_GRID;
use plausible_core::prirn::DEFAULT_GAMMA_GRID;
use plausible_core::{AggregationModel, Reliability};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Default concentration grid for the vote-count model.
pub const DEFAULT_COUNTS_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PLAUSIBLE_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSettings {
    pub alpha: f64,
    pub beta: f64,
    pub burn_in: usize,
    pub stride: usize,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        let d = GibbsConfig::default();
        Self {
            alpha: d.alpha,
            beta: d.beta,
            burn_in: d.burn_in,
            stride: d.stride,
        }
    }
}

/// Everything that determines the content of a run's reports.
///
/// Worker count and output directory are excluded from serialization since
/// they do not affect results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: AggregationModel,
    pub reliability_grid: Vec<f64>,
    pub num_samples: usize,
    pub gibbs: GibbsSettings,
    pub base_seed: u64,
    pub k_grid: Vec<usize>,
    pub certainty_depths: Vec<usize>,
    pub overlap_depth: usize,
    pub histogram_bins: usize,
    /// Symmetric pseudo-count of the vote-count model.
    pub counts_alpha: f64,
    /// Decision threshold of the score model.
    pub score_threshold: Option<f64>,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(model: AggregationModel) -> Self {
        Self {
            model,
            reliability_grid: default_grid(model),
            num_samples: 1000,
            gibbs: GibbsSettings::default(),
            base_seed: 0,
            k_grid: vec![1, 2, 3],
            certainty_depths: vec![1, 2, 3],
            overlap_depth: 3,
            histogram_bins: 20,
            counts_alpha: 0.1,
            score_threshold: None,
            workers: 1,
            out_dir: PathBuf::from("plausible-out"),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.uses_grid() && self.reliability_grid.is_empty() {
            return bad("reliability grid is empty");
        }
        if self.num_samples == 0 {
            return bad("number of samples must be at least 1");
        }
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return bad("k grid must be non-empty and positive");
        }
        if self.certainty_depths.is_empty() || self.certainty_depths.contains(&0) {
            return bad("certainty depths must be non-empty and positive");
        }
        if self.overlap_depth == 0 {
            return bad("overlap depth must be at least 1");
        }
        if self.histogram_bins == 0 {
            return bad("histogram needs at least one bin");
        }
        if self.workers == 0 {
            return bad("worker count must be at least 1");
        }
        if self.model == AggregationModel::GaussianScores
            && !self.score_threshold.is_some_and(f64::is_finite)
        {
            return bad("gaussian-scores needs a finite --threshold");
        }
        if !(self.counts_alpha >= 0.0 && self.counts_alpha.is_finite()) {
            return bad("counts alpha must be non-negative");
        }
        self.gibbs_config(1, 0)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.reliabilities().map(|_| ())
    }

    /// Whether the model has a reliability parameter to sweep.
    pub fn uses_grid(&self) -> bool {
        !matches!(
            self.model,
            AggregationModel::Irn | AggregationModel::GaussianScores
        )
    }

    /// The reliability settings to sweep, in grid order.
    pub fn reliabilities(&self) -> CliResult<Vec<Reliability>> {
        match self.model {
            AggregationModel::Irn | AggregationModel::GaussianScores => {
                Ok(vec![Reliability::Infinite])
            }
            AggregationModel::Prirn | AggregationModel::DirichletCounts => self
                .reliability_grid
                .iter()
                .map(|&g| {
                    if g > 0.0 && g.is_finite() {
                        Ok(Reliability::Gamma(g))
                    } else {
                        Err(CliError::Config(format!(
                            "reliability {g} must be positive"
                        )))
                    }
                })
                .collect(),
            AggregationModel::Pl => self
                .reliability_grid
                .iter()
                .map(|&r| {
                    if r >= 1.0 && r.fract() == 0.0 && r <= f64::from(u32::MAX) {
                        Ok(Reliability::Repetitions(r as u32))
                    } else {
                        Err(CliError::Config(format!(
                            "repetitions {r} must be a positive integer"
                        )))
                    }
                })
                .collect(),
        }
    }

    pub fn gibbs_config(&self, repetitions: u32, seed: u64) -> GibbsConfig {
        GibbsConfig {
            alpha: self.gibbs.alpha,
            beta: self.gibbs.beta,
            burn_in: self.gibbs.burn_in,
            stride: self.gibbs.stride,
            repetitions,
            seed,
            ..GibbsConfig::default()
        }
        .with_retained(self.num_samples)
    }
}

pub fn default_grid(model: AggregationModel) -> Vec<f64> {
    match model {
        AggregationModel::Prirn => DEFAULT_GAMMA_GRID.to_vec(),
        AggregationModel::Pl => DEFAULT_REPETITION_GRID
            .iter()
            .map(|&r| f64::from(r))
            .collect(),
        AggregationModel::DirichletCounts => DEFAULT_COUNTS_GRID.to_vec(),
        AggregationModel::Irn | AggregationModel::GaussianScores => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for model in [
            AggregationModel::Irn,
            AggregationModel::Prirn,
            AggregationModel::Pl,
            AggregationModel::DirichletCounts,
        ] {
            RunConfig::new(model).validate().unwrap();
        }
        assert_eq!(
            RunConfig::new(AggregationModel::Pl)
                .reliabilities()
                .unwrap(),
            [1, 2, 3, 5, 10].map(Reliability::Repetitions).to_vec()
        );
    }

    #[test]
    fn rejects_bad_grids() {
        let mut c = RunConfig::new(AggregationModel::Prirn);
        c.reliability_grid.clear();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let mut c = RunConfig::new(AggregationModel::Pl);
        c.reliability_grid = vec![1.5];
        assert!(c.validate().is_err());
        assert!(RunConfig::new(AggregationModel::GaussianScores)
            .validate()
            .is_err());
        let mut c = RunConfig::new(AggregationModel::Irn);
        c.num_samples = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn gibbs_retains_requested_samples() {
        let c = RunConfig::new(AggregationModel::Pl);
        assert_eq!(c.gibbs_config(2, 7).retained(), 1000);
    }
}
