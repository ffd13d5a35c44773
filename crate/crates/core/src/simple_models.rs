//! Aggregation models for annotations that are not rankings: categorical vote
//! counts and real-valued scores compared against a threshold.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::posterior::{AggregationModel, PosteriorSamples, Reliability};
use crate::rankings::PartialRanking;
use crate::sampling::{rng_from_seed, sample_dirichlet, sample_gamma};

/// Vote counts per class with a reliability and a symmetric pseudo-count.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCounts {
    pub counts: Vec<u64>,
    pub gamma: f64,
    pub alpha_prior: f64,
}

impl LabelCounts {
    pub fn new(counts: Vec<u64>, gamma: f64, alpha_prior: f64) -> Result<Self> {
        let c = Self {
            counts,
            gamma,
            alpha_prior,
        };
        c.validate()?;
        Ok(c)
    }

    /// Counts each class once per annotator whose first block contains it.
    pub fn from_first_blocks(
        rankings: &[PartialRanking],
        gamma: f64,
        alpha_prior: f64,
    ) -> Result<Self> {
        let k = crate::irn::shared_num_classes(rankings)?;
        let mut counts = vec![0u64; k];
        for r in rankings {
            if let Some(first) = r.blocks().first() {
                for &c in first {
                    counts[c] += 1;
                }
            }
        }
        Self::new(counts, gamma, alpha_prior)
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.is_empty() {
            return Err(Error::EmptyClassSpace);
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        if !(self.alpha_prior >= 0.0 && self.alpha_prior.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be non-negative".into()));
        }
        if self.alpha_prior == 0.0 && self.counts.iter().all(|&c| c == 0) {
            return Err(Error::AllZeroMass);
        }
        Ok(())
    }

    pub fn concentration(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&s| self.gamma * s as f64 + self.alpha_prior)
            .collect()
    }
}

/// Draws from `Dirichlet(gamma * s + alpha)`.
pub fn dirichlet_from_counts(
    counts: &LabelCounts,
    num_samples: usize,
    seed: u64,
) -> Result<PosteriorSamples> {
    counts.validate()?;
    let concentration = counts.concentration();
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(num_samples * concentration.len());
    for _ in 0..num_samples {
        data.extend(sample_dirichlet(&concentration, &mut rng)?);
    }
    PosteriorSamples::new(
        AggregationModel::DirichletCounts,
        Reliability::Gamma(counts.gamma),
        seed,
        concentration.len(),
        data,
    )
}

/// Normal-inverse-gamma prior on the mean and variance of annotator scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigPrior {
    pub mu0: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
}

impl NigPrior {
    /// Moment-matched defaults: centred on the sample mean with one pseudo
    /// observation and a scale set by the sample variance.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        let (mean, var) = mean_and_variance(scores)?;
        Ok(Self {
            mu0: mean,
            nu: 1.0,
            a: 2.0,
            b: var.max(1e-3),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu0.is_finite()
            && [self.nu, self.a, self.b]
                .iter()
                .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "prior needs finite mu0 and positive nu, a, b".into(),
            ))
        }
    }

    /// Conjugate update given observed scores.
    pub fn posterior(&self, scores: &[f64]) -> Result<NigPrior> {
        let (mean, var) = mean_and_variance(scores)?;
        let n = scores.len() as f64;
        let nu_n = self.nu + n;
        let ss = var * (n - 1.0);
        Ok(NigPrior {
            mu0: (self.nu * self.mu0 + n * mean) / nu_n,
            nu: nu_n,
            a: self.a + n / 2.0,
            b: self.b + 0.5 * ss + n * self.nu * (mean - self.mu0).powi(2) / (2.0 * nu_n),
        })
    }

    /// One `(mu, sigma^2)` draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let var = 1.0 / sample_gamma(self.a, self.b, rng);
        let z: f64 = StandardNormal.sample(rng);
        (self.mu0 + (var / self.nu).sqrt() * z, var)
    }
}

fn mean_and_variance(scores: &[f64]) -> Result<(f64, f64)> {
    if scores.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one score is required".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("scores must be finite".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = if scores.len() > 1 {
        scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, var))
}

/// How per-draw outcome probabilities become a certainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CertaintyMode {
    /// Fraction of draws on the modal side of the threshold.
    #[default]
    WinningSide,
    /// `max(p, 1 - p)` for the posterior mean `p` of `P(y <= t)`.
    MeanProbability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    pub prior: NigPrior,
    pub threshold: f64,
    pub mode: CertaintyMode,
}

impl ScoreModel {
    /// Prior fitted to the scores, default certainty mode.
    pub fn method_of_moments(scores: &[f64], threshold: f64) -> Result<Self> {
        Ok(Self {
            prior: NigPrior::from_scores(scores)?,
            threshold,
            mode: CertaintyMode::default(),
        })
    }
}

/// Posterior samples of the two outcome probabilities `(P(y <= t), P(y > t))`.
pub fn score_outcome_samples(
    scores: &[f64],
    model: &ScoreModel,
    num_samples: usize,
    seed: u64,
) -> Result<PosteriorSamples> {
    model.prior.validate()?;
    if !model.threshold.is_finite() {
        return Err(Error::InvalidParameter("threshold must be finite".into()));
    }
    let post = model.prior.posterior(scores)?;
    let unit = Normal::standard();
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(2 * num_samples);
    for _ in 0..num_samples {
        let (mu, var) = post.sample(&mut rng);
        let below = unit.cdf((model.threshold - mu) / var.sqrt());
        data.extend([below, 1.0 - below]);
    }
    PosteriorSamples::new(
        AggregationModel::GaussianScores,
        Reliability::Infinite,
        seed,
        2,
        data,
    )
}

/// Certainty that the aggregated score falls on one side of the threshold.
pub fn score_threshold_certainty(
    scores: &[f64],
    model: &ScoreModel,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    if num_samples == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let samples = score_outcome_samples(scores, model, num_samples, seed)?;
    let m = num_samples as f64;
    let p = match model.mode {
        CertaintyMode::WinningSide => samples.rows().filter(|r| r[0] >= r[1]).count() as f64 / m,
        CertaintyMode::MeanProbability => samples.rows().map(|r| r[0]).sum::<f64>() / m,
    };
    Ok(p.max(1.0 - p))
}
