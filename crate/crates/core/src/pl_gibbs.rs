//! Gibbs sampler for the Plackett–Luce posterior given partial rankings.
//!
//! The augmented model draws `lambda_k ~ Gamma(alpha, beta)` and, per
//! annotation, arrival times `tau_k ~ Exp(lambda_k)` whose sort order is the
//! ranking. One sweep resamples, in turn:
//!
//! 1. the within-block orders `sigma` given `lambda` (a path through the
//!    subset-recursion trellis of each block),
//! 2. the arrival times `tau` given `lambda` and `sigma` (an exponential race),
//! 3. `lambda_k ~ Gamma(alpha + n_k, beta + sum_r tau^r_k)`.
//!
//! Only ranked positions are observed. A class in the unranked block is known
//! to arrive after the last ranked class, so its arrival time is censored at
//! that moment and contributes to the rate but not to `n_k`.
//!
//! Reliability is expressed by repeating every annotation, each copy carrying
//! its own latent `sigma` and `tau`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::irn::shared_num_classes;
use crate::pl_likelihood::{subset_recursion, PlParams, DEFAULT_BLOCK_CAP};
use crate::posterior::{AggregationModel, PosteriorSamples, Reliability};
use crate::rankings::PartialRanking;
use crate::sampling::{rng_from_seed, sample_gamma, SamplerRng};

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    /// Gamma prior shape.
    pub alpha: f64,
    /// Gamma prior rate.
    pub beta: f64,
    /// Total sweeps `T`.
    pub iterations: usize,
    /// Sweeps discarded before retaining samples.
    pub burn_in: usize,
    /// Keep every `stride`-th sweep after burn-in.
    pub stride: usize,
    /// Copies of each annotation.
    pub repetitions: u32,
    pub seed: u64,
    pub block_cap: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            iterations: 2000,
            burn_in: 500,
            stride: 1,
            repetitions: 1,
            seed: 0,
            block_cap: DEFAULT_BLOCK_CAP,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.burn_in >= self.iterations {
            return bad("burn-in must be smaller than the number of iterations");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        Ok(())
    }

    /// Number of samples a run retains.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.stride)
    }

    /// Iterations needed to retain `num_samples` with the current burn-in and stride.
    pub fn with_retained(mut self, num_samples: usize) -> Self {
        self.iterations = self.burn_in + num_samples * self.stride;
        self
    }
}

/// Latent full ranking and arrival times of one (possibly repeated) annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRanking {
    pub ranking: PartialRanking,
    /// Full permutation: ranked prefix in sampled order, then unranked classes by id.
    pub sigma: Vec<usize>,
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub lambda: Vec<f64>,
    pub latents: Vec<LatentRanking>,
}

impl GibbsState {
    fn new<R: Rng + ?Sized>(
        num_classes: usize,
        rankings: &[PartialRanking],
        config: &GibbsConfig,
        rng: &mut R,
    ) -> Self {
        let lambda = (0..num_classes)
            .map(|_| sample_gamma(config.alpha, config.beta, rng).max(f64::MIN_POSITIVE))
            .collect();
        let latents = (0..config.repetitions)
            .flat_map(|_| rankings.iter())
            .map(|r| LatentRanking {
                ranking: r.clone(),
                sigma: r
                    .ranked_classes()
                    .chain(r.unranked().iter().copied())
                    .collect(),
                tau: vec![0.0; num_classes],
            })
            .collect();
        Self { lambda, latents }
    }

    pub fn num_classes(&self) -> usize {
        self.lambda.len()
    }

    /// Number of effective annotations that rank each class.
    pub fn ranked_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_classes()];
        for latent in &self.latents {
            for c in latent.ranking.ranked_classes() {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Draws `lambda | tau` from the conjugate Gamma update.
pub fn sample_lambda_given_tau<R: Rng + ?Sized>(
    state: &GibbsState,
    config: &GibbsConfig,
    rng: &mut R,
) -> Vec<f64> {
    let counts = state.ranked_counts();
    let mut rates = vec![config.beta; state.num_classes()];
    for latent in &state.latents {
        for (rate, t) in rates.iter_mut().zip(&latent.tau) {
            *rate += t;
        }
    }
    counts
        .iter()
        .zip(&rates)
        .map(|(&n, &rate)| sample_gamma(config.alpha + n as f64, rate, rng).max(f64::MIN_POSITIVE))
        .collect()
}

/// Draws arrival times for one latent ranking given `lambda` and its `sigma`.
///
/// Interarrival `i` is exponential with the total weight of everything not
/// yet arrived. Unranked classes share the censoring time of the last ranked
/// arrival (zero if nothing is ranked).
pub fn sample_tau<R: Rng + ?Sized>(
    lambda: &[f64],
    sigma: &[usize],
    num_ranked: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut suffix = vec![0.0; sigma.len() + 1];
    for i in (0..sigma.len()).rev() {
        suffix[i] = suffix[i + 1] + lambda[sigma[i]];
    }
    let mut tau = vec![0.0; lambda.len()];
    let mut t = 0.0;
    for i in 0..num_ranked {
        let e: f64 = Exp1.sample(rng);
        t += e / suffix[i];
        tau[sigma[i]] = t;
    }
    for &c in &sigma[num_ranked..] {
        tau[c] = t;
    }
    tau
}

/// Draws `tau | lambda, sigma` for every annotation.
pub fn sample_tau_given_lambda_sigma<R: Rng + ?Sized>(
    state: &GibbsState,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    state
        .latents
        .iter()
        .map(|l| sample_tau(&state.lambda, &l.sigma, l.ranking.num_ranked(), rng))
        .collect()
}

/// Draws an order of the ranked classes compatible with `ranking`, from the
/// Plackett–Luce distribution conditioned on the blocks.
pub fn sample_compatible_order<R: Rng + ?Sized>(
    lambda: &PlParams,
    ranking: &PartialRanking,
    cap: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let w = lambda.as_slice();
    let mut after: f64 = ranking.unranked().iter().map(|&c| w[c]).sum();
    let mut reversed_blocks = Vec::with_capacity(ranking.blocks().len());
    for block in ranking.blocks().iter().rev() {
        let table = subset_recursion(block, after, lambda, cap)?;
        let mut order = Vec::with_capacity(block.len());
        let mut mask = table.full_mask();
        let mut weights = Vec::with_capacity(block.len());
        while mask != 0 {
            weights.clear();
            let mut rest = mask;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                weights.push((bit, table.scaled(mask ^ bit)));
                rest ^= bit;
            }
            let bit = draw_weighted(&weights, rng);
            order.push(block[bit.trailing_zeros() as usize]);
            mask ^= bit;
        }
        after += block.iter().map(|&c| w[c]).sum::<f64>();
        reversed_blocks.push(order);
    }
    Ok(reversed_blocks.into_iter().rev().flatten().collect())
}

fn draw_weighted<R: Rng + ?Sized>(weights: &[(usize, f64)], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for &(item, w) in weights {
        if u < w {
            return item;
        }
        u -= w;
    }
    weights.last().expect("non-empty weights").0
}

/// Draws `sigma | lambda, b` for every annotation.
pub fn sample_sigma_given_lambda_b<R: Rng + ?Sized>(
    state: &GibbsState,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let lambda = PlParams::new(state.lambda.clone())?;
    state
        .latents
        .iter()
        .map(|l| {
            let mut sigma = sample_compatible_order(&lambda, &l.ranking, config.block_cap, rng)?;
            sigma.extend_from_slice(l.ranking.unranked());
            Ok(sigma)
        })
        .collect()
}

/// A single chain: owns its state and random generator.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    config: GibbsConfig,
    state: GibbsState,
    rng: SamplerRng,
}

impl GibbsSampler {
    /// Starts a chain with `lambda` drawn from the prior. `rankings` may be
    /// empty, in which case the chain samples the prior.
    pub fn new(
        num_classes: usize,
        rankings: &[PartialRanking],
        config: GibbsConfig,
    ) -> Result<Self> {
        config.validate()?;
        if num_classes == 0 {
            return Err(Error::EmptyClassSpace);
        }
        for r in rankings {
            if r.num_classes() != num_classes {
                return Err(Error::ClassSpaceMismatch {
                    expected: num_classes,
                    found: r.num_classes(),
                });
            }
            if let Some(block) = r.blocks().iter().find(|b| b.len() > config.block_cap) {
                return Err(Error::BlockTooLarge {
                    size: block.len(),
                    cap: config.block_cap,
                });
            }
        }
        let mut rng = rng_from_seed(config.seed);
        let state = GibbsState::new(num_classes, rankings, &config, &mut rng);
        Ok(Self { config, state, rng })
    }

    pub fn state(&self) -> &GibbsState {
        &self.state
    }

    pub fn config(&self) -> &GibbsConfig {
        &self.config
    }

    /// One sweep: sigma, then tau, then lambda.
    pub fn sweep(&mut self) -> Result<()> {
        let sigmas = sample_sigma_given_lambda_b(&self.state, &self.config, &mut self.rng)?;
        for (latent, sigma) in self.state.latents.iter_mut().zip(sigmas) {
            latent.sigma = sigma;
        }
        let taus = sample_tau_given_lambda_sigma(&self.state, &mut self.rng);
        for (latent, tau) in self.state.latents.iter_mut().zip(taus) {
            latent.tau = tau;
        }
        self.state.lambda = sample_lambda_given_tau(&self.state, &self.config, &mut self.rng);
        Ok(())
    }

    /// Runs all sweeps and returns the retained, normalized samples.
    pub fn run(mut self) -> Result<PosteriorSamples> {
        let k = self.state.num_classes();
        let mut data = Vec::with_capacity(self.config.retained() * k);
        for t in 1..=self.config.iterations {
            self.sweep()?;
            if t > self.config.burn_in
                && (t - self.config.burn_in - 1).is_multiple_of(self.config.stride)
            {
                let total: f64 = self.state.lambda.iter().sum();
                data.extend(self.state.lambda.iter().map(|v| v / total));
            }
        }
        PosteriorSamples::new(
            AggregationModel::Pl,
            Reliability::Repetitions(self.config.repetitions),
            self.config.seed,
            k,
            data,
        )
    }
}

/// Posterior plausibility samples for one case under the Plackett–Luce model.
pub fn gibbs_run(rankings: &[PartialRanking], config: &GibbsConfig) -> Result<PosteriorSamples> {
    let k = shared_num_classes(rankings)?;
    GibbsSampler::new(k, rankings, config.clone())?.run()
}

/// Batch-means standard error of the mean of an autocorrelated series.
pub fn batch_means_standard_error(series: &[f64], batches: usize) -> f64 {
    let batches = batches.max(2).min(series.len());
    let size = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}
