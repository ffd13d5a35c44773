//! Synthetic annotations from a known Plackett–Luce ground truth, and
//! brute-force reference computations for small class counts.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::pl_likelihood::PlParams;
use crate::rankings::{PartialRanking, DEFAULT_ENUMERATION_CAP};
use crate::sampling::rng_from_seed;

/// Largest class count the grid oracle accepts.
pub const GRID_MAX_CLASSES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    /// True plausibilities; non-negative, not necessarily normalized.
    pub lambda: Vec<f64>,
    pub annotators: usize,
    /// Sizes of the ranked blocks, in order. Remaining classes are unranked.
    pub block_sizes: Vec<usize>,
    /// Probability that an annotator ignores `lambda` and ranks uniformly.
    pub noise: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn num_classes(&self) -> usize {
        self.lambda.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_empty() {
            return Err(Error::EmptyClassSpace);
        }
        if let Some((index, &value)) = self
            .lambda
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        if self.lambda.iter().all(|v| *v == 0.0) {
            return Err(Error::AllZeroMass);
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::InvalidParameter(
                "block sizes must be positive".into(),
            ));
        }
        if self.block_sizes.iter().sum::<usize>() > self.num_classes() {
            return Err(Error::InvalidParameter(format!(
                "block sizes sum to more than {} classes",
                self.num_classes()
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::InvalidParameter("noise must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A full ranking drawn by an exponential race: class `k` arrives after an
/// `Exp(lambda_k)` wait. Zero-weight classes never arrive and go last by id.
pub fn sample_pl_ranking<R: Rng + ?Sized>(lambda: &[f64], rng: &mut R) -> Vec<usize> {
    let arrivals: Vec<f64> = lambda
        .iter()
        .map(|&l| {
            let e: f64 = Exp1.sample(rng);
            if l > 0.0 {
                e / l
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| arrivals[a].total_cmp(&arrivals[b]).then(a.cmp(&b)));
    order
}

/// Groups the head of `sigma` into blocks of the given sizes.
pub fn truncate_to_blocks(sigma: &[usize], block_sizes: &[usize]) -> Result<PartialRanking> {
    let mut blocks = Vec::with_capacity(block_sizes.len());
    let mut start = 0;
    for &size in block_sizes {
        blocks.push(sigma[start..start + size].to_vec());
        start += size;
    }
    PartialRanking::new(sigma.len(), blocks)
}

pub fn simulate_annotations(spec: &SimSpec) -> Result<Vec<PartialRanking>> {
    spec.validate()?;
    let uniform = vec![1.0; spec.num_classes()];
    let mut rng = rng_from_seed(spec.seed);
    (0..spec.annotators)
        .map(|_| {
            let noisy = spec.noise > 0.0 && rng.random::<f64>() < spec.noise;
            let lambda = if noisy { &uniform } else { &spec.lambda };
            truncate_to_blocks(&sample_pl_ranking(lambda, &mut rng), &spec.block_sizes)
        })
        .collect()
}

/// Probability of a ranked prefix: each entry is chosen from everything not
/// yet placed, and `unranked_mass` is the weight of classes never placed.
fn prefix_prob(lambda: &[f64], prefix: &[usize], unranked_mass: f64) -> f64 {
    let mut remaining = vec![0.0; prefix.len() + 1];
    remaining[prefix.len()] = unranked_mass;
    for i in (0..prefix.len()).rev() {
        remaining[i] = remaining[i + 1] + lambda[prefix[i]];
    }
    prefix
        .iter()
        .enumerate()
        .map(|(i, &c)| lambda[c] / remaining[i])
        .product()
}

/// `P(b | lambda)` by summing over every compatible ordering of the ranked
/// classes. A final block that exhausts the classes is absorbed, since its
/// internal orders sum to one.
pub fn brute_force_partial_prob(lambda: &PlParams, ranking: &PartialRanking) -> Result<f64> {
    brute_force_partial_prob_with_cap(lambda, ranking, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_partial_prob_with_cap(
    lambda: &PlParams,
    ranking: &PartialRanking,
    cap: u128,
) -> Result<f64> {
    if lambda.num_classes() != ranking.num_classes() {
        return Err(Error::ClassSpaceMismatch {
            expected: lambda.num_classes(),
            found: ranking.num_classes(),
        });
    }
    let reduced;
    let ranking = if ranking.unranked().is_empty() && !ranking.blocks().is_empty() {
        let blocks = ranking.blocks();
        reduced = PartialRanking::new(ranking.num_classes(), blocks[..blocks.len() - 1].to_vec())?;
        &reduced
    } else {
        ranking
    };
    let w = lambda.as_slice();
    let unranked_mass: f64 = ranking.unranked().iter().map(|&c| w[c]).sum();
    let mut total = 0.0;
    for prefix in ranking.ranked_prefixes(cap)? {
        total += prefix_prob(w, &prefix, unranked_mass);
    }
    Ok(total)
}

/// Posterior mean and variance of each normalized plausibility.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Posterior moments on a barycentric lattice over the simplex.
///
/// The prior is `Dirichlet(alpha)`, which is the law of normalized
/// `Gamma(alpha, beta)` weights. Each annotation counts `repetitions` times.
/// Nodes are cell midpoints (centroids for `K = 3`) with equal cell volumes.
pub fn grid_posterior_oracle(
    rankings: &[PartialRanking],
    num_classes: usize,
    alpha: f64,
    repetitions: u32,
    resolution: usize,
) -> Result<GridMoments> {
    if num_classes == 0 {
        return Err(Error::EmptyClassSpace);
    }
    if num_classes > GRID_MAX_CLASSES {
        return Err(Error::TooManyClasses {
            num_classes,
            max: GRID_MAX_CLASSES,
        });
    }
    if alpha.is_nan() || alpha <= 0.0 || resolution == 0 {
        return Err(Error::InvalidParameter(
            "grid oracle needs positive alpha and resolution".into(),
        ));
    }
    if let Some(r) = rankings.iter().find(|r| r.num_classes() != num_classes) {
        return Err(Error::ClassSpaceMismatch {
            expected: num_classes,
            found: r.num_classes(),
        });
    }
    let nodes = lattice(num_classes, resolution);
    let mut log_w = Vec::with_capacity(nodes.len());
    for node in &nodes {
        let params = PlParams::new(node.clone())?;
        let mut lw: f64 = node.iter().map(|v| (alpha - 1.0) * v.ln()).sum();
        for r in rankings {
            lw += f64::from(repetitions) * brute_force_partial_prob(&params, r)?.ln();
        }
        log_w.push(lw);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; num_classes];
    let mut second = vec![0.0; num_classes];
    for (node, w) in nodes.iter().zip(&weights) {
        for k in 0..num_classes {
            mean[k] += w * node[k] / total;
            second[k] += w * node[k] * node[k] / total;
        }
    }
    let variance = mean.iter().zip(&second).map(|(m, s)| s - m * m).collect();
    Ok(GridMoments { mean, variance })
}

fn lattice(num_classes: usize, n: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / n as f64;
    match num_classes {
        1 => vec![vec![1.0]],
        2 => (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                vec![x, 1.0 - x]
            })
            .collect(),
        _ => {
            let mut nodes = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n - i {
                    let (x, y) = ((i as f64 + 1.0 / 3.0) * h, (j as f64 + 1.0 / 3.0) * h);
                    nodes.push(vec![x, y, 1.0 - x - y]);
                    if i + j + 2 <= n {
                        let (x, y) = ((i as f64 + 2.0 / 3.0) * h, (j as f64 + 2.0 / 3.0) * h);
                        nodes.push(vec![x, y, 1.0 - x - y]);
                    }
                }
            }
            nodes
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(k: usize, blocks: &[&[usize]]) -> PartialRanking {
        PartialRanking::new(k, blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let u = PlParams::uniform(3).unwrap();
        let p = brute_force_partial_prob(&u, &ranking(3, &[&[0, 1], &[2]])).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        let p = brute_force_partial_prob(&u, &ranking(3, &[&[0, 1, 2]])).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        let lambda = PlParams::new(vec![0.5, 0.3, 0.2]).unwrap();
        let p = brute_force_partial_prob(&lambda, &ranking(3, &[&[2], &[0], &[1]])).unwrap();
        assert!((p - 0.2 * 0.5 / 0.8).abs() < 1e-15);
        assert_eq!(
            brute_force_partial_prob(&lambda, &ranking(3, &[])).unwrap(),
            1.0
        );
    }

    #[test]
    fn lattice_has_equal_cells() {
        assert_eq!(lattice(3, 4).len(), 16);
        for node in lattice(3, 5) {
            assert!(node.iter().all(|v| *v > 0.0));
            assert!((node.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_prior_mean() {
        let g = grid_posterior_oracle(&[], 3, 2.0, 1, 60).unwrap();
        for m in &g.mean {
            assert!((m - 1.0 / 3.0).abs() < 1e-9);
        }
        // Dirichlet(2, 2, 2) variance: 2 * 4 / (36 * 7).
        assert!((g.variance[0] - 8.0 / 252.0).abs() < 1e-3);
    }

    #[test]
    fn grid_symmetric_contradiction() {
        let rs = [ranking(2, &[&[0]]), ranking(2, &[&[1]])];
        let g = grid_posterior_oracle(&rs, 2, 1.0, 1, 400).unwrap();
        assert!((g.mean[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_two_class_closed_form() {
        // One {0} > {1} with a uniform prior: posterior density 2x, mean 2/3.
        let g = grid_posterior_oracle(&[ranking(2, &[&[0]])], 2, 1.0, 1, 1000).unwrap();
        assert!((g.mean[0] - 2.0 / 3.0).abs() < 1e-6);
        assert!(matches!(
            grid_posterior_oracle(&[], 4, 1.0, 1, 10),
            Err(Error::TooManyClasses {
                num_classes: 4,
                max: 3
            })
        ));
    }

    #[test]
    fn one_hot_simulation() {
        let spec = SimSpec {
            lambda: vec![0.0, 1.0, 0.0, 0.0],
            annotators: 50,
            block_sizes: vec![1, 2],
            noise: 0.0,
            seed: 3,
        };
        for r in simulate_annotations(&spec).unwrap() {
            assert_eq!(r.blocks()[0], vec![1]);
            assert_eq!(r.unranked().len(), 1);
        }
    }

    #[test]
    fn first_choice_frequencies() {
        let spec = SimSpec {
            lambda: vec![0.7, 0.2, 0.1],
            annotators: 20_000,
            block_sizes: vec![1],
            noise: 0.0,
            seed: 5,
        };
        let mut counts = [0usize; 3];
        for r in simulate_annotations(&spec).unwrap() {
            counts[r.blocks()[0][0]] += 1;
        }
        let n = spec.annotators as f64;
        for (c, p) in counts.iter().zip(&spec.lambda) {
            let se = (p * (1.0 - p) / n).sqrt();
            assert!((*c as f64 / n - p).abs() < 3.0 * se);
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = SimSpec {
            lambda: vec![0.5, 0.5],
            annotators: 1,
            block_sizes: vec![1, 2],
            noise: 0.0,
            seed: 0,
        };
        assert!(simulate_annotations(&spec).is_err());
        spec.block_sizes = vec![2];
        spec.noise = 1.5;
        assert!(simulate_annotations(&spec).is_err());
    }
}
