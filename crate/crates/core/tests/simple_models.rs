use plausible_core::metrics::annotation_certainty_topj;
use plausible_core::simple_models::{
    dirichlet_from_counts, score_threshold_certainty, CertaintyMode, LabelCounts, NigPrior,
    ScoreModel,
};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

/// Posterior probability that the mean lies below `t` and the posterior mean
/// of `P(y <= t)`, by integrating prior times likelihood on a
/// `(mu, log sigma^2)` grid.
fn grid_oracle(scores: &[f64], prior: NigPrior, t: f64) -> (f64, f64) {
    let n_mu = 1200;
    let n_v = 600;
    let (mu_lo, mu_hi) = (prior.mu0 - 12.0, prior.mu0 + 12.0);
    let (lv_lo, lv_hi) = (-9.0f64, 7.0f64);
    let dmu = (mu_hi - mu_lo) / n_mu as f64;
    let dlv = (lv_hi - lv_lo) / n_v as f64;
    let mut log_w = Vec::with_capacity(n_mu * n_v);
    let mut nodes = Vec::with_capacity(n_mu * n_v);
    for i in 0..n_v {
        let lv = lv_lo + (i as f64 + 0.5) * dlv;
        let v = lv.exp();
        // Inverse-gamma density in log-variance coordinates carries a factor v.
        let log_prior_v = -prior.a * lv - prior.b / v;
        for j in 0..n_mu {
            let mu = mu_lo + (j as f64 + 0.5) * dmu;
            let prior_mu = -0.5 * lv - prior.nu * (mu - prior.mu0).powi(2) / (2.0 * v);
            let lik: f64 = scores
                .iter()
                .map(|x| -0.5 * lv - (x - mu).powi(2) / (2.0 * v))
                .sum();
            log_w.push(log_prior_v + prior_mu + lik);
            nodes.push((mu, v));
        }
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unit = Normal::standard();
    let (mut total, mut below, mut prob) = (0.0, 0.0, 0.0);
    for (lw, (mu, v)) in log_w.iter().zip(&nodes) {
        let w = (lw - max).exp();
        total += w;
        if *mu <= t {
            below += w;
        }
        prob += w * unit.cdf((t - mu) / v.sqrt());
    }
    (below / total, prob / total)
}

#[test]
fn certainty_matches_grid_oracle() {
    let scores = [-2.0, -2.0, -1.0, 0.0, 1.0];
    let model = ScoreModel::method_of_moments(&scores, 0.0).unwrap();
    let (below, prob) = grid_oracle(&scores, model.prior, 0.0);
    let winning = score_threshold_certainty(&scores, &model, 40_000, 1).unwrap();
    assert!(
        (winning - below.max(1.0 - below)).abs() < 0.01,
        "{winning} vs {below}"
    );
    let mean_mode = ScoreModel {
        mode: CertaintyMode::MeanProbability,
        ..model
    };
    let averaged = score_threshold_certainty(&scores, &mean_mode, 40_000, 1).unwrap();
    assert!(
        (averaged - prob.max(1.0 - prob)).abs() < 0.01,
        "{averaged} vs {prob}"
    );
}

#[test]
fn certainty_matches_grid_with_explicit_prior() {
    let scores = [0.3, 0.9, 1.4];
    let model = ScoreModel {
        prior: NigPrior {
            mu0: 0.0,
            nu: 2.0,
            a: 3.0,
            b: 1.5,
        },
        threshold: 0.5,
        mode: CertaintyMode::WinningSide,
    };
    let (below, _) = grid_oracle(&scores, model.prior, 0.5);
    let c = score_threshold_certainty(&scores, &model, 40_000, 2).unwrap();
    assert!((c - below.max(1.0 - below)).abs() < 0.01, "{c} vs {below}");
}

#[test]
fn wide_symmetric_scores_approach_half() {
    for spread in [1.0, 10.0, 100.0] {
        let scores = [-spread, -spread / 2.0, spread / 2.0, spread];
        let model = ScoreModel {
            mode: CertaintyMode::MeanProbability,
            ..ScoreModel::method_of_moments(&scores, 0.0).unwrap()
        };
        let c = score_threshold_certainty(&scores, &model, 5000, 3).unwrap();
        assert!((c - 0.5).abs() < 0.02);
    }
}

#[test]
fn concentrated_counts_are_certain() {
    let mut counts = vec![0; 10];
    counts[0] = 50;
    let c = LabelCounts::new(counts, 1.0, 0.01).unwrap();
    let s = dirichlet_from_counts(&c, 2000, 4).unwrap();
    assert!(annotation_certainty_topj(&s, 1).unwrap() > 0.999);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn certainty_is_shift_invariant(
        scores in prop::collection::vec(-5.0f64..5.0, 1..8),
        t in -3.0f64..3.0,
        shift in -100.0f64..100.0,
    ) {
        let model = ScoreModel::method_of_moments(&scores, t).unwrap();
        let shifted_scores: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let shifted = ScoreModel::method_of_moments(&shifted_scores, t + shift).unwrap();
        prop_assert!((shifted.prior.mu0 - model.prior.mu0 - shift).abs() < 1e-9);
        let a = score_threshold_certainty(&scores, &model, 500, 9).unwrap();
        let b = score_threshold_certainty(&shifted_scores, &shifted, 500, 9).unwrap();
        // Identical draws up to rounding; at most a draw sitting on the threshold can flip.
        prop_assert!((a - b).abs() <= 2.0 / 500.0);
    }

    #[test]
    fn counts_are_permutation_equivariant(
        counts in prop::collection::vec(0u64..20, 2..6),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let k = counts.len();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let mut moved = vec![0; k];
        for c in 0..k {
            moved[perm[c]] = counts[c];
        }
        let a = LabelCounts::new(counts, 2.0, 0.5).unwrap();
        let b = LabelCounts::new(moved, 2.0, 0.5).unwrap();
        let (ca, cb) = (a.concentration(), b.concentration());
        for c in 0..k {
            prop_assert_eq!(ca[c], cb[perm[c]]);
        }
        let ma = dirichlet_from_counts(&a, 4000, 1).unwrap().mean();
        let mb = dirichlet_from_counts(&b, 4000, 2).unwrap().mean();
        let a0: f64 = ca.iter().sum();
        for c in 0..k {
            let p = ca[c] / a0;
            let se = (p * (1.0 - p) / (a0 + 1.0) / 4000.0).sqrt();
            prop_assert!((ma[c] - mb[perm[c]]).abs() < 5.0 * se * std::f64::consts::SQRT_2 + 1e-12);
        }
    }
}
