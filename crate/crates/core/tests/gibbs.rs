use plausible_core::metrics::annotation_certainty_topj;
use plausible_core::pl_gibbs::{batch_means_standard_error, sample_compatible_order, GibbsSampler};
use plausible_core::sampling::rng_from_seed;
use plausible_core::sim_oracle::grid_posterior_oracle;
use plausible_core::{gibbs_run, GibbsConfig, PartialRanking, PlParams};

fn ranking(k: usize, blocks: &[&[usize]]) -> PartialRanking {
    PartialRanking::new(k, blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
}

fn config(seed: u64, retained: usize) -> GibbsConfig {
    GibbsConfig {
        seed,
        ..Default::default()
    }
    .with_retained(retained)
}

fn check_against_grid(rankings: &[PartialRanking], k: usize) {
    let grid =
        grid_posterior_oracle(rankings, k, 1.0, 1, if k == 2 { 10_000 } else { 300 }).unwrap();
    let s = gibbs_run(rankings, &config(11, 5000)).unwrap();
    for (m, g) in s.mean().iter().zip(&grid.mean) {
        assert!((m - g).abs() < 0.02, "gibbs {m} vs grid {g}");
    }
}

#[test]
fn matches_grid_two_classes() {
    check_against_grid(&[ranking(2, &[&[0]])], 2);
    check_against_grid(&[ranking(2, &[&[0]]), ranking(2, &[&[1]])], 2);
}

#[test]
fn matches_grid_three_classes() {
    check_against_grid(&[ranking(3, &[&[2], &[0]])], 3);
    check_against_grid(&[ranking(3, &[&[0, 1]]), ranking(3, &[&[1], &[2]])], 3);
    check_against_grid(&[ranking(3, &[&[0], &[1, 2]])], 3);
}

#[test]
fn repetitions_sharpen_the_grid_match() {
    let rs = [ranking(3, &[&[1]]), ranking(3, &[&[0], &[1]])];
    let grid = grid_posterior_oracle(&rs, 3, 1.0, 3, 300).unwrap();
    let s = gibbs_run(
        &rs,
        &GibbsConfig {
            repetitions: 3,
            ..config(5, 5000)
        },
    )
    .unwrap();
    for (m, g) in s.mean().iter().zip(&grid.mean) {
        assert!((m - g).abs() < 0.02, "gibbs {m} vs grid {g}");
    }
}

#[test]
fn independent_chains_agree() {
    let rs = [ranking(3, &[&[0], &[1]]), ranking(3, &[&[1, 2]])];
    let a = gibbs_run(&rs, &config(1, 5000)).unwrap();
    let b = gibbs_run(&rs, &config(2, 5000)).unwrap();
    for k in 0..3 {
        let xa: Vec<f64> = a.rows().map(|r| r[k]).collect();
        let xb: Vec<f64> = b.rows().map(|r| r[k]).collect();
        let se = batch_means_standard_error(&xa, 50).hypot(batch_means_standard_error(&xb, 50));
        let diff = (a.mean()[k] - b.mean()[k]).abs();
        assert!(diff < 3.0 * se, "class {k}: {diff} vs 3 * {se}");
    }
}

#[test]
fn prior_is_recovered_without_annotations() {
    let alpha = 2.0;
    let n = 20_000;
    let s = GibbsSampler::new(
        3,
        &[],
        GibbsConfig {
            alpha,
            ..config(3, n)
        },
    )
    .unwrap()
    .run()
    .unwrap();
    // Normalized Gamma(2) weights are Dirichlet(2, 2, 2).
    let a0 = 3.0 * alpha;
    let var = alpha * (a0 - alpha) / (a0 * a0 * (a0 + 1.0));
    for (m, v) in s.mean().iter().zip(s.variance()) {
        assert!((m - 1.0 / 3.0).abs() < 3.0 * (var / n as f64).sqrt());
        assert!((v - var).abs() / var < 0.05);
    }
}

#[test]
fn many_repetitions_give_certain_top1() {
    let r = PartialRanking::from_permutation(&[2, 0, 1]).unwrap();
    let s = gibbs_run(
        &[r],
        &GibbsConfig {
            repetitions: 50,
            ..config(4, 1000)
        },
    )
    .unwrap();
    assert!(annotation_certainty_topj(&s, 1).unwrap() > 0.95);
}

/// Exact `p(sigma | lambda, b)` by Bayes over the compatible orderings.
fn exact_order_probs(lambda: &[f64], r: &PartialRanking) -> Vec<(Vec<usize>, f64)> {
    let unranked: f64 = r.unranked().iter().map(|&c| lambda[c]).sum();
    let joint: Vec<(Vec<usize>, f64)> = r
        .ranked_prefixes(1000)
        .unwrap()
        .map(|p| {
            let mut prob = 1.0;
            for i in 0..p.len() {
                let rest: f64 = p[i..].iter().map(|&c| lambda[c]).sum::<f64>() + unranked;
                prob *= lambda[p[i]] / rest;
            }
            (p, prob)
        })
        .collect();
    let total: f64 = joint.iter().map(|(_, p)| p).sum();
    joint.into_iter().map(|(s, p)| (s, p / total)).collect()
}

fn chi_square(lambda: &[f64], r: &PartialRanking, draws: usize, seed: u64) -> (f64, usize) {
    let params = PlParams::new(lambda.to_vec()).unwrap();
    let exact = exact_order_probs(lambda, r);
    let mut counts = vec![0usize; exact.len()];
    let mut rng = rng_from_seed(seed);
    for _ in 0..draws {
        let sigma = sample_compatible_order(&params, r, 20, &mut rng).unwrap();
        let i = exact
            .iter()
            .position(|(s, _)| *s == sigma)
            .expect("compatible order");
        counts[i] += 1;
    }
    let stat = exact
        .iter()
        .zip(&counts)
        .map(|((_, p), &c)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    (stat, exact.len() - 1)
}

#[test]
fn sigma_matches_exact_conditional() {
    // 1% critical values of chi-square with 1, 3 and 5 degrees of freedom.
    let critical = |df: usize| match df {
        1 => 6.635,
        3 => 11.345,
        5 => 15.086,
        _ => unreachable!(),
    };
    let cases = [
        (vec![0.6, 0.15, 0.25], ranking(3, &[&[0, 1]])),
        (vec![0.1, 0.5, 0.3, 0.1], ranking(4, &[&[0, 1, 2], &[3]])),
        (vec![0.4, 0.1, 0.2, 0.3], ranking(4, &[&[1, 3], &[0, 2]])),
        (vec![0.05, 0.6, 0.1, 0.25], ranking(4, &[&[3], &[0, 1, 2]])),
    ];
    for (i, (lambda, r)) in cases.iter().enumerate() {
        let (stat, df) = chi_square(lambda, r, 100_000, 40 + i as u64);
        assert!(stat < critical(df), "case {i}: chi2 {stat} with {df} df");
    }
}
