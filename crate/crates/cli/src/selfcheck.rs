//! Built-in oracle suites: exact likelihood against enumeration, the Gibbs
//! sampler against a grid posterior, metric reduction laws and simplex
//! normalization of every sampler.

use plausible_core::metrics::{
    ua_average_overlap, ua_set_accuracy, ua_topk_accuracy, PredictionSet,
};
use plausible_core::posterior::ranked_order;
use plausible_core::sampling::{rng_from_seed, SamplerRng};
use plausible_core::sim_oracle::{brute_force_partial_prob, grid_posterior_oracle};
use plausible_core::simple_models::{dirichlet_from_counts, LabelCounts};
use plausible_core::{
    gibbs_run, pl_partial_ranking_log_prob, prirn_sample, AggregationModel, GibbsConfig,
    PartialRanking, PlParams, PosteriorSamples,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Deliberate corruption used to prove that a suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Rescales every sample so it leaves the simplex.
    Normalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

pub fn run_selfcheck(fault: Option<Fault>) -> Vec<SuiteResult> {
    vec![
        likelihood_suite(),
        gibbs_suite(),
        reduction_suite(),
        normalization_suite(fault),
    ]
}

/// A random partial ranking with blocks of at most `max_block` classes.
pub fn random_ranking(rng: &mut SamplerRng, k: usize, max_block: usize) -> PartialRanking {
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut blocks = Vec::new();
    let mut start = 0;
    let num_blocks = rng.random_range(0..=k);
    for _ in 0..num_blocks {
        let size = rng.random_range(1..=max_block);
        if start + size > k {
            break;
        }
        blocks.push(order[start..start + size].to_vec());
        start += size;
    }
    PartialRanking::new(k, blocks).expect("blocks are disjoint and in range")
}

fn likelihood_suite() -> SuiteResult {
    let mut rng = rng_from_seed(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let k = if i % 4 == 0 {
            6
        } else {
            rng.random_range(2..=6)
        };
        let lambda: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..5.0)).collect();
        let params = PlParams::new(lambda).expect("positive weights");
        let ranking = random_ranking(&mut rng, k, 3);
        let dp = pl_partial_ranking_log_prob(&params, &ranking).map(f64::exp);
        let brute = brute_force_partial_prob(&params, &ranking);
        match (dp, brute) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs() / b),
            (a, b) => {
                return SuiteResult::new(
                    "likelihood-dp-vs-enumeration",
                    false,
                    format!("instance {i}: {a:?} / {b:?}"),
                )
            }
        }
    }
    SuiteResult::new(
        "likelihood-dp-vs-enumeration",
        worst <= 1e-10,
        format!("200 instances, max relative error {worst:.2e}"),
    )
}

fn gibbs_suite() -> SuiteResult {
    let cases = [
        vec![PartialRanking::new(2, vec![vec![0]]).unwrap()],
        vec![
            PartialRanking::new(3, vec![vec![0], vec![1]]).unwrap(),
            PartialRanking::new(3, vec![vec![1, 2]]).unwrap(),
        ],
    ];
    let mut worst: f64 = 0.0;
    for (i, rankings) in cases.iter().enumerate() {
        let k = rankings[0].num_classes();
        let config = GibbsConfig {
            seed: 100 + i as u64,
            ..GibbsConfig::default()
        }
        .with_retained(4000);
        let grid = grid_posterior_oracle(rankings, k, config.alpha, 1, 400);
        let samples = gibbs_run(rankings, &config);
        match (grid, samples) {
            (Ok(g), Ok(s)) => {
                for (a, b) in s.mean().iter().zip(&g.mean) {
                    worst = worst.max((a - b).abs());
                }
            }
            (g, s) => {
                return SuiteResult::new(
                    "gibbs-vs-grid",
                    false,
                    format!("case {i}: {:?} / {:?}", g.err(), s.err()),
                )
            }
        }
    }
    SuiteResult::new(
        "gibbs-vs-grid",
        worst < 0.02,
        format!("max mean deviation {worst:.4}"),
    )
}

fn reduction_suite() -> SuiteResult {
    let mut rng = rng_from_seed(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(2..=8);
        let lambda: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let total: f64 = lambda.iter().sum();
        let lambda: Vec<f64> = lambda.iter().map(|v| v / total).collect();
        let point = PosteriorSamples::point_mass(AggregationModel::Irn, &lambda).unwrap();
        let truth = ranked_order(&lambda);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rng);
        let prediction = PredictionSet::new("selfcheck", order.clone()).unwrap();
        for depth in 1..=k {
            let top: &[usize] = &order[..depth];
            let expected_topk = f64::from(u8::from(top.contains(&truth[0])));
            let mut a = top.to_vec();
            let mut b = truth[..depth].to_vec();
            a.sort_unstable();
            b.sort_unstable();
            let expected_set = f64::from(u8::from(a == b));
            let expected_ao = (1..=depth)
                .map(|d| {
                    order[..d].iter().filter(|c| truth[..d].contains(c)).count() as f64 / d as f64
                })
                .sum::<f64>()
                / depth as f64;
            let got = [
                ua_topk_accuracy(&point, &prediction, depth),
                ua_set_accuracy(&point, &prediction, depth),
                ua_average_overlap(&point, &prediction, depth),
            ];
            for (g, e) in got.iter().zip([expected_topk, expected_set, expected_ao]) {
                match g {
                    Ok(v) => worst = worst.max((v - e).abs()),
                    Err(err) => {
                        return SuiteResult::new("reduction-law", false, err.to_string());
                    }
                }
            }
        }
    }
    SuiteResult::new(
        "reduction-law",
        worst <= 1e-12,
        format!("100 point-mass cases, max deviation {worst:.2e}"),
    )
}

fn normalization_suite(fault: Option<Fault>) -> SuiteResult {
    let rankings = [
        PartialRanking::new(5, vec![vec![0], vec![1, 2]]).unwrap(),
        PartialRanking::new(5, vec![vec![2], vec![4]]).unwrap(),
    ];
    let config = GibbsConfig {
        seed: 9,
        ..GibbsConfig::default()
    }
    .with_retained(500);
    let counts = LabelCounts::from_first_blocks(&rankings, 5.0, 0.1);
    let drawn = [
        prirn_sample(&rankings, 20.0, 500, 9),
        gibbs_run(&rankings, &config),
        counts.and_then(|c| dirichlet_from_counts(&c, 500, 9)),
    ];
    let mut worst: f64 = 0.0;
    for samples in drawn {
        let mut samples = match samples {
            Ok(s) => s,
            Err(e) => return SuiteResult::new("normalization", false, e.to_string()),
        };
        if fault == Some(Fault::Normalization) {
            for row in samples.rows_mut() {
                row.iter_mut().for_each(|v| *v *= 1.01);
            }
        }
        worst = worst.max(samples.normalization_error());
    }
    SuiteResult::new(
        "normalization",
        worst <= plausible_core::posterior::SIMPLEX_TOLERANCE,
        format!("max deviation from the simplex {worst:.2e}"),
    )
}
