//! Acceptance criteria. Run with
//! `cargo test -p plausible-cli --test acceptance -- --nocapture --test-threads=1`
//! to see one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use plausible_cli::ingest::ingest;
use plausible_core::metrics::{
    annotation_certainty_topj, mean_average_overlap_partial, ua_average_overlap, ua_set_accuracy,
    ua_topk_accuracy, PredictionSet,
};
use plausible_core::pl_gibbs::batch_means_standard_error;
use plausible_core::pl_likelihood::DEFAULT_REPETITION_GRID;
use plausible_core::prirn::DEFAULT_GAMMA_GRID;
use plausible_core::sampling::{rng_from_seed, sample_dirichlet, SamplerRng};
use plausible_core::sim_oracle::{
    brute_force_partial_prob, grid_posterior_oracle, simulate_annotations, SimSpec,
};
use plausible_core::{
    derive_case_seed, gibbs_run, irn_aggregate, pl_partial_ranking_log_prob, prirn_sample,
    AggregationModel, GibbsConfig, GibbsSampler, PartialRanking, PlParams, PosteriorSamples,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} {name}: {status} ({detail})");
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn random_lambda(rng: &mut SamplerRng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.05..5.0)).collect()
}

fn random_ranking(rng: &mut SamplerRng, k: usize, max_block: usize) -> PartialRanking {
    let mut ids: Vec<usize> = (0..k).collect();
    ids.shuffle(rng);
    let mut blocks = Vec::new();
    let mut rest = &ids[..];
    while !rest.is_empty() && rng.random_bool(0.7) {
        let size = rng.random_range(1..=max_block.min(rest.len()));
        blocks.push(rest[..size].to_vec());
        rest = &rest[size..];
    }
    PartialRanking::new(k, blocks).unwrap()
}

#[test]
fn criterion_01_exact_likelihood() {
    let start = Instant::now();
    let mut rng = rng_from_seed(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let k = rng.random_range(1..=6);
        let params = PlParams::new(random_lambda(&mut rng, k)).unwrap();
        let ranking = random_ranking(&mut rng, k, 3);
        let dp = pl_partial_ranking_log_prob(&params, &ranking)
            .unwrap()
            .exp();
        let brute = brute_force_partial_prob(&params, &ranking).unwrap();
        worst = worst.max((dp - brute).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "exact likelihood vs enumeration",
        worst <= 1e-10 && elapsed < Duration::from_secs(10),
        format!("500 instances, max abs error {worst:.2e}, {elapsed:.2?}"),
    );
}

/// Sum over the six orders of three classes placed first.
fn six_order_sum(lambda: &[f64]) -> f64 {
    let total: f64 = lambda.iter().sum();
    let orders = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    orders
        .iter()
        .map(|&[a, b, c]| {
            lambda[a] / total * lambda[b] / (total - lambda[a]) * lambda[c]
                / (total - lambda[a] - lambda[b])
        })
        .sum()
}

#[test]
fn criterion_02_three_way_tie_identity() {
    let mut rng = rng_from_seed(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(4..=6);
        let lambda = random_lambda(&mut rng, k);
        let ranking = PartialRanking::new(k, vec![vec![0, 1, 2]]).unwrap();
        let dp = pl_partial_ranking_log_prob(&PlParams::new(lambda.clone()).unwrap(), &ranking)
            .unwrap()
            .exp();
        worst = worst.max((dp - six_order_sum(&lambda)).abs());
    }
    verdict(
        2,
        "tied top-3 block vs six-order sum",
        worst <= 1e-12,
        format!("100 instances, max abs error {worst:.2e}"),
    );
}

fn gibbs_config(seed: u64) -> GibbsConfig {
    GibbsConfig {
        burn_in: 500,
        seed,
        ..GibbsConfig::default()
    }
    .with_retained(5000)
}

#[test]
fn criterion_03_gibbs_vs_grid() {
    let start = Instant::now();
    let r = |k: usize, blocks: Vec<Vec<usize>>| PartialRanking::new(k, blocks).unwrap();
    let cases = [
        vec![r(2, vec![vec![0]])],
        vec![r(2, vec![vec![0]]), r(2, vec![vec![1]])],
        vec![r(3, vec![vec![0], vec![1]])],
        vec![r(3, vec![vec![0], vec![1]]), r(3, vec![vec![1, 2]])],
    ];
    let mut worst_grid: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (i, rankings) in cases.iter().enumerate() {
        let k = rankings[0].num_classes();
        let grid =
            grid_posterior_oracle(rankings, k, 1.0, 1, if k == 2 { 10_000 } else { 300 }).unwrap();
        let a = gibbs_run(rankings, &gibbs_config(10 + i as u64)).unwrap();
        let b = gibbs_run(rankings, &gibbs_config(1000 + i as u64)).unwrap();
        let (ma, mb) = (a.mean(), b.mean());
        for c in 0..k {
            worst_grid = worst_grid.max((ma[c] - grid.mean[c]).abs());
            let xa: Vec<f64> = a.rows().map(|row| row[c]).collect();
            let xb: Vec<f64> = b.rows().map(|row| row[c]).collect();
            let se = batch_means_standard_error(&xa, 50).hypot(batch_means_standard_error(&xb, 50));
            worst_z = worst_z.max((ma[c] - mb[c]).abs() / se);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        "gibbs vs grid posterior",
        worst_grid < 0.02 && worst_z < 3.0 && elapsed < Duration::from_secs(60),
        format!("max mean deviation {worst_grid:.4}, max chain gap {worst_z:.2} SE, {elapsed:.2?}"),
    );
}

/// Classes in decreasing order of value, lowest id first among ties.
fn descending(values: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..values.len()).collect();
    ids.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    ids
}

#[test]
fn criterion_04_reduction_law() {
    let mut rng = rng_from_seed(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(2..=10);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let lambda: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let point = PosteriorSamples::point_mass(AggregationModel::Irn, &lambda).unwrap();
        let truth = descending(&lambda);
        let mut predicted: Vec<usize> = (0..k).collect();
        predicted.shuffle(&mut rng);
        let len = rng.random_range(1..=k);
        predicted.truncate(len);
        let prediction = PredictionSet::new("c", predicted.clone()).unwrap();
        for depth in 1..=len {
            let top = &predicted[..depth];
            let topk = if top.contains(&truth[0]) { 1.0 } else { 0.0 };
            let same_set = top.iter().all(|c| truth[..depth].contains(c));
            let set = if same_set { 1.0 } else { 0.0 };
            let ao = (1..=depth)
                .map(|d| {
                    predicted[..d]
                        .iter()
                        .filter(|c| truth[..d].contains(c))
                        .count() as f64
                        / d as f64
                })
                .sum::<f64>()
                / depth as f64;
            worst = worst
                .max((ua_topk_accuracy(&point, &prediction, depth).unwrap() - topk).abs())
                .max((ua_set_accuracy(&point, &prediction, depth).unwrap() - set).abs())
                .max((ua_average_overlap(&point, &prediction, depth).unwrap() - ao).abs());
        }
    }
    verdict(
        4,
        "point-mass reduction law",
        worst <= 1e-12,
        format!("100 cases, max deviation {worst:.2e}"),
    );
}

fn run_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_plausible"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "plausible {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// (reliability label, classifier) -> UA top-3 accuracy.
fn top3_by_reliability(report: &Path) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for line in fs::read_to_string(report).unwrap().lines() {
        let row: Value = serde_json::from_str(line).unwrap();
        if row["kind"] == "case_metric" && row["metric"] == "ua_topk_accuracy" && row["k"] == 3 {
            let rel = row["provenance"]["reliability"].to_string();
            let classifier = row["classifier"].as_str().unwrap().to_string();
            out.insert((rel, classifier), row["value"].as_f64().unwrap());
        }
    }
    out
}

#[test]
fn criterion_05_worked_case() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let mut tables = Vec::new();
    for model in ["pl", "prirn"] {
        let out = dir.path().join(model);
        run_cli(&[
            "evaluate",
            "--cases",
            f.join("cases.jsonl").to_str().unwrap(),
            "--annotations",
            f.join("annotations.jsonl").to_str().unwrap(),
            "--predictions",
            f.join("predictions.jsonl").to_str().unwrap(),
            "--classes",
            f.join("classes.json").to_str().unwrap(),
            "--model",
            model,
            "--samples",
            "1000",
            "--out",
            out.to_str().unwrap(),
        ]);
        tables.push(top3_by_reliability(&out.join("case_report.jsonl")));
    }
    let pairs = |t: &BTreeMap<(String, String), f64>| -> Vec<(String, f64, f64)> {
        t.keys()
            .filter(|(_, c)| c == "A")
            .map(|(rel, _)| {
                let a = t[&(rel.clone(), "A".to_string())];
                let b = t[&(rel.clone(), "B".to_string())];
                (rel.clone(), a, b)
            })
            .collect()
    };
    let pl = pairs(&tables[0]);
    let prirn = pairs(&tables[1]);
    let mut found = None;
    for (rp, ap, bp) in &pl {
        for (rg, ag, bg) in &prirn {
            if *bp >= 0.95 && *bg >= 0.9 && bp - ap >= 0.15 && bg - ag >= 0.15 {
                found.get_or_insert(format!(
                    "PL {rp}: A {ap:.3} B {bp:.3}; PrIRN {rg}: A {ag:.3} B {bg:.3}"
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = found.is_some() && elapsed < Duration::from_secs(30);
    verdict(
        5,
        "worked eight-class case",
        pass,
        format!(
            "{}, {elapsed:.2?}",
            found.unwrap_or_else(|| "no grid pair qualifies".into())
        ),
    );
}

#[test]
fn criterion_06_irn_hand_values() {
    let two = [
        PartialRanking::new(2, vec![vec![0], vec![1]]).unwrap(),
        PartialRanking::new(2, vec![vec![1]]).unwrap(),
    ];
    let scores = irn_aggregate(&two).unwrap();
    let f = fixtures();
    let data = ingest(
        &f.join("cases.jsonl"),
        &f.join("annotations.jsonl"),
        None,
        Some(&f.join("classes.json")),
    )
    .unwrap();
    let case = irn_aggregate(&data.records[0].partial_rankings()).unwrap();
    let top1 = data
        .classes
        .as_ref()
        .unwrap()
        .name(case.top1())
        .unwrap()
        .to_string();
    verdict(
        6,
        "inverse rank normalization",
        scores.normalized == [0.4, 0.6] && top1 == "Hemangioma",
        format!(
            "two annotators {:?}, worked case top-1 {top1}",
            scores.normalized
        ),
    );
}

fn direct_average_overlap(a: &[usize], b: &[usize], depth: usize) -> f64 {
    (1..=depth)
        .map(|d| a[..d].iter().filter(|c| b[..d].contains(c)).count() as f64 / d as f64)
        .sum::<f64>()
        / depth as f64
}

#[test]
fn criterion_07_mean_average_overlap() {
    let mut rng = rng_from_seed(5);
    let mut self_err: f64 = 0.0;
    let mut hard_err: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(1..=8);
        let b = random_ranking(&mut rng, k, 3);
        let depth = rng.random_range(1..=k);
        self_err = self_err.max((mean_average_overlap_partial(&b, &b, depth).unwrap() - 1.0).abs());
        let mut x: Vec<usize> = (0..k).collect();
        let mut y = x.clone();
        x.shuffle(&mut rng);
        y.shuffle(&mut rng);
        let v = mean_average_overlap_partial(
            &PartialRanking::from_permutation(&x).unwrap(),
            &PartialRanking::from_permutation(&y).unwrap(),
            depth,
        )
        .unwrap();
        hard_err = hard_err.max((v - direct_average_overlap(&x, &y, depth)).abs());
    }
    let p = PartialRanking::new(4, vec![vec![3], vec![2, 0], vec![1]])
        .unwrap()
        .to_soft_permutation();
    let expected = [
        [0.0, 0.0, 0.0, 1.0],
        [0.5, 0.0, 0.5, 0.0],
        [0.5, 0.0, 0.5, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ];
    let printed = (0..4).all(|i| p.row(i) == expected[i]);
    verdict(
        7,
        "mean average overlap",
        self_err <= 1e-12 && hard_err <= 1e-12 && printed,
        format!(
            "self {self_err:.2e}, hard permutations {hard_err:.2e}, printed matrix {}",
            if printed { "exact" } else { "differs" }
        ),
    );
}

fn inversions(series: &[f64]) -> usize {
    series.windows(2).filter(|w| w[1] < w[0]).count()
}

#[test]
fn criterion_08_reliability_monotonicity() {
    let num_cases = 50;
    let m = 1000;
    let mut prirn = vec![0.0; DEFAULT_GAMMA_GRID.len()];
    let mut pl = vec![0.0; DEFAULT_REPETITION_GRID.len()];
    for i in 0..num_cases {
        let seed = derive_case_seed(42, &format!("mono-{i}"));
        let lambda = sample_dirichlet(&[1.0; 5], &mut rng_from_seed(seed ^ 1)).unwrap();
        let rankings = simulate_annotations(&SimSpec {
            lambda,
            annotators: 5,
            block_sizes: vec![1, 1, 1],
            noise: 0.0,
            seed,
        })
        .unwrap();
        for (slot, &gamma) in prirn.iter_mut().zip(DEFAULT_GAMMA_GRID.iter()) {
            let s = prirn_sample(&rankings, gamma, m, seed).unwrap();
            *slot += annotation_certainty_topj(&s, 1).unwrap() / num_cases as f64;
        }
        for (slot, &reps) in pl.iter_mut().zip(DEFAULT_REPETITION_GRID.iter()) {
            let config = GibbsConfig {
                repetitions: reps,
                seed,
                ..GibbsConfig::default()
            }
            .with_retained(m);
            let s = gibbs_run(&rankings, &config).unwrap();
            *slot += annotation_certainty_topj(&s, 1).unwrap() / num_cases as f64;
        }
    }
    let (ip, il) = (inversions(&prirn), inversions(&pl));
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        8,
        "certainty grows with reliability",
        ip <= 1 && il <= 1,
        format!(
            "PrIRN [{}] {ip} inversions; PL [{}] {il} inversions",
            fmt(&prirn),
            fmt(&pl)
        ),
    );
}

#[test]
fn criterion_09_prior_recovery() {
    let (k, alpha, n) = (4, 1.5, 100_000);
    let s = GibbsSampler::new(
        k,
        &[],
        GibbsConfig {
            alpha,
            seed: 99,
            ..GibbsConfig::default()
        }
        .with_retained(n),
    )
    .unwrap()
    .run()
    .unwrap();
    let a0 = alpha * k as f64;
    let mean = alpha / a0;
    let var = alpha * (a0 - alpha) / (a0 * a0 * (a0 + 1.0));
    let mut worst: f64 = 0.0;
    for c in 0..k {
        let x: Vec<f64> = s.rows().map(|r| r[c]).collect();
        let m = x.iter().sum::<f64>() / n as f64;
        let v = x.iter().map(|xi| (xi - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let m4 = x.iter().map(|xi| (xi - m).powi(4)).sum::<f64>() / n as f64;
        let z_mean = (m - mean).abs() / (v / n as f64).sqrt();
        let z_var = (v - var).abs() / ((m4 - v * v) / n as f64).sqrt();
        worst = worst.max(z_mean).max(z_var);
    }
    verdict(
        9,
        "prior recovery without annotations",
        worst < 3.0,
        format!("K={k}, alpha={alpha}, M={n}, max deviation {worst:.2} SE"),
    );
}

const REPORT_FILES: [&str; 4] = [
    "case_report.jsonl",
    "dataset_report.jsonl",
    "plot_data.csv",
    "manifest.json",
];

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    run_cli(&[
        "simulate",
        "--num-classes",
        "6",
        "--cases",
        "24",
        "--annotators",
        "4",
        "--blocks",
        "1,2",
        "--noise",
        "0.2",
        "--seed",
        "8",
        "--out",
        sim.to_str().unwrap(),
    ]);
    let mut identical = true;
    let mut compared = 0;
    for model in ["pl", "prirn"] {
        let outputs: Vec<PathBuf> = [("a", "1"), ("b", "1"), ("c", "8")]
            .iter()
            .map(|(tag, workers)| {
                let out = dir.path().join(format!("{model}-{tag}"));
                run_cli(&[
                    "evaluate",
                    "--cases",
                    sim.join("cases.jsonl").to_str().unwrap(),
                    "--annotations",
                    sim.join("annotations.jsonl").to_str().unwrap(),
                    "--predictions",
                    sim.join("predictions.jsonl").to_str().unwrap(),
                    "--model",
                    model,
                    "--samples",
                    "200",
                    "--seed",
                    "17",
                    "--workers",
                    workers,
                    "--out",
                    out.to_str().unwrap(),
                ]);
                out
            })
            .collect();
        for file in REPORT_FILES {
            let reference = fs::read(outputs[0].join(file)).unwrap();
            for other in &outputs[1..] {
                identical &= fs::read(other.join(file)).unwrap() == reference;
                compared += 1;
            }
        }
    }
    verdict(
        10,
        "byte-identical reports",
        identical,
        format!("{compared} file comparisons across repeat runs and 1 vs 8 workers"),
    );
}
