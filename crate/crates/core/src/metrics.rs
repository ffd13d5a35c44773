//! Annotation certainty and uncertainty-adjusted evaluation metrics.
//!
//! Every metric is a Monte Carlo average over posterior plausibility samples.
//! Per-sample argmax and top-k sets break ties by lowest class id.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irn::irn_single;
use crate::posterior::{argmax, top_set, PosteriorSamples, Provenance};
use crate::rankings::{PartialRanking, RiskLevel};

/// A classifier's classes ordered from most to least likely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub case_id: String,
    ranked_classes: Vec<usize>,
}

impl PredictionSet {
    pub fn new(case_id: impl Into<String>, ranked_classes: Vec<usize>) -> Result<Self> {
        let mut seen = ranked_classes.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "class {} listed twice in prediction",
                w[0]
            )));
        }
        if ranked_classes.is_empty() {
            return Err(Error::InvalidParameter(
                "prediction lists no classes".into(),
            ));
        }
        Ok(Self {
            case_id: case_id.into(),
            ranked_classes,
        })
    }

    /// Ranks all classes by descending score, ties by lowest id.
    pub fn from_scores(case_id: impl Into<String>, scores: &[f64]) -> Result<Self> {
        Self::new(case_id, crate::posterior::ranked_order(scores))
    }

    pub fn ranked_classes(&self) -> &[usize] {
        &self.ranked_classes
    }

    pub fn len(&self) -> usize {
        self.ranked_classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked_classes.is_empty()
    }

    pub fn top_k(&self, k: usize) -> &[usize] {
        &self.ranked_classes[..k.min(self.len())]
    }

    /// The first `k` classes, sorted by id.
    pub fn top_k_set(&self, k: usize) -> Vec<usize> {
        let mut set = self.top_k(k).to_vec();
        set.sort_unstable();
        set
    }

    fn check_k(&self, k: usize, num_classes: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} outside 1..={}",
                self.len()
            )));
        }
        if let Some(&c) = self.ranked_classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::ClassIdOutOfRange {
                class: c,
                num_classes,
            });
        }
        Ok(())
    }
}

/// Fraction of samples whose argmax is `label`.
pub fn certainty_label(samples: &PosteriorSamples, label: usize) -> f64 {
    let hits = samples.rows().filter(|r| argmax(r) == label).count();
    hits as f64 / samples.len() as f64
}

/// Frequency of the most common top-`j` set across samples.
pub fn annotation_certainty_topj(samples: &PosteriorSamples, j: usize) -> Result<f64> {
    if j == 0 || j > samples.num_classes() {
        return Err(Error::InvalidParameter(format!(
            "j = {j} outside 1..={}",
            samples.num_classes()
        )));
    }
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for row in samples.rows() {
        *counts.entry(top_set(row, j)).or_default() += 1;
    }
    let modal = counts.values().copied().max().unwrap_or(0);
    Ok(modal as f64 / samples.len() as f64)
}

/// Per-sample indicator that the sample's argmax is among the top `k` predictions.
pub fn topk_hits(
    samples: &PosteriorSamples,
    prediction: &PredictionSet,
    k: usize,
) -> Result<Vec<f64>> {
    prediction.check_k(k, samples.num_classes())?;
    let top = prediction.top_k(k);
    Ok(samples
        .rows()
        .map(|r| f64::from(u8::from(top.contains(&argmax(r)))))
        .collect())
}

/// Per-sample indicator that the sample's top-`k` set equals the predicted one.
pub fn set_hits(
    samples: &PosteriorSamples,
    prediction: &PredictionSet,
    k: usize,
) -> Result<Vec<f64>> {
    prediction.check_k(k, samples.num_classes())?;
    let predicted = prediction.top_k_set(k);
    Ok(samples
        .rows()
        .map(|r| f64::from(u8::from(top_set(r, k) == predicted)))
        .collect())
}

/// Per-sample average overlap up to depth `depth`.
pub fn average_overlap_per_sample(
    samples: &PosteriorSamples,
    prediction: &PredictionSet,
    depth: usize,
) -> Result<Vec<f64>> {
    prediction.check_k(depth, samples.num_classes())?;
    let predicted: Vec<Vec<usize>> = (1..=depth).map(|k| prediction.top_k_set(k)).collect();
    Ok(samples
        .rows()
        .map(|r| {
            let order = crate::posterior::ranked_order(r);
            let total: f64 = predicted
                .iter()
                .enumerate()
                .map(|(i, c)| overlap(c, &order[..=i]))
                .sum();
            total / depth as f64
        })
        .collect())
}

pub fn ua_topk_accuracy(
    samples: &PosteriorSamples,
    prediction: &PredictionSet,
    k: usize,
) -> Result<f64> {
    Ok(mean(&topk_hits(samples, prediction, k)?))
}

pub fn ua_set_accuracy(
    samples: &PosteriorSamples,
    prediction: &PredictionSet,
    k: usize,
) -> Result<f64> {
    Ok(mean(&set_hits(samples, prediction, k)?))
}

pub fn ua_average_overlap(
    samples: &PosteriorSamples,
    prediction: &PredictionSet,
    depth: usize,
) -> Result<f64> {
    Ok(mean(&average_overlap_per_sample(
        samples, prediction, depth,
    )?))
}

/// `|C ∩ Y| / |C|`. Both slices hold distinct ids.
pub fn overlap(c: &[usize], y: &[usize]) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let shared = c.iter().filter(|x| y.contains(x)).count();
    shared as f64 / c.len() as f64
}

/// Normalized average overlap between two partial rankings, computed on their
/// soft permutation matrices.
pub fn mean_average_overlap_partial(
    b: &PartialRanking,
    other: &PartialRanking,
    depth: usize,
) -> Result<f64> {
    if b.num_classes() != other.num_classes() {
        return Err(Error::ClassSpaceMismatch {
            expected: b.num_classes(),
            found: other.num_classes(),
        });
    }
    if depth == 0 || depth > b.num_classes() {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} outside 1..={}",
            b.num_classes()
        )));
    }
    let x = cumulative_soft_permutation(b, depth);
    let y = cumulative_soft_permutation(other, depth);
    let cross = weighted_trace(&x, &y, depth);
    let norm = (weighted_trace(&x, &x, depth) * weighted_trace(&y, &y, depth)).sqrt();
    Ok(cross / norm)
}

/// First `depth` rows of `T P~`: row `i` holds each class's soft membership
/// in the top `i + 1` positions.
fn cumulative_soft_permutation(ranking: &PartialRanking, depth: usize) -> Vec<Vec<f64>> {
    let p = ranking.to_soft_permutation();
    let mut rows = Vec::with_capacity(depth);
    let mut acc = vec![0.0; p.size()];
    for i in 0..depth {
        for (a, v) in acc.iter_mut().zip(p.row(i)) {
            *a += v;
        }
        rows.push(acc.clone());
    }
    rows
}

/// `Tr(X^T D_L Y)` with `D_L = diag(1/L, 1/(2L), ..., 1/L^2)`.
fn weighted_trace(x: &[Vec<f64>], y: &[Vec<f64>], depth: usize) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (xr, yr))| {
            let dot: f64 = xr.iter().zip(yr).map(|(a, b)| a * b).sum();
            dot / ((i + 1) * depth) as f64
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    /// Modal frequency of the argmax of the per-sample risk distribution.
    pub risk_certainty: f64,
    /// Modal frequency of the risk level of each sample's top-1 class.
    pub top1_risk_certainty: f64,
    /// Mean per-sample mass on low, medium and high risk.
    pub mean_risk_distribution: [f64; 3],
    pub expected_risk_mean: f64,
    pub expected_risk_min: f64,
    pub expected_risk_max: f64,
    /// Fraction of samples whose argmax risk equals the risk of the predicted
    /// top-1 class.
    pub prediction_risk_accuracy: Option<f64>,
}

/// Risk-level view of the posterior over classes.
pub fn risk_metrics(
    samples: &PosteriorSamples,
    risk_map: &[RiskLevel],
    prediction: Option<&PredictionSet>,
) -> Result<RiskSummary> {
    let k = samples.num_classes();
    if risk_map.len() < k {
        return Err(Error::MissingRiskMapping {
            class: risk_map.len(),
        });
    }
    let predicted_risk = match prediction {
        Some(p) => {
            p.check_k(1, k)?;
            Some(risk_map[p.ranked_classes()[0]].ordinal())
        }
        None => None,
    };
    let m = samples.len() as f64;
    let mut agg_counts = [0usize; 3];
    let mut top1_counts = [0usize; 3];
    let mut mass = [0.0; 3];
    let mut expected = Vec::with_capacity(samples.len());
    let mut predicted_hits = 0usize;
    for row in samples.rows() {
        let mut dist = [0.0; 3];
        for (v, r) in row.iter().zip(risk_map) {
            dist[r.ordinal()] += v;
        }
        let level = argmax(&dist);
        agg_counts[level] += 1;
        top1_counts[risk_map[argmax(row)].ordinal()] += 1;
        if predicted_risk == Some(level) {
            predicted_hits += 1;
        }
        for (acc, d) in mass.iter_mut().zip(dist) {
            *acc += d;
        }
        expected.push(dist[1] + 2.0 * dist[2]);
    }
    let modal = |c: [usize; 3]| *c.iter().max().unwrap() as f64 / m;
    Ok(RiskSummary {
        risk_certainty: modal(agg_counts),
        top1_risk_certainty: modal(top1_counts),
        mean_risk_distribution: mass.map(|v| v / m),
        expected_risk_mean: mean(&expected),
        expected_risk_min: expected.iter().copied().fold(f64::INFINITY, f64::min),
        expected_risk_max: expected.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        prediction_risk_accuracy: predicted_risk.map(|_| predicted_hits as f64 / m),
    })
}

/// Fraction of annotators whose ranked classes contain the IRN top-1 label of
/// the remaining annotators.
pub fn loo_agreement(rankings: &[PartialRanking]) -> Result<f64> {
    if rankings.len() < 2 {
        return Err(Error::InvalidParameter(
            "leave-one-out agreement needs at least two annotators".into(),
        ));
    }
    let k = crate::irn::shared_num_classes(rankings)?;
    let singles: Vec<Vec<f64>> = rankings.iter().map(irn_single).collect();
    let mut agree = 0usize;
    for (r, ranking) in rankings.iter().enumerate() {
        let mut rest = vec![0.0; k];
        for (_, s) in singles.iter().enumerate().filter(|(i, _)| *i != r) {
            for (acc, v) in rest.iter_mut().zip(s) {
                *acc += v;
            }
        }
        if rest.iter().any(|v| *v > 0.0) && ranking.is_ranked(argmax(&rest)) {
            agree += 1;
        }
    }
    Ok(agree as f64 / rankings.len() as f64)
}

/// Compensated sum, insensitive to the magnitude ordering of terms.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean(values: &[f64]) -> f64 {
    neumaier_sum(values.iter().copied()) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning `[min, max]` of the values.
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

/// Dataset-level summary of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub provenance: Provenance,
    pub per_case: Vec<f64>,
    pub mean: f64,
    /// Standard deviation over samples of the dataset mean, pairing sample
    /// `m` of every case.
    pub sample_std: Option<f64>,
    pub sample_min: Option<f64>,
    pub sample_max: Option<f64>,
    pub histogram: Option<Histogram>,
}

impl MetricReport {
    /// Summary of a metric that has one value per posterior sample per case.
    pub fn from_per_sample(
        metric: impl Into<String>,
        provenance: Provenance,
        per_sample: &[Vec<f64>],
        bins: usize,
    ) -> Result<Self> {
        let m = per_sample.first().map_or(0, Vec::len);
        if m == 0 || per_sample.iter().any(|v| v.len() != m) {
            return Err(Error::InvalidParameter(
                "every case needs the same positive number of samples".into(),
            ));
        }
        let cases = per_sample.len() as f64;
        let per_case: Vec<f64> = per_sample.iter().map(|v| mean(v)).collect();
        let dataset: Vec<f64> = (0..m)
            .map(|s| neumaier_sum(per_sample.iter().map(|v| v[s])) / cases)
            .collect();
        let mu = mean(&per_case);
        let var = neumaier_sum(dataset.iter().map(|d| (d - mu).powi(2))) / m as f64;
        Ok(Self {
            metric: metric.into(),
            provenance: Provenance {
                num_samples: m,
                ..provenance
            },
            per_case,
            mean: mu,
            sample_std: Some(var.sqrt()),
            sample_min: dataset.iter().copied().reduce(f64::min),
            sample_max: dataset.iter().copied().reduce(f64::max),
            histogram: Some(Histogram::new(&dataset, bins)),
        })
    }

    /// Summary of a metric with a single value per case.
    pub fn from_case_values(
        metric: impl Into<String>,
        provenance: Provenance,
        per_case: Vec<f64>,
    ) -> Result<Self> {
        if per_case.is_empty() {
            return Err(Error::InvalidParameter("no cases to summarize".into()));
        }
        Ok(Self {
            metric: metric.into(),
            provenance,
            mean: mean(&per_case),
            per_case,
            sample_std: None,
            sample_min: None,
            sample_max: None,
            histogram: None,
        })
    }
}
