//! Runs an aggregation model over every case and reliability setting and
//! writes the reports.

use std::collections::BTreeMap;
use std::fs;

use plausible_core::metrics::{
    annotation_certainty_topj, average_overlap_per_sample, loo_agreement, risk_metrics, set_hits,
    topk_hits, MetricReport,
};
use plausible_core::simple_models::{
    dirichlet_from_counts, score_outcome_samples, LabelCounts, ScoreModel,
};
use plausible_core::{
    derive_case_seed, gibbs_run, irn_aggregate, prirn_sample, AggregationModel, PosteriorSamples,
    Provenance, Reliability, RiskLevel,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::ingest::{CaseRecord, Dataset};
use crate::report::{
    write_jsonl, write_manifest, write_plot_data, FailureRow, Manifest, ReportRow, CASE_REPORT,
    DATASET_REPORT, FAILURES, MANIFEST, PLOT_DATA, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Posterior summaries per case.
    Aggregate,
    /// Annotation certainty per case and dataset.
    Certainty,
    /// Certainty plus uncertainty-adjusted metrics of the predictions.
    Evaluate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Aggregate => "aggregate",
            Command::Certainty => "certainty",
            Command::Evaluate => "evaluate",
        }
    }
}

/// Draws posterior samples for one case at one reliability.
pub fn posterior(
    config: &RunConfig,
    record: &CaseRecord,
    reliability: Reliability,
    seed: u64,
) -> plausible_core::Result<PosteriorSamples> {
    let m = config.num_samples;
    match (config.model, reliability) {
        (AggregationModel::Irn, _) => {
            let irn = irn_aggregate(&record.partial_rankings())?;
            let mut s = PosteriorSamples::point_mass(AggregationModel::Irn, &irn.normalized)?;
            s.seed = seed;
            Ok(s)
        }
        (AggregationModel::Prirn, Reliability::Gamma(g)) => {
            prirn_sample(&record.partial_rankings(), g, m, seed)
        }
        (AggregationModel::Pl, Reliability::Repetitions(r)) => {
            gibbs_run(&record.partial_rankings(), &config.gibbs_config(r, seed))
        }
        (AggregationModel::DirichletCounts, Reliability::Gamma(g)) => {
            let counts =
                LabelCounts::from_first_blocks(&record.partial_rankings(), g, config.counts_alpha)?;
            dirichlet_from_counts(&counts, m, seed)
        }
        (AggregationModel::GaussianScores, _) => {
            let scores = record.score_values();
            let threshold = config.score_threshold.unwrap_or_default();
            let model = ScoreModel::method_of_moments(&scores, threshold)?;
            score_outcome_samples(&scores, &model, m, seed)
        }
        (model, rel) => Err(plausible_core::Error::InvalidParameter(format!(
            "reliability {rel} does not apply to model {model}"
        ))),
    }
}

/// Identifies one per-sample metric series across cases.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct SeriesKey {
    reliability: usize,
    classifier: Option<String>,
    metric: String,
    k: usize,
}

#[derive(Debug, Default)]
struct CaseOutput {
    rows: Vec<ReportRow>,
    /// Metrics with one value per posterior sample.
    series: Vec<(SeriesKey, Vec<f64>)>,
    /// Metrics with a single value per case.
    values: Vec<(SeriesKey, f64)>,
}

struct Context<'a> {
    config: &'a RunConfig,
    command: Command,
    reliabilities: &'a [Reliability],
    risk_map: Option<&'a [RiskLevel]>,
}

fn ranking_model(model: AggregationModel) -> bool {
    model != AggregationModel::GaussianScores
}

fn process_case(ctx: &Context, record: &CaseRecord) -> plausible_core::Result<CaseOutput> {
    let seed = derive_case_seed(ctx.config.base_seed, &record.case_id);
    let mut out = CaseOutput::default();
    let case_id = &record.case_id;
    for (ri, &reliability) in ctx.reliabilities.iter().enumerate() {
        let samples = posterior(ctx.config, record, reliability, seed)?;
        let provenance = samples.provenance();
        let k = samples.num_classes();
        let key = |classifier: Option<&str>, metric: &str, k: usize| SeriesKey {
            reliability: ri,
            classifier: classifier.map(str::to_string),
            metric: metric.to_string(),
            k,
        };

        if ctx.command == Command::Aggregate {
            let rankings = record.partial_rankings();
            let is_ranking = ranking_model(ctx.config.model);
            out.rows.push(ReportRow::Aggregate {
                schema_version: SCHEMA_VERSION,
                case_id: case_id.clone(),
                provenance,
                mean: samples.mean(),
                sd: samples.variance().iter().map(|v| v.sqrt()).collect(),
                irn_top1: is_ranking
                    .then(|| irn_aggregate(&rankings).ok().map(|s| s.top1()))
                    .flatten(),
                loo_agreement: (is_ranking && rankings.len() >= 2)
                    .then(|| loo_agreement(&rankings))
                    .transpose()?,
            });
            continue;
        }

        for &j in ctx.config.certainty_depths.iter().filter(|&&j| j <= k) {
            let certainty = annotation_certainty_topj(&samples, j)?;
            out.rows.push(ReportRow::Certainty {
                schema_version: SCHEMA_VERSION,
                case_id: case_id.clone(),
                provenance,
                top_j: j,
                certainty,
            });
            out.values.push((key(None, "certainty", j), certainty));
        }
        let risk_map = ctx.risk_map.filter(|r| r.len() == k);
        if let Some(risk) = risk_map {
            let summary = risk_metrics(&samples, risk, None)?;
            out.values
                .push((key(None, "risk_certainty", 1), summary.risk_certainty));
            out.values
                .push((key(None, "expected_risk", 1), summary.expected_risk_mean));
            out.rows.push(ReportRow::Risk {
                schema_version: SCHEMA_VERSION,
                case_id: case_id.clone(),
                provenance,
                summary,
            });
        }

        if ctx.command != Command::Evaluate {
            continue;
        }
        for (classifier, prediction) in &record.predictions {
            let mut metric = |name: &str, kk: usize, hits: Vec<f64>| {
                let value =
                    plausible_core::metrics::neumaier_sum(hits.iter().copied()) / hits.len() as f64;
                out.rows.push(ReportRow::CaseMetric {
                    schema_version: SCHEMA_VERSION,
                    case_id: case_id.clone(),
                    classifier: classifier.clone(),
                    provenance,
                    metric: name.to_string(),
                    k: kk,
                    value,
                });
                out.series.push((key(Some(classifier), name, kk), hits));
            };
            let max_k = prediction.len().min(k);
            for &kk in ctx.config.k_grid.iter().filter(|&&kk| kk <= max_k) {
                metric("ua_topk_accuracy", kk, topk_hits(&samples, prediction, kk)?);
                metric("ua_set_accuracy", kk, set_hits(&samples, prediction, kk)?);
            }
            let depth = ctx.config.overlap_depth.min(max_k);
            metric(
                "ua_average_overlap",
                depth,
                average_overlap_per_sample(&samples, prediction, depth)?,
            );
            if let Some(risk) = risk_map {
                let summary = risk_metrics(&samples, risk, Some(prediction))?;
                let value = summary.prediction_risk_accuracy.unwrap_or_default();
                out.rows.push(ReportRow::CaseMetric {
                    schema_version: SCHEMA_VERSION,
                    case_id: case_id.clone(),
                    classifier: classifier.clone(),
                    provenance,
                    metric: "ua_risk_accuracy".into(),
                    k: 1,
                    value,
                });
                out.values
                    .push((key(Some(classifier), "ua_risk_accuracy", 1), value));
            }
        }
    }
    Ok(out)
}

/// Outcome of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub num_cases: usize,
    pub failed_cases: Vec<String>,
    pub files: Vec<String>,
}

/// Runs `command` over the dataset and writes all report files.
///
/// Cases are processed on a pool of `config.workers` threads; each case's
/// seed derives from the base seed and its id, so output does not depend on
/// the pool size. Failing cases are listed in a failure manifest while the
/// remaining results are still written.
pub fn run(command: Command, config: &RunConfig, dataset: &Dataset) -> CliResult<RunSummary> {
    config.validate()?;
    let reliabilities = config.reliabilities()?;
    let risk_map = dataset.risk_map();
    let ctx = Context {
        config,
        command,
        reliabilities: &reliabilities,
        risk_map: risk_map.as_deref(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<plausible_core::Result<CaseOutput>> = pool.install(|| {
        dataset
            .records
            .par_iter()
            .map(|record| process_case(&ctx, record))
            .collect()
    });

    let mut case_rows = Vec::new();
    let mut failures = Vec::new();
    let mut series: BTreeMap<SeriesKey, Vec<Vec<f64>>> = BTreeMap::new();
    let mut values: BTreeMap<SeriesKey, Vec<f64>> = BTreeMap::new();
    for (record, result) in dataset.records.iter().zip(results) {
        match result {
            Ok(out) => {
                case_rows.extend(out.rows);
                for (key, v) in out.series {
                    series.entry(key).or_default().push(v);
                }
                for (key, v) in out.values {
                    values.entry(key).or_default().push(v);
                }
            }
            Err(e) => failures.push(FailureRow {
                case_id: record.case_id.clone(),
                error: e.to_string(),
            }),
        }
    }

    let dataset_provenance = |ri: usize| Provenance {
        model: config.model,
        reliability: reliabilities[ri],
        num_samples: if config.model == AggregationModel::Irn {
            1
        } else {
            config.num_samples
        },
        seed: config.base_seed,
    };
    let mut dataset_rows = Vec::new();
    for (key, per_sample) in &series {
        let report = MetricReport::from_per_sample(
            key.metric.clone(),
            dataset_provenance(key.reliability),
            per_sample,
            config.histogram_bins,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        dataset_rows.push(dataset_row(key, report));
    }
    for (key, per_case) in values {
        let report = MetricReport::from_case_values(
            key.metric.clone(),
            dataset_provenance(key.reliability),
            per_case,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        dataset_rows.push(dataset_row(&key, report));
    }

    fs::create_dir_all(&config.out_dir).map_err(CliError::io(&config.out_dir))?;
    let dir = &config.out_dir;
    let mut files = vec![CASE_REPORT.to_string()];
    write_jsonl(&dir.join(CASE_REPORT), &case_rows)?;
    if command != Command::Aggregate {
        write_jsonl(&dir.join(DATASET_REPORT), &dataset_rows)?;
        let mut plot_rows = dataset_rows.clone();
        plot_rows.extend(case_rows.iter().cloned());
        write_plot_data(&dir.join(PLOT_DATA), &plot_rows)?;
        files.push(DATASET_REPORT.to_string());
        files.push(PLOT_DATA.to_string());
    }
    let failure_path = dir.join(FAILURES);
    if failures.is_empty() {
        if failure_path.exists() {
            fs::remove_file(&failure_path).map_err(CliError::io(&failure_path))?;
        }
    } else {
        write_jsonl(&failure_path, &failures)?;
        files.push(FAILURES.to_string());
    }
    let failed_cases: Vec<String> = failures.iter().map(|f| f.case_id.clone()).collect();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: command.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        num_cases: dataset.records.len(),
        failed_cases: failed_cases.clone(),
        files: files.clone(),
    };
    write_manifest(&dir.join(MANIFEST), &manifest)?;

    if !failures.is_empty() {
        return Err(CliError::PartialFailure {
            failed: failures.len(),
            manifest: failure_path,
        });
    }
    Ok(RunSummary {
        num_cases: dataset.records.len(),
        failed_cases,
        files,
    })
}

fn dataset_row(key: &SeriesKey, report: MetricReport) -> ReportRow {
    ReportRow::DatasetMetric {
        schema_version: SCHEMA_VERSION,
        classifier: key.classifier.clone(),
        provenance: report.provenance,
        metric: report.metric,
        k: key.k,
        num_cases: report.per_case.len(),
        mean: report.mean,
        sample_sd: report.sample_std,
        sample_min: report.sample_min,
        sample_max: report.sample_max,
        histogram: report.histogram,
    }
}
