//! Writes synthetic cases drawn from a known Plackett–Luce ground truth.

use std::fs;
use std::path::{Path, PathBuf};

use plausible_core::derive_case_seed;
use plausible_core::posterior::ranked_order;
use plausible_core::sampling::{rng_from_seed, sample_dirichlet};
use plausible_core::sim_oracle::{simulate_annotations, SimSpec};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::ingest::{AnnotationLine, CaseLine, ClassRef, PredictionLine};
use crate::report::write_jsonl;

pub const CASES_FILE: &str = "cases.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub num_classes: usize,
    /// Fixed ground truth; drawn per case from a symmetric Dirichlet otherwise.
    pub lambda: Option<Vec<f64>>,
    pub concentration: f64,
    pub cases: usize,
    pub annotators: usize,
    pub block_sizes: Vec<usize>,
    pub noise: f64,
    pub seed: u64,
}

/// Paths of the generated files.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFiles {
    pub cases: PathBuf,
    pub annotations: PathBuf,
    pub predictions: PathBuf,
}

/// Generates cases, annotations and a ground-truth ranking "prediction" per case.
pub fn simulate_to_dir(config: &SimulateConfig, dir: &Path) -> CliResult<SimulatedFiles> {
    if let Some(l) = &config.lambda {
        if l.len() != config.num_classes {
            return Err(CliError::Config(format!(
                "lambda has {} entries for {} classes",
                l.len(),
                config.num_classes
            )));
        }
    }
    if !(config.concentration > 0.0 && config.concentration.is_finite()) {
        return Err(CliError::Config("concentration must be positive".into()));
    }
    let mut cases = Vec::with_capacity(config.cases);
    let mut annotations = Vec::new();
    let mut predictions = Vec::with_capacity(config.cases);
    for i in 0..config.cases {
        let case_id = format!("sim-{i:05}");
        let seed = derive_case_seed(config.seed, &case_id);
        let lambda = match &config.lambda {
            Some(l) => l.clone(),
            None => sample_dirichlet(
                &vec![config.concentration; config.num_classes],
                &mut rng_from_seed(seed ^ 0x5eed),
            )
            .map_err(|e| CliError::Config(e.to_string()))?,
        };
        let spec = SimSpec {
            lambda: lambda.clone(),
            annotators: config.annotators,
            block_sizes: config.block_sizes.clone(),
            noise: config.noise,
            seed,
        };
        let rankings = simulate_annotations(&spec).map_err(|e| CliError::Config(e.to_string()))?;
        for (r, ranking) in rankings.iter().enumerate() {
            annotations.push(AnnotationLine {
                case_id: case_id.clone(),
                annotator_id: format!("a{r}"),
                blocks: Some(
                    ranking
                        .blocks()
                        .iter()
                        .map(|b| b.iter().map(|&c| ClassRef::Id(c)).collect())
                        .collect(),
                ),
                score: None,
            });
        }
        predictions.push(PredictionLine {
            case_id: case_id.clone(),
            classifier: "true-lambda".into(),
            ranked_classes: ranked_order(&lambda)
                .into_iter()
                .map(ClassRef::Id)
                .collect(),
        });
        cases.push(CaseLine {
            case_id,
            num_classes: Some(config.num_classes),
            metadata: Some(json!({ "true_lambda": lambda })),
        });
    }
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let files = SimulatedFiles {
        cases: dir.join(CASES_FILE),
        annotations: dir.join(ANNOTATIONS_FILE),
        predictions: dir.join(PREDICTIONS_FILE),
    };
    write_jsonl(&files.cases, &cases)?;
    write_jsonl(&files.annotations, &annotations)?;
    write_jsonl(&files.predictions, &predictions)?;
    Ok(files)
}
