//! Line-delimited JSON input: cases, annotations and predictions, plus an
//! optional class catalogue with names and risk levels.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use plausible_core::metrics::PredictionSet;
use plausible_core::{ClassSpace, PartialRanking, RiskLevel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// A class given by id or by catalogue name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassRef {
    Id(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCatalogue {
    pub classes: Vec<ClassEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLine {
    pub case_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationLine {
    pub case_id: String,
    pub annotator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<ClassRef>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub case_id: String,
    #[serde(default = "default_classifier")]
    pub classifier: String,
    pub ranked_classes: Vec<ClassRef>,
}

fn default_classifier() -> String {
    "default".to_string()
}

/// One evaluation unit with everything known about it.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case_id: String,
    pub num_classes: usize,
    pub metadata: Option<Value>,
    pub rankings: Vec<(String, PartialRanking)>,
    pub scores: Vec<(String, f64)>,
    pub predictions: Vec<(String, PredictionSet)>,
}

impl CaseRecord {
    pub fn partial_rankings(&self) -> Vec<PartialRanking> {
        self.rankings.iter().map(|(_, r)| r.clone()).collect()
    }

    pub fn score_values(&self) -> Vec<f64> {
        self.scores.iter().map(|(_, s)| *s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: Option<ClassSpace>,
    pub records: Vec<CaseRecord>,
}

impl Dataset {
    /// Risk level per class when the catalogue assigns one to every class.
    pub fn risk_map(&self) -> Option<Vec<RiskLevel>> {
        self.classes.as_ref().and_then(|c| c.risk_map().ok())
    }
}

pub fn read_catalogue(path: &Path) -> CliResult<ClassSpace> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let catalogue: ClassCatalogue = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let invalid = |source| CliError::InvalidRecord {
        path: path.to_path_buf(),
        line: 1,
        source,
    };
    let mut space = ClassSpace::from_names(catalogue.classes.iter().map(|c| c.name.clone()))
        .map_err(invalid)?;
    for (id, entry) in catalogue.classes.iter().enumerate() {
        if let Some(level) = entry.risk {
            space.set_risk(id, level).map_err(invalid)?;
        }
    }
    Ok(space)
}

/// Parses every non-blank line of a JSONL file, reporting 1-based line numbers.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<(usize, T)>> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

struct Resolver<'a> {
    classes: Option<&'a ClassSpace>,
    path: PathBuf,
}

impl Resolver<'_> {
    fn resolve(&self, line: usize, class: &ClassRef) -> CliResult<usize> {
        match class {
            ClassRef::Id(id) => Ok(*id),
            ClassRef::Name(name) => {
                self.classes
                    .and_then(|c| c.id_of(name))
                    .ok_or_else(|| CliError::UnknownClassName {
                        path: self.path.clone(),
                        line,
                        name: name.clone(),
                    })
            }
        }
    }

    fn invalid(&self, line: usize) -> impl FnOnce(plausible_core::Error) -> CliError + '_ {
        move |source| CliError::InvalidRecord {
            path: self.path.clone(),
            line,
            source,
        }
    }
}

/// Joins cases, annotations and optional predictions by case id, in the
/// order of the cases file.
pub fn ingest(
    cases: &Path,
    annotations: &Path,
    predictions: Option<&Path>,
    classes: Option<&Path>,
) -> CliResult<Dataset> {
    let catalogue = classes.map(read_catalogue).transpose()?;
    let mut records: Vec<CaseRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, case) in read_jsonl::<CaseLine>(cases)? {
        let parse_error = |message: String| CliError::Parse {
            path: cases.to_path_buf(),
            line,
            message,
        };
        let num_classes = match (case.num_classes, &catalogue) {
            (Some(k), Some(c)) if k != c.num_classes() => {
                return Err(parse_error(format!(
                    "num_classes {k} disagrees with the {} catalogue classes",
                    c.num_classes()
                )))
            }
            (Some(k), _) => k,
            (None, Some(c)) => c.num_classes(),
            (None, None) => {
                return Err(parse_error(
                    "num_classes is required without a class catalogue".into(),
                ))
            }
        };
        if num_classes == 0 {
            return Err(parse_error("num_classes must be positive".into()));
        }
        if index.contains_key(&case.case_id) {
            return Err(parse_error(format!("duplicate case id {:?}", case.case_id)));
        }
        index.insert(case.case_id.clone(), records.len());
        records.push(CaseRecord {
            case_id: case.case_id,
            num_classes,
            metadata: case.metadata,
            rankings: Vec::new(),
            scores: Vec::new(),
            predictions: Vec::new(),
        });
    }

    let lookup = |path: &Path, line: usize, case_id: &str| {
        index
            .get(case_id)
            .copied()
            .ok_or_else(|| CliError::DanglingCaseId {
                path: path.to_path_buf(),
                line,
                case_id: case_id.to_string(),
            })
    };

    let resolver = Resolver {
        classes: catalogue.as_ref(),
        path: annotations.to_path_buf(),
    };
    for (line, a) in read_jsonl::<AnnotationLine>(annotations)? {
        let i = lookup(annotations, line, &a.case_id)?;
        let record = &mut records[i];
        match (a.blocks, a.score) {
            (Some(blocks), None) => {
                let blocks = blocks
                    .iter()
                    .map(|b| b.iter().map(|c| resolver.resolve(line, c)).collect())
                    .collect::<CliResult<Vec<Vec<usize>>>>()?;
                let ranking = PartialRanking::new(record.num_classes, blocks)
                    .map_err(resolver.invalid(line))?;
                record.rankings.push((a.annotator_id, ranking));
            }
            (None, Some(score)) if score.is_finite() => record.scores.push((a.annotator_id, score)),
            _ => {
                return Err(CliError::Parse {
                    path: annotations.to_path_buf(),
                    line,
                    message: "annotation needs either blocks or a finite score".into(),
                })
            }
        }
    }

    if let Some(path) = predictions {
        let resolver = Resolver {
            classes: catalogue.as_ref(),
            path: path.to_path_buf(),
        };
        for (line, p) in read_jsonl::<PredictionLine>(path)? {
            let i = lookup(path, line, &p.case_id)?;
            let ids = p
                .ranked_classes
                .iter()
                .map(|c| resolver.resolve(line, c))
                .collect::<CliResult<Vec<usize>>>()?;
            let k = records[i].num_classes;
            if let Some(&class) = ids.iter().find(|&&c| c >= k) {
                return Err(resolver.invalid(line)(
                    plausible_core::Error::ClassIdOutOfRange {
                        class,
                        num_classes: k,
                    },
                ));
            }
            let set = PredictionSet::new(p.case_id, ids).map_err(resolver.invalid(line))?;
            records[i].predictions.push((p.classifier, set));
        }
    }

    Ok(Dataset {
        classes: catalogue,
        records,
    })
}
