//! Scoring: exact match over logical forms, answer F1, zero-shot test
//! partitions, and report aggregation.

use crate::kg::{evaluate, KnowledgeGraph};
use crate::sexpr::{parse_sexpr, semantic_equal, SExpr};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("duplicate qid {0}")]
    DuplicateQid(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown qid(s): {}", .0.join(", "))]
pub struct UnknownQid(pub Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Grailqa,
    Graphq,
    Webqsp,
    Fixture,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Grailqa => "grailqa",
            Source::Graphq => "graphq",
            Source::Webqsp => "webqsp",
            Source::Fixture => "fixture",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// One question with its gold logical form and golden linked entities.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub qid: String,
    pub question: String,
    pub gold_sexpr: SExpr,
    pub entities: Vec<(String, String)>,
    pub source: Source,
    pub split: Split,
}

#[derive(Debug, Serialize, Deserialize)]
struct ItemRecord {
    qid: String,
    question: String,
    sexpression: String,
    #[serde(default)]
    entities: Vec<(String, String)>,
    source: Source,
    split: Split,
}

/// Load a dataset: one JSON record per line with fields qid / question /
/// sexpression / entities / source / split.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetItem>, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn parse_dataset(text: &str, origin: &str) -> Result<Vec<DatasetItem>, DatasetError> {
    let mut items = Vec::new();
    let mut qids = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ItemRecord = serde_json::from_str(line).map_err(|e| DatasetError::Record {
            path: origin.to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let gold_sexpr = parse_sexpr(&record.sexpression).map_err(|e| DatasetError::Record {
            path: origin.to_string(),
            line: idx + 1,
            message: format!("gold form: {e}"),
        })?;
        if !gold_sexpr.is_ref_free() {
            return Err(DatasetError::Record {
                path: origin.to_string(),
                line: idx + 1,
                message: "gold form contains unresolved references".into(),
            });
        }
        if !qids.insert(record.qid.clone()) {
            return Err(DatasetError::DuplicateQid(record.qid));
        }
        items.push(DatasetItem {
            qid: record.qid,
            question: record.question,
            gold_sexpr,
            entities: record.entities,
            source: record.source,
            split: record.split,
        });
    }
    Ok(items)
}

pub fn write_dataset(items: &[DatasetItem], path: &Path) -> std::io::Result<()> {
    let mut out = String::new();
    for item in items {
        let record = ItemRecord {
            qid: item.qid.clone(),
            question: item.question.clone(),
            sexpression: item.gold_sexpr.to_string(),
            entities: item.entities.clone(),
            source: item.source,
            split: item.split,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// Exact match: semantic equivalence of the two forms.
pub fn exact_match(pred: &SExpr, gold: &SExpr) -> bool {
    semantic_equal(pred, gold)
}

/// F1 between answer sets. Two empty sets agree perfectly; exactly one
/// empty set scores zero.
pub fn answer_f1(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let overlap = pred.intersection(gold).count() as f64;
    if overlap == 0.0 {
        return 0.0;
    }
    let precision = overlap / pred.len() as f64;
    let recall = overlap / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Which reading of "unseen schema" the zero-shot filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroShotMode {
    /// Keep items whose gold form uses at least one schema item absent from
    /// training.
    #[default]
    AtLeastOne,
    /// Keep items whose gold schema items are all absent from training.
    Strict,
}

/// Test items whose gold schema items were unseen during training.
pub fn zero_shot_filter(
    test: &[DatasetItem],
    train: &[DatasetItem],
    mode: ZeroShotMode,
) -> Vec<DatasetItem> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for item in train {
        let items = item.gold_sexpr.schema_items();
        seen.extend(items.relations.iter().cloned());
        seen.extend(items.classes.iter().cloned());
    }
    test.iter()
        .filter(|item| {
            let used = item.gold_sexpr.schema_items();
            match mode {
                ZeroShotMode::AtLeastOne => used.iter_all().any(|name| !seen.contains(name)),
                ZeroShotMode::Strict => used.iter_all().all(|name| !seen.contains(name)),
            }
        })
        .cloned()
        .collect()
}

/// One prediction to score: a final form, or a recorded failure.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub qid: String,
    pub sexpr: Option<SExpr>,
    /// Pre-computed answers (from a remote run); evaluated locally when
    /// absent.
    pub answers: Option<BTreeSet<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRecord {
    qid: String,
    sexpression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answers: Option<Vec<String>>,
}

/// Predictions file: one JSON record per line, `sexpression` null for
/// failed items.
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(line).map_err(|e| DatasetError::Record {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        let sexpr = match record.sexpression {
            // Unparseable predictions count as failures, not load errors.
            Some(text) => parse_sexpr(&text).ok(),
            None => None,
        };
        out.push(Prediction {
            qid: record.qid,
            sexpr,
            answers: record.answers.map(|a| a.into_iter().collect()),
        });
    }
    Ok(out)
}

pub fn write_predictions(predictions: &[Prediction], path: &Path) -> std::io::Result<()> {
    let mut out = String::new();
    for p in predictions {
        let record = PredictionRecord {
            qid: p.qid.clone(),
            sexpression: p.sexpr.as_ref().map(|e| e.to_string()),
            answers: p.answers.as_ref().map(|a| a.iter().cloned().collect()),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ItemResult {
    pub qid: String,
    pub em: bool,
    pub f1: f64,
    pub outcome: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Aggregate {
    pub count: usize,
    pub em_pct: f64,
    pub f1_pct: f64,
}

fn aggregate(items: &[&ItemResult]) -> Aggregate {
    let count = items.len();
    if count == 0 {
        return Aggregate { count: 0, em_pct: 0.0, f1_pct: 0.0 };
    }
    let em = items.iter().filter(|i| i.em).count() as f64;
    let f1: f64 = items.iter().map(|i| i.f1).sum();
    Aggregate {
        count,
        em_pct: 100.0 * em / count as f64,
        f1_pct: 100.0 * f1 / count as f64,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub items: Vec<ItemResult>,
    pub overall: Aggregate,
    pub per_source: BTreeMap<String, Aggregate>,
    /// Number of items retained by the zero-shot filter, when one ran.
    pub zero_shot_count: Option<usize>,
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8}", "source", "count", "em", "f1");
        for (source, agg) in &self.per_source {
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>8.1} {:>8.1}",
                source, agg.count, agg.em_pct, agg.f1_pct
            );
        }
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>8.1} {:>8.1}",
            "overall", self.overall.count, self.overall.em_pct, self.overall.f1_pct
        );
        if let Some(n) = self.zero_shot_count {
            let _ = writeln!(out, "zero-shot items: {n}");
        }
        out
    }
}

/// Where answers come from when scoring.
pub enum AnswerBackend<'g> {
    Local(&'g KnowledgeGraph),
    /// A SPARQL endpoint receiving compiled queries.
    Remote { endpoint: String },
}

impl AnswerBackend<'_> {
    fn answers_for(&self, expr: &SExpr) -> Option<BTreeSet<String>> {
        match self {
            AnswerBackend::Local(graph) => {
                evaluate(expr, graph).ok().map(|d| d.answer_strings())
            }
            AnswerBackend::Remote { endpoint } => {
                let schema = crate::kg::SchemaView::default();
                let query = crate::kg::compile_sparql(expr, &schema).ok()?;
                crate::kg::execute_remote(&query, endpoint).ok()
            }
        }
    }
}

/// Score a prediction set against a dataset. Items without a prediction or
/// with an unparseable/unevaluable one count as wrong, not as excluded.
pub fn evaluate_run(
    predictions: &[Prediction],
    dataset: &[DatasetItem],
    backend: &AnswerBackend<'_>,
) -> Result<EvalReport, UnknownQid> {
    let by_qid: BTreeMap<&str, &DatasetItem> =
        dataset.iter().map(|i| (i.qid.as_str(), i)).collect();
    let unknown: Vec<String> = predictions
        .iter()
        .filter(|p| !by_qid.contains_key(p.qid.as_str()))
        .map(|p| p.qid.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(UnknownQid(unknown));
    }
    let predictions_by_qid: BTreeMap<&str, &Prediction> =
        predictions.iter().map(|p| (p.qid.as_str(), p)).collect();
    let mut items = Vec::new();
    for item in dataset {
        let result = match predictions_by_qid.get(item.qid.as_str()) {
            None => ItemResult {
                qid: item.qid.clone(),
                em: false,
                f1: 0.0,
                outcome: "missing".into(),
            },
            Some(pred) => match &pred.sexpr {
                None => ItemResult {
                    qid: item.qid.clone(),
                    em: false,
                    f1: 0.0,
                    outcome: "failure".into(),
                },
                Some(expr) => {
                    let em = exact_match(expr, &item.gold_sexpr);
                    let f1 = if em {
                        // Semantically equal forms denote the same answers.
                        1.0
                    } else {
                        let gold_answers = backend.answers_for(&item.gold_sexpr);
                        let pred_answers = pred
                            .answers
                            .clone()
                            .or_else(|| backend.answers_for(expr));
                        match (pred_answers, gold_answers) {
                            (Some(p), Some(g)) => answer_f1(&p, &g),
                            _ => 0.0,
                        }
                    };
                    ItemResult { qid: item.qid.clone(), em, f1, outcome: "scored".into() }
                }
            },
        };
        items.push(result);
    }
    let overall = aggregate(&items.iter().collect::<Vec<_>>());
    let mut per_source: BTreeMap<String, Vec<&ItemResult>> = BTreeMap::new();
    for (item, result) in dataset.iter().zip(&items) {
        per_source.entry(item.source.name().to_string()).or_default().push(result);
    }
    let per_source = per_source
        .into_iter()
        .map(|(source, rs)| (source, aggregate(&rs)))
        .collect();
    Ok(EvalReport { items, overall, per_source, zero_shot_count: None })
}
