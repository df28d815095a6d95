//! Dataset loading, run configuration and the end-to-end benchmark loop.
//!
//! Each question goes through the translator path (generate a query, repair
//! it, execute it) and the searcher path (retrieve and read), depending on
//! the configured workflows. The two answer sets are fused and scored. A
//! failure in one question is recorded on its record and never aborts the
//! run.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerSet;
use crate::err::{correct_cql, CorrectionResult, ErrConfig, ErrError};
use crate::fusion::{fuse, FusionConfig, FusionError, FusionRule};
use crate::gateway::{Gateway, GatewayError, HttpBackend, HttpConfig, ModelBackend, ModelRequest, StubBackend, TranslationTableError};
use crate::kg::{KgError, KnowledgeGraph};
use crate::metrics::{aggregate, AnswerSource, EvaluationRecord, MetricsError, Report, Summary};
use crate::searcher::{answer_by_retrieval, DictionaryExtractor, Retrieval, SearchConfig, SearchError};
use crate::similarity::BigramDice;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error("graph {path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: KgError,
    },
    #[error(transparent)]
    Translations(#[from] TranslationTableError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Err(#[from] ErrError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// One benchmark question. `cql` is the gold query when annotated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cql: Option<String>,
    #[serde(default)]
    pub answers: AnswerSet,
}

/// Reads JSON lines; blank lines are skipped, corpus order is kept.
pub fn parse_dataset<R: BufRead>(source: R) -> Result<Vec<DatasetExample>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| PipelineError::Dataset {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let example: DatasetExample = serde_json::from_str(&line).map_err(|e| PipelineError::Dataset {
            line: line_no,
            message: e.to_string(),
        })?;
        if example.question.trim().is_empty() {
            return Err(PipelineError::Dataset {
                line: line_no,
                message: "empty question".into(),
            });
        }
        out.push(example);
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetExample>, PipelineError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_dataset(BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Stub {
        /// JSON-lines table with `question` and `cql` keys (translator only).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        translations: Option<PathBuf>,
    },
    Http(HttpConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Stub { translations: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Backends {
    pub translator: BackendConfig,
    pub selector: BackendConfig,
    pub reader: BackendConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Workflows {
    #[default]
    Both,
    Translator,
    Searcher,
}

impl Workflows {
    fn translator(self) -> bool {
        self != Workflows::Searcher
    }

    fn searcher(self) -> bool {
        self != Workflows::Translator
    }
}

impl std::str::FromStr for Workflows {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(Workflows::Both),
            "translator" => Ok(Workflows::Translator),
            "searcher" => Ok(Workflows::Searcher),
            other => Err(format!("unknown workflow selection {other:?}")),
        }
    }
}

fn default_concurrency() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub graph: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub err: ErrConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub backends: Backends,
    #[serde(default)]
    pub workflows: Workflows,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub searcher: SearchConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(graph: impl Into<PathBuf>) -> Self {
        Self {
            graph: graph.into(),
            dataset: None,
            err: ErrConfig::default(),
            fusion: FusionConfig::default(),
            backends: Backends::default(),
            workflows: Workflows::default(),
            concurrency: 1,
            searcher: SearchConfig::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config: PipelineConfig = serde_json::from_str(&text).map_err(|e| PipelineError::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate().map_err(|e| PipelineError::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.err.validate()?;
        self.fusion.validate()?;
        if self.concurrency == 0 {
            return Err(PipelineError::Config {
                path: self.base_dir.clone(),
                message: "concurrency must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Settings that influence results. The concurrency cap is left out so
    /// reports from different caps compare byte for byte.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).unwrap_or_default();
        if let Some(map) = value.as_object_mut() {
            map.remove("concurrency");
        }
        value
    }
}

/// Produces a query for a question.
pub trait Translator: Sync {
    fn translate(&self, question: &str) -> Result<String, GatewayError>;
}

impl Translator for Gateway {
    fn translate(&self, question: &str) -> Result<String, GatewayError> {
        Ok(self.generate(&ModelRequest::translate(question))?.text.trim().to_owned())
    }
}

fn build_backend(config: &BackendConfig, pipeline: &PipelineConfig) -> Result<Arc<dyn ModelBackend>, PipelineError> {
    Ok(match config {
        BackendConfig::Stub { translations: None } => Arc::new(StubBackend::default()),
        BackendConfig::Stub {
            translations: Some(path),
        } => Arc::new(StubBackend::load_translations(pipeline.resolve(path))?),
        BackendConfig::Http(http) => Arc::new(HttpBackend::new(http.clone())?),
    })
}

/// Outcome of the translator path for one question.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatorOutcome {
    pub generated: String,
    pub correction: Option<CorrectionResult>,
    pub answers: AnswerSet,
}

/// Loaded graph plus the three role gateways; shared read-only by all
/// questions of a run.
pub struct Engine {
    pub graph: Arc<KnowledgeGraph>,
    pub translator: Gateway,
    pub selector: Gateway,
    pub reader: Gateway,
    pub config: PipelineConfig,
}

impl Engine {
    pub fn from_config(config: &PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let graph_path = config.resolve(&config.graph);
        let graph = KnowledgeGraph::load_path(&graph_path).map_err(|source| PipelineError::Graph {
            path: graph_path,
            source,
        })?;
        Self::with_graph(graph, config)
    }

    pub fn with_graph(graph: KnowledgeGraph, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let gateway = |b: &BackendConfig| -> Result<Gateway, PipelineError> {
            Ok(Gateway::new(build_backend(b, config)?).with_concurrency(config.concurrency))
        };
        Ok(Self {
            translator: gateway(&config.backends.translator)?,
            selector: gateway(&config.backends.selector)?,
            reader: gateway(&config.backends.reader)?,
            graph: Arc::new(graph),
            config: config.clone(),
        })
    }

    /// Generates and repairs a query, then executes it. An empty generation
    /// gives an empty answer set without correction.
    pub fn translate(&self, question: &str, gold: Option<&AnswerSet>) -> Result<TranslatorOutcome, PipelineError> {
        let generated = self.translator.translate(question)?;
        if generated.is_empty() {
            return Ok(TranslatorOutcome {
                generated,
                correction: None,
                answers: AnswerSet::new(),
            });
        }
        let correction = correct_cql(
            question,
            &generated,
            &self.graph,
            &self.config.err,
            &self.selector,
            &BigramDice,
            gold,
        )?;
        Ok(TranslatorOutcome {
            answers: correction.best_answers.clone(),
            generated,
            correction: Some(correction),
        })
    }

    pub fn search(&self, question: &str) -> Result<Retrieval, SearchError> {
        answer_by_retrieval(question, &self.graph, &DictionaryExtractor, &self.reader, &self.config.searcher)
    }

    /// Runs the configured workflows on one example and scores the result.
    pub fn evaluate(&self, example: &DatasetExample) -> EvaluationRecord {
        let gold = &example.answers;
        let workflows = self.config.workflows;
        let mut warnings = Vec::new();
        let mut errors = Vec::new();

        let mut pred_cql = None;
        let translated = if workflows.translator() {
            match self.translate(&example.question, Some(gold)) {
                Ok(out) => {
                    match &out.correction {
                        Some(c) => {
                            warnings.extend(c.warnings.iter().cloned());
                            pred_cql = Some(c.best.clone());
                        }
                        None => warnings.push("translator produced no query".into()),
                    }
                    Some(out.answers)
                }
                Err(e) => {
                    errors.push(format!("translator: {e}"));
                    None
                }
            }
        } else {
            None
        };
        let searched = if workflows.searcher() {
            match self.search(&example.question) {
                Ok(r) => Some(r.answers),
                Err(e) => {
                    errors.push(format!("searcher: {e}"));
                    None
                }
            }
        } else {
            None
        };

        let (pred, source) = match (&translated, &searched) {
            (Some(s), Some(i)) => match fuse(&self.config.fusion, s, i, Some(gold)) {
                Ok(choice) => (choice.answers.clone(), Some(choice.source)),
                Err(e) => {
                    errors.push(format!("fusion: {e}"));
                    (AnswerSet::new(), None)
                }
            },
            (Some(s), None) => (s.clone(), Some(AnswerSource::Translator)),
            (None, Some(i)) => (i.clone(), Some(AnswerSource::Searcher)),
            (None, None) => (AnswerSet::new(), None),
        };

        let mut record = EvaluationRecord::new(&example.question, example.cql.clone(), pred_cql, gold.clone(), pred);
        record.source = source;
        record.translator_answers = translated;
        record.searcher_answers = searched;
        record.warnings = warnings;
        record.errors = errors;
        record
    }
}

/// Scores every example with a pool of `config.concurrency` workers.
/// Records keep corpus order regardless of scheduling.
pub fn run_examples(engine: &Engine, examples: &[DatasetExample]) -> Result<Report, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(engine.config.concurrency)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    let records: Vec<EvaluationRecord> = pool.install(|| examples.par_iter().map(|ex| engine.evaluate(ex)).collect());
    let mut report = aggregate(records)?;
    report.config = engine.config.snapshot();
    Ok(report)
}

pub fn run_benchmark(config: &PipelineConfig) -> Result<Report, PipelineError> {
    let dataset = config.dataset.as_ref().ok_or_else(|| PipelineError::Config {
        path: config.base_dir.clone(),
        message: "no dataset configured".into(),
    })?;
    let examples = load_dataset(config.resolve(dataset))?;
    let engine = Engine::from_config(config)?;
    run_examples(&engine, &examples)
}

/// Whether any question recorded an error.
pub fn has_question_errors(report: &Report) -> bool {
    report.records.iter().any(|r| !r.errors.is_empty())
}

/// Scores the workflow variants side by side: translator only, searcher
/// only, and both under each fusion rule.
pub fn ablation(config: &PipelineConfig) -> Result<BTreeMap<String, Summary>, PipelineError> {
    let dataset = config.dataset.as_ref().ok_or_else(|| PipelineError::Config {
        path: config.base_dir.clone(),
        message: "no dataset configured".into(),
    })?;
    let examples = load_dataset(config.resolve(dataset))?;
    let base = Engine::from_config(config)?;
    let variants = [
        ("translator", Workflows::Translator, config.fusion.rule),
        ("searcher", Workflows::Searcher, config.fusion.rule),
        ("both+dda", Workflows::Both, FusionRule::Dda),
        ("both+bna", Workflows::Both, FusionRule::Bna),
    ];
    let mut out = BTreeMap::new();
    for (name, workflows, rule) in variants {
        let mut cfg = config.clone();
        cfg.workflows = workflows;
        cfg.fusion.rule = rule;
        let engine = Engine {
            graph: Arc::clone(&base.graph),
            translator: base.translator.clone(),
            selector: base.selector.clone(),
            reader: base.reader.clone(),
            config: cfg,
        };
        out.insert(name.to_owned(), run_examples(&engine, &examples)?.summary);
    }
    Ok(out)
}
