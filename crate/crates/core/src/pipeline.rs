//! End-to-end runs: load or simulate → exclude → impute → discover →
//! effects → chronology → compare → falsify, writing every artifact to one
//! output directory together with a manifest of content hashes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bayesnet::{fit_cpts, Dag};
use crate::causal::{effects_for_dag, EffectsConfig};
use crate::chronology::{
    build_chronology, compare_models, consensus_edges, falsify, strong_causal_relations, write_scores_csv,
    ConsensusSummary, FalsificationVerdict, FalsifyConfig, ModelScore,
};
use crate::dataset::{exclude_events, load_reads, missingness_profile, write_reads, EventMatrix, TokenSchema};
use crate::discovery::{learn, Algorithm, LearnerConfig};
use crate::imputation::{em_impute, ConvergenceReport, EmConfig, InitialMethod};
use crate::scenario::{simulate, ScenarioSpec};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("stage '{stage}' failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Path(PathBuf),
    Scenario(ScenarioSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputationSettings {
    pub initial: InitialMethod,
    pub learner: Algorithm,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ImputationSettings {
    fn default() -> Self {
        Self {
            initial: InitialMethod::Mode,
            learner: Algorithm::Hc,
            tol: 0.01,
            max_iter: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceModel {
    pub name: String,
    pub path: PathBuf,
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Hc, Algorithm::Pc, Algorithm::Lingam, Algorithm::NotearsStability]
}

fn default_ess() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputSource,
    #[serde(default)]
    pub exclude_events: Vec<String>,
    #[serde(default)]
    pub imputation: ImputationSettings,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub discovery: LearnerConfig,
    #[serde(default)]
    pub effects: EffectsConfig,
    #[serde(default)]
    pub reference_models: Vec<ReferenceModel>,
    #[serde(default)]
    pub falsify: FalsifyConfig,
    /// CPT prior strength used by every fit.
    #[serde(default = "default_ess")]
    pub ess: f64,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: InputSource, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input,
            exclude_events: Vec::new(),
            imputation: ImputationSettings::default(),
            algorithms: default_algorithms(),
            discovery: LearnerConfig::default(),
            effects: EffectsConfig::default(),
            reference_models: Vec::new(),
            falsify: FalsifyConfig::default(),
            ess: default_ess(),
            seed: 0,
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is serialisable")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Invalid(m));
        if let InputSource::Path(p) = &self.input {
            if !p.is_file() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let unique: BTreeSet<_> = self.algorithms.iter().collect();
        if unique.len() != self.algorithms.len() {
            return bad("algorithms must not repeat".into());
        }
        let mut names: BTreeSet<String> = self.algorithms.iter().map(|a| a.to_string()).collect();
        for r in &self.reference_models {
            let valid = !r.name.is_empty()
                && r.name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
            if !valid {
                return bad(format!("reference model name {:?} must use [A-Za-z0-9_.-]", r.name));
            }
            if !names.insert(r.name.clone()) {
                return bad(format!("model name {:?} is used twice", r.name));
            }
            if !r.path.is_file() {
                return bad(format!("reference model file {} does not exist", r.path.display()));
            }
        }
        if !(self.ess >= 0.0) || !(self.imputation.tol >= 0.0) || self.imputation.max_iter == 0 {
            return bad("ess and tol must be ≥ 0, max_iter ≥ 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config is serialisable").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    /// `None` for user-supplied reference models.
    pub algorithm: Option<Algorithm>,
    pub edges: Vec<(String, String)>,
    pub order_forced: Vec<(String, String)>,
    pub chronology: Option<Vec<(String, String)>>,
    pub validated_relations: Option<usize>,
    pub verdict: FalsificationVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub events: Vec<String>,
    pub n_rows: usize,
    pub missing_cells: usize,
    pub imputation: ConvergenceReport,
    pub models: Vec<ModelReport>,
    pub scores: Vec<ModelScore>,
    pub consensus: ConsensusSummary,
}

struct Pending {
    algorithm: Option<Algorithm>,
    order_forced: Vec<(String, String)>,
    chronology: Option<Vec<(String, String)>>,
    validated_relations: Option<usize>,
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, file: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        fs::write(self.dir.join(file), bytes).map_err(stage("write"))?;
        self.artifacts.push(Artifact {
            file: file.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(value).map_err(stage("write"))?;
        text.push('\n');
        self.put(file, text.as_bytes())
    }
}

fn matrix_csv(m: &EventMatrix) -> Result<Vec<u8>, PipelineError> {
    let mut buf = Vec::new();
    write_reads(m, &mut buf, b',').map_err(stage("write"))?;
    Ok(buf)
}

fn load_input(cfg: &PipelineConfig, out: &mut Writer) -> Result<EventMatrix, PipelineError> {
    match &cfg.input {
        InputSource::Path(p) => load_reads(p, &TokenSchema::default()).map_err(stage("load")),
        InputSource::Scenario(spec) => {
            let sim = simulate(spec).map_err(stage("simulate"))?;
            out.put("data.raw.csv", &matrix_csv(&sim.data)?)?;
            out.json("truth.json", &sim.truth)?;
            Ok(sim.data)
        }
    }
}

/// Runs every stage, writing artifacts into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(stage("setup"))?;
    let mut out = Writer {
        dir: cfg.output_dir.clone(),
        artifacts: Vec::new(),
    };
    let seed = cfg.seed;

    let raw = load_input(cfg, &mut out)?;
    let excluded: BTreeSet<String> = cfg.exclude_events.iter().cloned().collect();
    let data = exclude_events(&raw, &excluded).map_err(stage("exclude"))?;
    out.json("missingness.json", &missingness_profile(&data).report())?;
    log::info!("loaded {} rows × {} events", data.n_rows(), data.n_cols());

    let em = EmConfig {
        initial: cfg.imputation.initial,
        algorithm: cfg.imputation.learner,
        learner: cfg.discovery.clone(),
        max_iter: cfg.imputation.max_iter,
        tol: cfg.imputation.tol,
        ess: cfg.ess,
    };
    let imputed = em_impute(&data, &em, derive_seed(seed, "impute", 0)).map_err(stage("impute"))?;
    let completed = imputed.completed.clone();
    out.put("data.imputed.csv", &matrix_csv(&completed)?)?;
    out.json("imputation.json", &imputed.report())?;

    let mut models: Vec<(String, Dag)> = Vec::new();
    let mut reports = Vec::new();
    for (k, &algo) in cfg.algorithms.iter().enumerate() {
        let name = algo.to_string();
        log::info!("discovery: {name}");
        let learned =
            learn(&completed, algo, &cfg.discovery, derive_seed(seed, "discover", k as u64)).map_err(stage("discover"))?;
        let dag = learned.dag;
        out.put(&format!("dag.{name}.edges"), dag.to_edge_list().as_bytes())?;
        out.put(&format!("dag.{name}.dot"), dag.to_dot().as_bytes())?;
        if let Some(rep) = &learned.stability {
            out.json(&format!("stability.{name}.json"), rep)?;
        }

        let bn = fit_cpts(&dag, &completed, cfg.ess).map_err(stage("effects"))?;
        let table = effects_for_dag(&bn, &completed, &cfg.effects, derive_seed(seed, "effects", k as u64));
        let mut csv = Vec::new();
        table.write_csv(&mut csv).map_err(stage("effects"))?;
        out.put(&format!("effects.{name}.csv"), &csv)?;
        out.json(&format!("effects.{name}.json"), &table)?;

        let strong = strong_causal_relations(&table, &dag);
        let tree = build_chronology(&dag, &strong).map_err(stage("chronology"))?;
        out.put(&format!("chronology.{name}.dot"), tree.to_dot().as_bytes())?;
        out.put(&format!("chronology.{name}.edges"), tree.to_edge_list().as_bytes())?;
        out.json(&format!("chronology.{name}.json"), &tree)?;

        reports.push(Pending {
            algorithm: Some(algo),
            order_forced: learned.order_forced,
            chronology: Some(tree.edge_pairs()),
            validated_relations: Some(table.validated().count()),
        });
        models.push((name, dag));
    }
    let consensus = consensus_edges(&models.iter().map(|(_, g)| g.clone()).collect::<Vec<_>>());
    out.json("consensus.json", &consensus)?;

    for r in &cfg.reference_models {
        let text = fs::read_to_string(&r.path).map_err(stage("compare"))?;
        let dag = Dag::from_edge_list(&text).map_err(stage("compare"))?;
        reports.push(Pending {
            algorithm: None,
            order_forced: Vec::new(),
            chronology: None,
            validated_relations: None,
        });
        models.push((r.name.clone(), dag));
    }
    let scores = compare_models(&models, &completed, cfg.ess).map_err(stage("compare"))?;
    let mut csv = Vec::new();
    write_scores_csv(&scores, &mut csv).map_err(stage("compare"))?;
    out.put("scores.csv", &csv)?;

    let mut finished = Vec::with_capacity(models.len());
    for (k, ((name, dag), p)) in models.iter().zip(reports).enumerate() {
        let verdict = falsify(dag, &completed, &cfg.falsify, derive_seed(seed, "falsify", k as u64))
            .map_err(stage("falsify"))?;
        out.json(&format!("falsify.{name}.json"), &verdict)?;
        finished.push(ModelReport {
            name: name.clone(),
            algorithm: p.algorithm,
            edges: dag.edge_labels(),
            order_forced: p.order_forced,
            chronology: p.chronology,
            validated_relations: p.validated_relations,
            verdict,
        });
    }

    let report = RunReport {
        seed,
        events: completed.columns().to_vec(),
        n_rows: completed.n_rows(),
        missing_cells: data.missing_count(),
        imputation: imputed.report(),
        models: finished,
        scores,
        consensus,
    };
    out.json("report.json", &report)?;
    let mut artifacts = out.artifacts.clone();
    artifacts.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = Manifest {
        config: cfg.clone(),
        config_sha256: cfg.hash(),
        seed,
        artifacts,
    };
    out.json("manifest.json", &manifest)?;
    Ok(report)
}

/// Re-runs the configuration recorded in a manifest, optionally into another directory.
pub fn rerun_manifest(path: &Path, output_dir: Option<&Path>) -> Result<RunReport, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::Invalid(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| PipelineError::Invalid(e.to_string()))?;
    let mut cfg = manifest.config;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir.to_path_buf();
    }
    run_pipeline(&cfg)
}
