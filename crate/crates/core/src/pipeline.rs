//! Config-driven end-to-end runs writing artifacts plus a manifest of
//! their digests.
//!
//! Every stage draws its randomness from a named sub-seed of the master
//! seed, so any stage can be rerun on its own and reproduce the artifacts
//! of a full run.

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::experiments::realtime::Predictor;
use crate::experiments::{
    build_pool, offline_partition, run_realtime, run_repetitions, Composition, Experiment, RealTimeConfig,
    RealTimeMode, RealTimeRow, Report, RepetitionSpec, SelectionSummary, Selector, TestPool,
};
use crate::features::{full_road_dataset, segment_dataset, FeatureConfig};
use crate::learn::{
    evaluate, rank_features, train, Classifier, Dataset, EvalReport, FeatureSet, LearnConfig, ModelKind, RankMethod,
    RankedFeature,
};
use crate::par::Exec;
use crate::rng;
use crate::road::{LabeledTest, TestCase};
use crate::scenario::{generate, GeneratorConfig};
use crate::sim::{label_batch, DriverConfig};

pub const TOOL_NAME: &str = "scissor";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Label,
    Extract,
    Train,
    Fix,
    Reach,
    Realtime,
    Rank,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Generate,
        Stage::Label,
        Stage::Extract,
        Stage::Train,
        Stage::Fix,
        Stage::Reach,
        Stage::Realtime,
        Stage::Rank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Label => "label",
            Stage::Extract => "extract",
            Stage::Train => "train",
            Stage::Fix => "fix",
            Stage::Reach => "reach",
            Stage::Realtime => "realtime",
            Stage::Rank => "rank",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("stage {stage} failed: {message}")]
    StageFailure {
        stage: Stage,
        message: String,
        path: Option<PathBuf>,
    },
}

impl PipelineError {
    fn stage(stage: Stage, e: impl fmt::Display) -> PipelineError {
        PipelineError::StageFailure { stage, message: e.to_string(), path: None }
    }

    fn at(stage: Stage, path: &Path, e: impl fmt::Display) -> PipelineError {
        PipelineError::StageFailure {
            stage,
            message: format!("{}: {e}", path.display()),
            path: Some(path.to_path_buf()),
        }
    }

    /// Machine-readable form for error output.
    pub fn record(&self) -> serde_json::Value {
        match self {
            PipelineError::ConfigInvalid(m) => serde_json::json!({
                "error": "config_invalid",
                "message": m,
            }),
            PipelineError::StageFailure { stage, message, path } => serde_json::json!({
                "error": "stage_failure",
                "stage": stage.name(),
                "message": message,
                "path": path.as_ref().map(|p| p.display().to_string()),
            }),
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateStage {
    pub count: usize,
    pub generator: GeneratorConfig,
}

impl Default for GenerateStage {
    fn default() -> Self {
        GenerateStage { count: 5000, generator: GeneratorConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelStage {
    pub driver: DriverConfig,
    /// tests.json to label instead of the generate stage output.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractStage {
    pub set: FeatureSet,
    pub features: FeatureConfig,
    pub input: Option<PathBuf>,
}

impl Default for ExtractStage {
    fn default() -> Self {
        ExtractStage { set: FeatureSet::FullRoad, features: FeatureConfig::default(), input: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainStage {
    pub model: ModelKind,
    pub learn: LearnConfig,
    /// Per-class training rows as a share of the minority class.
    pub train_share: f64,
    pub input: Option<PathBuf>,
}

impl Default for TrainStage {
    fn default() -> Self {
        TrainStage { model: ModelKind::Logistic, learn: LearnConfig::default(), train_share: 0.8, input: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionStage {
    /// Suite size S for FIX, unsafe quota N for REACH.
    pub target: usize,
    pub reps: usize,
    pub pools: Vec<Composition>,
    pub model: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl Default for SelectionStage {
    fn default() -> Self {
        SelectionStage {
            target: 10,
            reps: 30,
            pools: Composition::standard().to_vec(),
            model: None,
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RealtimeStage {
    pub modes: Vec<RealTimeMode>,
    /// Independent sessions per mode.
    pub runs: usize,
    pub config: RealTimeConfig,
    pub model: Option<PathBuf>,
}

impl Default for RealtimeStage {
    fn default() -> Self {
        RealtimeStage {
            modes: vec![RealTimeMode::Baseline, RealTimeMode::PreTrained, RealTimeMode::Adaptive],
            runs: 1,
            config: RealTimeConfig::default(),
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankStage {
    pub methods: Vec<RankMethod>,
    /// features.csv to rank instead of the extract stage output.
    pub input: Option<PathBuf>,
}

impl Default for RankStage {
    fn default() -> Self {
        RankStage { methods: vec![RankMethod::InfoGain, RankMethod::Correlation], input: None }
    }
}

fn all_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub generate: GenerateStage,
    #[serde(default)]
    pub label: LabelStage,
    #[serde(default)]
    pub extract: ExtractStage,
    #[serde(default)]
    pub train: TrainStage,
    #[serde(default)]
    pub fix: SelectionStage,
    #[serde(default)]
    pub reach: SelectionStage,
    #[serde(default)]
    pub realtime: RealtimeStage,
    #[serde(default)]
    pub rank: RankStage,
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: PipelineConfig = serde_json::from_str(s).map_err(|e| PipelineError::ConfigInvalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::ConfigInvalid(m));
        if self.stages.is_empty() {
            return bad("no stages enabled".into());
        }
        if self.generate.count == 0 {
            return bad("generate.count must be positive".into());
        }
        if let Err(e) = self.generate.generator.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.label.driver.validate() {
            return bad(e.to_string());
        }
        if self.extract.set == FeatureSet::Custom {
            return bad("extract.set must be full_road or segment".into());
        }
        for (name, s) in [("fix", &self.fix), ("reach", &self.reach)] {
            if s.target == 0 || s.reps == 0 || s.pools.is_empty() {
                return bad(format!("{name} needs a positive target, reps >= 1 and at least one pool"));
            }
        }
        if self.realtime.runs == 0 || !(self.realtime.config.budget_s > 0.0) {
            return bad("realtime needs runs >= 1 and a positive budget".into());
        }
        Ok(())
    }

    /// The configuration actually used: stage seeds are derived from the
    /// master seed and the output directory is left out.
    pub fn effective(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.out_dir = None;
        c.stages.sort();
        c.stages.dedup();
        c.generate.generator.seed = rng::derive(self.seed, "generate");
        c.label.driver.noise_seed = rng::derive(self.seed, "noise");
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub config: PipelineConfig,
    pub stages: Vec<Stage>,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
    /// From SOURCE_DATE_EPOCH when set; otherwise absent so reruns stay
    /// byte-identical.
    pub created: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path, label: &str) -> std::io::Result<FileDigest> {
    let bytes = fs::read(path)?;
    Ok(FileDigest { path: label.to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, String> {
    let f = fs::File::open(path).map_err(|e| e.to_string())?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| e.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Ranking of one method, as written to ranking.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: RankMethod,
    pub threshold: f64,
    pub features: Vec<RankedFeature>,
}

pub fn write_ranking_csv<W: Write>(w: W, rankings: &[Ranking]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["method", "rank", "feature", "score", "above_threshold"])?;
    for r in rankings {
        for f in &r.features {
            wr.write_record([
                r.method.to_string(),
                f.rank.to_string(),
                f.feature.clone(),
                f.score.to_string(),
                f.above_threshold.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Held-out evaluation written next to the trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub model: ModelKind,
    pub train_rows: usize,
    pub held_out_rows: usize,
    pub held_out: EvalReport,
}

/// Build the feature dataset of a labeled corpus.
pub fn dataset_for(set: FeatureSet, labeled: &[LabeledTest], provenance: &str, fc: &FeatureConfig) -> Dataset {
    match set {
        FeatureSet::Segment => segment_dataset(labeled, provenance),
        _ => full_road_dataset(labeled, provenance, fc),
    }
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    base: &'a Path,
    out: PathBuf,
    inputs: Vec<FileDigest>,
    artifacts: Vec<FileDigest>,
    tests: Option<Vec<TestCase>>,
    labeled: Option<Vec<LabeledTest>>,
    dataset: Option<Dataset>,
    model: Option<Classifier>,
}

impl Run<'_> {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base.join(p) }
    }

    /// Read a JSON input: an explicit path from the config, else the
    /// artifact of an earlier run in the output directory.
    fn input<T: DeserializeOwned>(&mut self, stage: Stage, explicit: Option<&PathBuf>, artifact: &str) -> Result<T> {
        let (path, label) = match explicit {
            Some(p) => (self.resolve(p), p.display().to_string()),
            None => (self.out.join(artifact), artifact.to_string()),
        };
        let v = read_json(&path).map_err(|e| PipelineError::at(stage, &path, e))?;
        self.record_input(stage, &path, &label)?;
        Ok(v)
    }

    fn record_input(&mut self, stage: Stage, path: &Path, label: &str) -> Result<()> {
        let d = digest_file(path, label).map_err(|e| PipelineError::at(stage, path, e))?;
        self.inputs.push(d);
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, stage: Stage, name: &str, value: &T) -> Result<()> {
        let path = self.out.join(name);
        write_json(&path, value).map_err(|e| PipelineError::at(stage, &path, e))?;
        self.finish_artifact(stage, name)
    }

    fn emit_with(&mut self, stage: Stage, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), String>) -> Result<()> {
        let path = self.out.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| PipelineError::at(stage, &path, e))?;
        fs::write(&path, &buf).map_err(|e| PipelineError::at(stage, &path, e))?;
        self.finish_artifact(stage, name)
    }

    fn finish_artifact(&mut self, stage: Stage, name: &str) -> Result<()> {
        let path = self.out.join(name);
        let d = digest_file(&path, name).map_err(|e| PipelineError::at(stage, &path, e))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(d);
        Ok(())
    }

    fn labeled(&mut self, stage: Stage, explicit: Option<&PathBuf>) -> Result<Vec<LabeledTest>> {
        if explicit.is_none() {
            if let Some(l) = &self.labeled {
                return Ok(l.clone());
            }
        }
        self.input(stage, explicit, "labeled.json")
    }

    fn model(&mut self, stage: Stage, explicit: Option<&PathBuf>) -> Result<Classifier> {
        if explicit.is_none() {
            if let Some(m) = &self.model {
                return Ok(m.clone());
            }
        }
        let (path, label) = match explicit {
            Some(p) => (self.resolve(p), p.display().to_string()),
            None => (self.out.join("model.json"), "model.json".to_string()),
        };
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::at(stage, &path, e))?;
        let m = Classifier::from_json(&text).map_err(|e| PipelineError::at(stage, &path, e))?;
        self.record_input(stage, &path, &label)?;
        Ok(m)
    }

    fn partition(&self, stage: Stage, labeled: &[LabeledTest]) -> Result<(Vec<LabeledTest>, Vec<LabeledTest>)> {
        offline_partition(labeled, self.cfg.train.train_share, rng::derive(self.cfg.seed, "partition"))
            .map_err(|e| PipelineError::stage(stage, e))
    }

    fn provenance(&self) -> String {
        self.cfg.label.driver.name.clone()
    }
}

fn stage_generate(run: &mut Run) -> Result<()> {
    let st = Stage::Generate;
    let g = generate(&run.cfg.generate.generator, run.cfg.generate.count).map_err(|e| PipelineError::stage(st, e))?;
    log::info!("generated {} tests ({:.1}% drafts rejected)", g.tests.len(), 100.0 * g.rejection_rate());
    run.emit_json(st, "tests.json", &g.tests)?;
    run.tests = Some(g.tests);
    Ok(())
}

fn stage_label(run: &mut Run) -> Result<()> {
    let st = Stage::Label;
    let tests: Vec<TestCase> = match (&run.tests, &run.cfg.label.input) {
        (Some(t), None) => t.clone(),
        (_, explicit) => {
            let explicit = explicit.clone();
            run.input(st, explicit.as_ref(), "tests.json")?
        }
    };
    let labeled = label_batch(&tests, &run.cfg.label.driver).map_err(|e| PipelineError::stage(st, e))?;
    let u = labeled.iter().filter(|t| t.label.is_unsafe()).count();
    log::info!("labeled {} tests, {} unsafe", labeled.len(), u);
    run.emit_json(st, "labeled.json", &labeled)?;
    run.labeled = Some(labeled);
    Ok(())
}

fn stage_extract(run: &mut Run) -> Result<()> {
    let st = Stage::Extract;
    let explicit = run.cfg.extract.input.clone();
    let labeled = run.labeled(st, explicit.as_ref())?;
    let d = dataset_for(run.cfg.extract.set, &labeled, &run.provenance(), &run.cfg.extract.features);
    run.emit_with(st, "features.csv", |buf| d.write_csv(buf).map_err(|e| e.to_string()))?;
    run.dataset = Some(d);
    Ok(())
}

fn stage_train(run: &mut Run) -> Result<()> {
    let st = Stage::Train;
    let explicit = run.cfg.train.input.clone();
    let labeled = run.labeled(st, explicit.as_ref())?;
    let (train_side, held_out) = run.partition(st, &labeled)?;
    let set = run.cfg.extract.set;
    let fc = &run.cfg.extract.features;
    let prov = run.provenance();
    let train_set = dataset_for(set, &train_side, &prov, fc);
    let test_set = dataset_for(set, &held_out, &prov, fc);
    let tc = &run.cfg.train;
    let model = train(tc.model, &train_set, &tc.learn, rng::derive(run.cfg.seed, "train"))
        .map_err(|e| PipelineError::stage(st, e))?;
    let report = evaluate(&model, &test_set).map_err(|e| PipelineError::stage(st, e))?;
    log::info!("{} held-out accuracy {:.3}", tc.model, report.accuracy);
    let json = model.to_json().map_err(|e| PipelineError::stage(st, e))?;
    run.emit_with(st, "model.json", |buf| {
        buf.extend_from_slice(json.as_bytes());
        buf.push(b'\n');
        Ok(())
    })?;
    let summary = TrainSummary {
        model: tc.model,
        train_rows: train_set.len(),
        held_out_rows: test_set.len(),
        held_out: report,
    };
    run.emit_json(st, "eval.json", &summary)?;
    run.model = Some(model);
    Ok(())
}

fn stage_selection(run: &mut Run, st: Stage) -> Result<()> {
    let (experiment, sc, name) = match st {
        Stage::Fix => (Experiment::Fix, run.cfg.fix.clone(), "fix"),
        _ => (Experiment::Reach, run.cfg.reach.clone(), "reach"),
    };
    let labeled = run.labeled(st, sc.input.as_ref())?;
    let (_, held_out) = run.partition(st, &labeled)?;
    let model = run.model(st, sc.model.as_ref())?;
    let fc = run.cfg.extract.features;
    let mut report = Report::default();
    for (i, comp) in sc.pools.iter().enumerate() {
        let pool: TestPool = build_pool(&held_out, *comp, rng::derive_index(rng::derive(run.cfg.seed, "pool"), i as u64))
            .map_err(|e| PipelineError::stage(st, format!("pool {comp}: {e}")))?;
        let spec = RepetitionSpec {
            experiment,
            target: sc.target,
            reps: sc.reps,
            master_seed: rng::derive(run.cfg.seed, name),
        };
        let ml = Selector::model(&model, &pool, &fc).map_err(|e| PipelineError::stage(st, e))?;
        for sel in [Selector::baseline(), ml] {
            let reps = run_repetitions(Exec::default(), &pool, &sel, spec)
                .map_err(|e| PipelineError::stage(st, format!("pool {comp}: {e}")))?;
            let s = SelectionSummary::from_repetitions(&reps);
            log::info!(
                "{name} {} {}: mean unsafe ratio {:.3}, mean drawn {:.1}",
                s.pool,
                s.strategy,
                s.mean.unsafe_ratio,
                s.mean.drawn
            );
            report.selection.push(s);
        }
    }
    run.emit_json(st, &format!("{name}.json"), &report)?;
    run.emit_with(st, &format!("{name}.csv"), |buf| report.write_selection_csv(buf).map_err(|e| e.to_string()))
}

fn stage_realtime(run: &mut Run) -> Result<()> {
    let st = Stage::Realtime;
    let rc = run.cfg.realtime.clone();
    let pretrained = if rc.modes.contains(&RealTimeMode::PreTrained) {
        Some(Predictor::Model(run.model(st, rc.model.as_ref())?))
    } else {
        None
    };
    let mut report = Report::default();
    for mode in &rc.modes {
        for r in 0..rc.runs {
            let cfg = RealTimeConfig { mode: *mode, features: run.cfg.extract.features, feature_set: run.cfg.extract.set, ..rc.config.clone() };
            let seed = rng::derive_index(rng::derive(run.cfg.seed, "realtime"), r as u64);
            let out = run_realtime(
                &cfg,
                &run.cfg.generate.generator,
                &run.cfg.label.driver,
                &run.cfg.train.learn,
                pretrained.as_ref(),
                seed,
            )
            .map_err(|e| PipelineError::stage(st, e))?;
            log::info!(
                "realtime {:?} run {r}: {} generated, {} unsafe executed",
                mode,
                out.generated,
                out.executed_unsafe
            );
            report.realtime.push(RealTimeRow::from_run(&out));
        }
    }
    run.emit_json(st, "realtime.json", &report)?;
    run.emit_with(st, "realtime.csv", |buf| report.write_realtime_csv(buf).map_err(|e| e.to_string()))
}

fn stage_rank(run: &mut Run) -> Result<()> {
    let st = Stage::Rank;
    let d = match (&run.dataset, &run.cfg.rank.input) {
        (Some(d), None) => d.clone(),
        (_, explicit) => {
            let (path, label) = match explicit {
                Some(p) => (run.resolve(p), p.display().to_string()),
                None => (run.out.join("features.csv"), "features.csv".to_string()),
            };
            let f = fs::File::open(&path).map_err(|e| PipelineError::at(st, &path, e))?;
            let d = Dataset::read_csv(BufReader::new(f)).map_err(|e| PipelineError::at(st, &path, e))?;
            run.record_input(st, &path, &label)?;
            d
        }
    };
    let rankings = run
        .cfg
        .rank
        .methods
        .iter()
        .map(|&m| {
            rank_features(&d, m)
                .map(|features| Ranking { method: m, threshold: m.threshold(), features })
                .map_err(|e| PipelineError::stage(st, e))
        })
        .collect::<Result<Vec<_>>>()?;
    run.emit_json(st, "ranking.json", &rankings)?;
    run.emit_with(st, "ranking.csv", |buf| write_ranking_csv(buf, &rankings).map_err(|e| e.to_string()))
}

/// Run the enabled stages in canonical order. Relative input paths are
/// resolved against `base`; artifacts and the manifest go to `out_dir`.
pub fn run_pipeline(config: &PipelineConfig, base: &Path, out_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    let cfg = config.effective();
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::at(cfg.stages[0], out_dir, e))?;
    let mut run = Run {
        cfg: &cfg,
        base,
        out: out_dir.to_path_buf(),
        inputs: Vec::new(),
        artifacts: Vec::new(),
        tests: None,
        labeled: None,
        dataset: None,
        model: None,
    };
    for &stage in &cfg.stages {
        log::info!("stage {stage}");
        match stage {
            Stage::Generate => stage_generate(&mut run)?,
            Stage::Label => stage_label(&mut run)?,
            Stage::Extract => stage_extract(&mut run)?,
            Stage::Train => stage_train(&mut run)?,
            Stage::Fix | Stage::Reach => stage_selection(&mut run, stage)?,
            Stage::Realtime => stage_realtime(&mut run)?,
            Stage::Rank => stage_rank(&mut run)?,
        }
    }
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        master_seed: cfg.seed,
        stages: cfg.stages.clone(),
        inputs: run.inputs,
        artifacts: run.artifacts,
        created: std::env::var("SOURCE_DATE_EPOCH").ok(),
        config: cfg.clone(),
    };
    let path = out_dir.join("manifest.json");
    write_json(&path, &manifest).map_err(|e| PipelineError::at(*cfg.stages.last().unwrap(), &path, e))?;
    Ok(manifest)
}

/// Load a config file and run it; `out_dir` overrides the config's.
pub fn pipeline(config_path: &Path, out_dir: Option<&Path>) -> Result<RunManifest> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| PipelineError::ConfigInvalid(format!("{}: {e}", config_path.display())))?;
    let cfg = PipelineConfig::from_json(&text)?;
    let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = match (out_dir, &cfg.out_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => base.join("out"),
    };
    run_pipeline(&cfg, &base, &out)
}
