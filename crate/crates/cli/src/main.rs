use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use scissor_core::experiments::realtime::Predictor;
use scissor_core::experiments::{
    build_pool, merge_reports, run_realtime, run_repetitions, Composition, Experiment, RealTimeConfig, RealTimeMode,
    RealTimeRow, Report, RepetitionSpec, SelectionSummary, Selector, TestPool,
};
use scissor_core::features::FeatureConfig;
use scissor_core::learn::{
    evaluate, oversample, rank_features, train, Classifier, Dataset, FeatureSet, LearnConfig, ModelKind, RankMethod,
};
use scissor_core::par::Exec;
use scissor_core::pipeline::{self, read_json, write_json, write_ranking_csv, PipelineError, Ranking};
use scissor_core::road::{LabeledTest, TestCase};
use scissor_core::rng;
use scissor_core::scenario::{generate, GeneratorConfig};
use scissor_core::sim::{label_batch, DriverConfig};

#[derive(Parser)]
#[command(name = "scissor", version, about = "Generate, label and select simulation-based driving tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Seed {
    /// Master seed; every random choice derives from it.
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random road tests.
    Generate {
        #[command(flatten)]
        seed: Seed,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Generator config (JSON); its seed is replaced by --seed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run tests on the surrogate simulator and record labels.
    Label {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        tests: PathBuf,
        /// Driver config (JSON).
        #[arg(long)]
        driver: Option<PathBuf>,
        /// Aggression factor, overriding the driver config.
        #[arg(long)]
        aggression: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn labeled tests into a feature table.
    Extract {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long, value_enum, default_value_t = SetArg::Full)]
        set: SetArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a feature table.
    Train {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "logistic")]
        model: ModelKind,
        /// Hyperparameters (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Duplicate minority rows until the classes balance.
        #[arg(long)]
        oversample: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on a feature table.
    Eval {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Rank features by information gain or correlation.
    Rank {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "infogain")]
        method: RankMethod,
        /// Output file; `.csv` writes a table, anything else JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a pool of a given class mix from labeled tests.
    Pool {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        labeled: PathBuf,
        /// Mix written safe/unsafe, e.g. 95/5.
        #[arg(long)]
        composition: Composition,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select a fixed-size suite from a pool.
    Fix {
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        sel: SelectionArgs,
        #[arg(long, default_value_t = 10)]
        suite_size: usize,
    },
    /// Execute until a number of unsafe tests is found.
    Reach {
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        sel: SelectionArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Generate, select and execute under a time budget.
    Realtime {
        #[command(flatten)]
        seed: Seed,
        #[arg(long, value_enum)]
        mode: Vec<ModeArg>,
        #[arg(long, default_value_t = 21_600.0)]
        budget_s: f64,
        /// Model consulted in pretrained mode.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Use the true label instead of a model in pretrained mode.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        aggression: Option<f64>,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Merge experiment reports into one.
    Report {
        #[command(flatten)]
        seed: Seed,
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Directory for selection.csv and realtime.csv.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Run the stages enabled in a config file and write a manifest.
    Pipeline {
        #[command(flatten)]
        seed: Seed,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Model-guided selector to compare against Baseline.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Also run a selector that knows every label.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    Full,
    Segment,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Baseline,
    Pretrained,
    Adaptive,
}

impl From<ModeArg> for RealTimeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => RealTimeMode::Baseline,
            ModeArg::Pretrained => RealTimeMode::PreTrained,
            ModeArg::Adaptive => RealTimeMode::Adaptive,
        }
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn save<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    write_json(path, v).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn read_features(path: &Path) -> Result<Dataset> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn read_model(path: &Path) -> Result<Classifier> {
    let s = fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    Classifier::from_json(&s).with_context(|| format!("reading {}", path.display()))
}

fn driver(path: Option<&Path>, aggression: Option<f64>, seed: u64) -> Result<DriverConfig> {
    let mut d = match (path, aggression) {
        (Some(p), _) => load::<DriverConfig>(p)?,
        (None, Some(af)) => DriverConfig::aggressive(af),
        (None, None) => DriverConfig::default(),
    };
    if let (Some(_), Some(af)) = (path, aggression) {
        d.aggression = af;
        d.name = format!("aggressive-af{af}");
    }
    d.noise_seed = rng::derive(seed, "noise");
    Ok(d)
}

fn write_report(r: &Report, out: &Path, csv: Option<&Path>) -> Result<()> {
    let mut w = create(out)?;
    w.write_all(r.to_json()?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    if let Some(csv) = csv {
        let w = create(csv)?;
        if r.realtime.is_empty() {
            r.write_selection_csv(w)?;
        } else {
            r.write_realtime_csv(w)?;
        }
    }
    Ok(())
}

fn selection(experiment: Experiment, target: usize, seed: u64, a: &SelectionArgs) -> Result<()> {
    let pool: TestPool = load(&a.pool)?;
    let fc = FeatureConfig::default();
    let mut selectors = vec![Selector::baseline()];
    if let Some(m) = &a.model {
        selectors.push(Selector::model(&read_model(m)?, &pool, &fc)?);
    }
    if a.oracle {
        selectors.push(Selector::oracle(&pool));
    }
    let spec = RepetitionSpec { experiment, target, reps: a.reps, master_seed: seed };
    let mut report = Report::default();
    for sel in &selectors {
        let reps = run_repetitions(Exec::default(), &pool, sel, spec)?;
        let s = SelectionSummary::from_repetitions(&reps);
        log::info!("{} {}: mean unsafe ratio {:.3}", s.strategy, s.pool, s.mean.unsafe_ratio);
        report.selection.push(s);
    }
    write_report(&report, &a.out, a.csv.as_deref())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { seed, count, config, out } => {
            let cfg = match config {
                Some(p) => load::<GeneratorConfig>(&p)?,
                None => GeneratorConfig::default(),
            };
            let g = generate(&cfg.with_seed(rng::derive(seed.seed, "generate")), count)?;
            log::info!("{} tests, {:.1}% drafts rejected", g.tests.len(), 100.0 * g.rejection_rate());
            save(&out, &g.tests)
        }
        Command::Label { seed, tests, driver: d, aggression, out } => {
            let tests: Vec<TestCase> = load(&tests)?;
            let labeled = label_batch(&tests, &driver(d.as_deref(), aggression, seed.seed)?)?;
            save(&out, &labeled)
        }
        Command::Extract { seed: _, labeled, set, out } => {
            let prov = labeled.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let labeled: Vec<LabeledTest> = load(&labeled)?;
            let set = match set {
                SetArg::Full => FeatureSet::FullRoad,
                SetArg::Segment => FeatureSet::Segment,
            };
            let d = pipeline::dataset_for(set, &labeled, &prov, &FeatureConfig::default());
            d.write_csv(create(&out)?)?;
            Ok(())
        }
        Command::Train { seed, features, model, config, oversample: os, out } => {
            let cfg = match config {
                Some(p) => load::<LearnConfig>(&p)?,
                None => LearnConfig::default(),
            };
            let mut d = read_features(&features)?;
            if os {
                d = oversample(&d, rng::derive(seed.seed, "oversample"))?;
            }
            let c = train(model, &d, &cfg, rng::derive(seed.seed, "train"))?;
            let mut w = create(&out)?;
            w.write_all(c.to_json()?.as_bytes())?;
            w.write_all(b"\n")?;
            w.flush()?;
            Ok(())
        }
        Command::Eval { seed: _, model, features, report } => {
            let r = evaluate(&read_model(&model)?, &read_features(&features)?)?;
            log::info!("accuracy {:.4}, unsafe f1 {:.4}", r.accuracy, r.unsafe_.f1);
            save(&report, &r)
        }
        Command::Rank { seed: _, features, method, out } => {
            let d = read_features(&features)?;
            let r = vec![Ranking { method, threshold: method.threshold(), features: rank_features(&d, method)? }];
            if out.extension().is_some_and(|e| e == "csv") {
                write_ranking_csv(create(&out)?, &r)?;
                Ok(())
            } else {
                save(&out, &r)
            }
        }
        Command::Pool { seed, labeled, composition, out } => {
            let labeled: Vec<LabeledTest> = load(&labeled)?;
            let p = build_pool(&labeled, composition, seed.seed)?;
            let (s, u) = p.counts();
            log::info!("pool {composition}: {s} safe, {u} unsafe");
            save(&out, &p)
        }
        Command::Fix { seed, sel, suite_size } => selection(Experiment::Fix, suite_size, seed.seed, &sel),
        Command::Reach { seed, sel, n } => selection(Experiment::Reach, n, seed.seed, &sel),
        Command::Realtime { seed, mode, budget_s, model, oracle, aggression, runs, out, csv } => {
            let modes = if mode.is_empty() { vec![ModeArg::Baseline] } else { mode };
            let pretrained = match (model, oracle) {
                (Some(_), true) => bail!("--model and --oracle are mutually exclusive"),
                (Some(p), false) => Some(Predictor::Model(read_model(&p)?)),
                (None, true) => Some(Predictor::Oracle),
                (None, false) => None,
            };
            let drv = driver(None, aggression, seed.seed)?;
            let mut report = Report::default();
            for m in modes {
                let cfg = RealTimeConfig { mode: m.into(), budget_s, ..RealTimeConfig::default() };
                for r in 0..runs {
                    let s = rng::derive_index(rng::derive(seed.seed, "realtime"), r as u64);
                    let out = run_realtime(
                        &cfg,
                        &GeneratorConfig::default(),
                        &drv,
                        &LearnConfig::default(),
                        pretrained.as_ref(),
                        s,
                    )?;
                    report.realtime.push(RealTimeRow::from_run(&out));
                }
            }
            write_report(&report, &out, csv.as_deref())
        }
        Command::Report { seed: _, inputs, out, csv_dir } => {
            let reports = inputs
                .iter()
                .map(|p| {
                    let s = fs::read_to_string(p).with_context(|| format!("opening {}", p.display()))?;
                    Report::from_json(&s).with_context(|| format!("reading {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let merged = merge_reports(&reports)?;
            write_report(&merged, &out, None)?;
            if let Some(dir) = csv_dir {
                merged.write_selection_csv(create(&dir.join("selection.csv"))?)?;
                merged.write_realtime_csv(create(&dir.join("realtime.csv"))?)?;
            }
            Ok(())
        }
        Command::Pipeline { seed, config, out_dir } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| PipelineError::ConfigInvalid(format!("{}: {e}", config.display())))?;
            let mut cfg = pipeline::PipelineConfig::from_json(&text)?;
            cfg.seed = seed.seed;
            let base = config.parent().unwrap_or(Path::new("")).to_path_buf();
            let out = match (out_dir, &cfg.out_dir) {
                (Some(o), _) => o,
                (None, Some(o)) => base.join(o),
                (None, None) => base.join("out"),
            };
            let m = pipeline::run_pipeline(&cfg, &base, &out)?;
            println!("{}", out.join("manifest.json").display());
            log::info!("{} artifacts written", m.artifacts.len());
            Ok(())
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate { .. } => "generate",
        Command::Label { .. } => "label",
        Command::Extract { .. } => "extract",
        Command::Train { .. } => "train",
        Command::Eval { .. } => "eval",
        Command::Rank { .. } => "rank",
        Command::Pool { .. } => "pool",
        Command::Fix { .. } => "fix",
        Command::Reach { .. } => "reach",
        Command::Realtime { .. } => "realtime",
        Command::Report { .. } => "report",
        Command::Pipeline { .. } => "pipeline",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCISSOR_LOG", "warn")).init();
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = match e.downcast_ref::<PipelineError>() {
                Some(p) => p.record(),
                None => serde_json::json!({
                    "error": "command_failed",
                    "command": name,
                    "message": format!("{e:#}"),
                }),
            };
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
