//! Command-line front end. `run` parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 for
//! invalid input (flags, files, invariants), 2 for runtime failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alsim::{self, ALConfig, Strategy};
use crate::classifier::{ClassifierConfig, ClassifierKind, LabelStore, LabeledMotivation, Query};
use crate::dataio::{self, LoadOptions, Meta};
use crate::error::{Error, Result};
use crate::estimation::{self, Estimator, McSemantics, Method, Pipeline, DEFAULT_VO_THRESHOLD};
use crate::metrics::{self, LabelConfusion};
use crate::model::{Dataset, Ranking, ValueOptionMatrix};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "valuepref", version, about = "Value preference estimation and active-learning simulation")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold annotation counts into a value-option matrix.
    BuildVo {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_VO_THRESHOLD)]
        threshold: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate every participant's value ranking.
    Estimate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        vo: VoSource,
        #[arg(long, default_value = "comb")]
        method: Method,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Position changes and mean positions of each method against method C.
    Compare {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        vo: VoSource,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate active learning and write learning curves.
    AlRun(AlRun),
    /// Generate a synthetic dataset with a ground-truth sidecar.
    Synth {
        #[command(flatten)]
        synth: SynthFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated F1 of a motivation classifier.
    ClassifyEval {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "bagofwords")]
        classifier: ClassifierKind,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Input {
    #[arg(long)]
    dataset: PathBuf,
    /// Drop invalid participants with a warning instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct VoSource {
    /// Value-option matrix file; built from annotations when absent.
    #[arg(long, conflicts_with = "threshold")]
    vo: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<u64>,
}

#[derive(Debug, Args)]
struct Knobs {
    #[arg(long, default_value = "prose")]
    mc_semantics: McSemantics,
    /// Stage order of the combined method, e.g. "MO>MC>TB".
    #[arg(long, default_value = "MO>MC>TB")]
    order: Pipeline,
}

#[derive(Debug, Args)]
struct AlRun {
    /// Dataset file; a synthetic dataset is generated when absent.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    lenient: bool,
    /// TOML experiment config. Defaults to $VALUEPREF_CONFIG, then
    /// ./valuepref.toml if present. Flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// disambiguation, uncertainty, random or all.
    #[arg(long, default_value = "all")]
    strategy: String,
    #[arg(long)]
    folds: Option<usize>,
    /// Warm-up fraction of each fold's non-test participants.
    #[arg(long)]
    warmup: Option<f64>,
    /// Batch fraction of each fold's non-test pool.
    #[arg(long)]
    batch: Option<f64>,
    #[arg(long)]
    batch_participants: Option<usize>,
    #[arg(long)]
    batch_motivations: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    vo_threshold: Option<u64>,
    /// Synthetic participant count when no dataset is given.
    #[arg(long, default_value_t = 1000)]
    participants: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthFlags {
    #[arg(long)]
    participants: Option<usize>,
    #[arg(long)]
    values: Option<usize>,
    #[arg(long)]
    options: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    vo_density: Option<f64>,
    #[arg(long)]
    personal_vo_drop: Option<f64>,
    #[arg(long)]
    max_options: Option<usize>,
    #[arg(long)]
    motivation_rate: Option<f64>,
    #[arg(long)]
    terse_fraction: Option<f64>,
    #[arg(long)]
    terse_motivation_rate: Option<f64>,
    /// Comma-separated weights of 0, 1, 2, ... labels per motivation.
    #[arg(long, value_delimiter = ',')]
    label_weights: Option<Vec<f64>>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    text_len_min: Option<usize>,
    #[arg(long)]
    text_len_max: Option<usize>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    tie_probability: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SynthFlags {
    fn config(self) -> SynthConfig {
        let d = SynthConfig::default();
        SynthConfig {
            participants: self.participants.unwrap_or(d.participants),
            values: self.values.unwrap_or(d.values),
            options: self.options.unwrap_or(d.options),
            budget: self.budget.unwrap_or(d.budget),
            vo_density: self.vo_density.unwrap_or(d.vo_density),
            personal_vo_drop: self.personal_vo_drop.unwrap_or(d.personal_vo_drop),
            max_options: self.max_options.unwrap_or(d.max_options),
            motivation_rate: self.motivation_rate.unwrap_or(d.motivation_rate),
            terse_fraction: self.terse_fraction.unwrap_or(d.terse_fraction),
            terse_motivation_rate: self.terse_motivation_rate.unwrap_or(d.terse_motivation_rate),
            label_weights: self.label_weights.unwrap_or(d.label_weights),
            vocab_size: self.vocab_size.unwrap_or(d.vocab_size),
            text_len_min: self.text_len_min.unwrap_or(d.text_len_min),
            text_len_max: self.text_len_max.unwrap_or(d.text_len_max),
            overlap: self.overlap.unwrap_or(d.overlap),
            tie_probability: self.tie_probability.unwrap_or(d.tie_probability),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

/// Parses `args` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::ValidationMany(all) = &e {
                for v in all {
                    eprintln!("  {v}");
                }
            }
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn load(input: &Input) -> Result<Dataset> {
    Ok(dataio::load_dataset_with(&input.dataset, LoadOptions { lenient: input.lenient })?.dataset)
}

fn resolve_vo(ds: &Dataset, src: &VoSource) -> Result<(ValueOptionMatrix, Meta)> {
    match &src.vo {
        Some(path) => Ok((
            dataio::read_vo(path, &ds.values, &ds.options)?,
            vec![("vo".into(), "from file".into())],
        )),
        None => {
            let t = src.threshold.unwrap_or(DEFAULT_VO_THRESHOLD);
            Ok((
                estimation::init_vo(&dataio::annotation_counts(ds), t),
                vec![("vo".into(), format!("annotation counts >= {t}"))],
            ))
        }
    }
}

fn estimator(method: Method, knobs: &Knobs) -> Estimator {
    Estimator {
        method,
        semantics: knobs.mc_semantics,
        pipeline: knobs.order.clone(),
    }
}

fn estimate_all(ds: &Dataset, vo: &ValueOptionMatrix, est: &Estimator) -> Result<Vec<estimation::EstimationResult>> {
    ds.participants.iter().map(|p| est.estimate_participant(vo, p)).collect()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::BuildVo { input, threshold, out } => {
            let ds = load(&input)?;
            let vo = estimation::init_vo(&dataio::annotation_counts(&ds), threshold);
            let meta = vec![("threshold".into(), threshold.to_string())];
            emit(out.as_deref(), &dataio::vo_to_csv(&vo, &ds.values, &ds.options, &meta))
        }
        Command::Estimate {
            input,
            vo,
            method,
            knobs,
            out,
        } => {
            let ds = load(&input)?;
            let (vo, mut meta) = resolve_vo(&ds, &vo)?;
            let est = estimator(method, &knobs);
            let results = estimate_all(&ds, &vo, &est)?;
            meta.push(("config".into(), dataio::config_snapshot(&est)));
            meta.push(("ties".into(), "values with equal utility share a group".into()));
            let rows = dataio::ranking_rows(&ds, &method.to_string(), &results);
            emit(out.as_deref(), &dataio::rankings_to_csv(&rows, &ds.values, &meta))
        }
        Command::Compare { input, vo, knobs, out } => {
            let ds = load(&input)?;
            let (vo, meta) = resolve_vo(&ds, &vo)?;
            emit(out.as_deref(), &compare(&ds, &vo, &knobs, &meta)?)
        }
        Command::AlRun(args) => al_run(args),
        Command::Synth { synth: flags, out } => {
            let ds = synth::generate(&flags.config())?;
            dataio::write_dataset(&ds, &out)
        }
        Command::ClassifyEval {
            input,
            classifier,
            noise,
            folds,
            seed,
            out,
        } => {
            let ds = load(&input)?;
            let config = ClassifierConfig {
                kind: classifier,
                noise,
                seed,
                ..ClassifierConfig::default()
            };
            emit(out.as_deref(), &classify_eval(&ds, &config, folds, seed)?)
        }
    }
}

fn compare(ds: &Dataset, vo: &ValueOptionMatrix, knobs: &Knobs, meta: &Meta) -> Result<String> {
    let mut per_method: Vec<(Method, Vec<Ranking>)> = Vec::new();
    for method in Method::ALL {
        let est = estimator(method, knobs);
        let rankings = estimate_all(ds, vo, &est)?.into_iter().map(|r| r.ranking).collect();
        per_method.push((method, rankings));
    }
    let base = &per_method[0].1;
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(out, "# mc_semantics: {}", knobs.mc_semantics);
    let _ = writeln!(out, "# order: {}", knobs.order);
    out.push_str("method,participants_changed,total_position_changes,mean_position_changes\n");
    for (method, rankings) in &per_method {
        if matches!(method, Method::C | Method::M) {
            continue;
        }
        let changes = base
            .iter()
            .zip(rankings)
            .map(|(a, b)| metrics::position_changes(a, b))
            .collect::<Result<Vec<u64>>>()?;
        let total: u64 = changes.iter().sum();
        let mean = if changes.is_empty() { 0.0 } else { total as f64 / changes.len() as f64 };
        let changed = changes.iter().filter(|&&c| c > 0).count();
        let _ = writeln!(out, "{method},{changed},{total},{mean:.4}");
    }
    out.push('\n');
    out.push_str("value");
    for (method, _) in &per_method {
        let _ = write!(out, ",{method}");
    }
    out.push('\n');
    let means = per_method
        .iter()
        .map(|(_, r)| metrics::mean_positions(r))
        .collect::<Result<Vec<_>>>()?;
    for v in 0..ds.values.len() {
        out.push_str(ds.values.id(v));
        for m in &means {
            let _ = write!(out, ",{:.4}", metrics::ratio_to_f64(&m[v]));
        }
        out.push('\n');
    }
    Ok(out)
}

fn classify_eval(ds: &Dataset, config: &ClassifierConfig, folds: usize, seed: u64) -> Result<String> {
    let al = ALConfig {
        folds,
        seed,
        ..ALConfig::default()
    };
    let splits = alsim::warmup_split(ds.participants.len(), &al)?;
    let ctx = alsim::Context::new(ds, ValueOptionMatrix::ones(ds.values.len(), ds.options.len()))?;
    let truth: &LabelStore = &ctx.truth;
    let mut out = String::new();
    let _ = writeln!(out, "# config: {}", dataio::config_snapshot(config));
    let _ = writeln!(out, "# folds: {folds}");
    out.push_str("fold,micro_f1,macro_f1\n");
    let (mut micro, mut macro_) = (Vec::new(), Vec::new());
    for s in &splits {
        let test: std::collections::BTreeSet<usize> = s.test.iter().copied().collect();
        let train: Vec<LabeledMotivation> = (0..ctx.refs.len())
            .filter(|&id| !test.contains(&ctx.refs[id].participant))
            .map(|id| LabeledMotivation {
                id,
                text: ctx.text(id).to_owned(),
                labels: truth[id].clone(),
            })
            .collect();
        let c = crate::classifier::fit(config, ds.values.len(), &train, Some(truth))?;
        let mut conf = LabelConfusion::new(ds.values.len());
        for &p in &s.test {
            for &id in &ctx.by_participant[p] {
                conf.add(&c.predict(Query { id, text: ctx.text(id) })?.labels, &truth[id]);
            }
        }
        let f1 = conf.scores();
        let _ = writeln!(out, "{},{},{}", s.fold, f1.micro, f1.macro_);
        micro.push(f1.micro);
        macro_.push(f1.macro_);
    }
    let (mm, ms) = metrics::mean_std(&micro);
    let (am, as_) = metrics::mean_std(&macro_);
    let _ = writeln!(out, "mean,{mm},{am}");
    let _ = writeln!(out, "std,{ms},{as_}");
    Ok(out)
}

fn al_run(args: AlRun) -> Result<()> {
    let mut config: ALConfig = match dataio::resolve_config_path(args.config.as_deref()) {
        Some(path) => {
            log::info!("reading config {}", path.display());
            dataio::load_config(&path)?
        }
        None => ALConfig::default(),
    };
    if let Some(x) = args.folds {
        config.folds = x;
    }
    if let Some(x) = args.warmup {
        config.warmup_fraction = x;
    }
    if let Some(x) = args.batch {
        config.batch_fraction = x;
    }
    if let Some(x) = args.batch_participants {
        config.batch_participants = Some(x);
    }
    if let Some(x) = args.batch_motivations {
        config.batch_motivations = Some(x);
    }
    if let Some(x) = args.iterations {
        config.iterations = x;
    }
    if let Some(x) = args.classifier {
        config.classifier.kind = x;
    }
    if let Some(x) = args.noise {
        config.classifier.noise = x;
    }
    if let Some(x) = args.seed {
        config.seed = x;
    }
    if let Some(x) = args.vo_threshold {
        config.vo_threshold = x;
    }
    let strategies: Vec<Strategy> = if args.strategy == "all" {
        Strategy::ALL.to_vec()
    } else {
        args.strategy
            .split(',')
            .map(str::parse)
            .collect::<Result<_>>()?
    };
    config.strategy = strategies[0];
    let ds = match &args.dataset {
        Some(path) => dataio::load_dataset_with(path, LoadOptions { lenient: args.lenient })?.dataset,
        None => synth::generate(&SynthConfig {
            participants: args.participants,
            seed: config.seed,
            ..SynthConfig::default()
        })?,
    };
    let mut report = alsim::run_strategies(&ds, &config, &strategies)?;
    if args.dataset.is_none() {
        report
            .meta
            .push(("dataset".into(), format!("synthetic, {} participants, seed {}", args.participants, config.seed)));
    }
    emit(args.out.as_deref(), &dataio::curves_to_csv(&report))
}
