//! Command-line front end: dataset generation, training, recognition,
//! evaluation, reproducibility curves, timing, and the full comparison grid.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use semimarkov::datagen::{synth_dataset, GenProfile};
use semimarkov::eval::{confusion_metrics, repro_curve, run_comparison, train_bank};
use semimarkov::hsmm::{self, ModelBank, ModelKind, ModelParams, TrainedModel};
use semimarkov::{ilp_hsmm, is_hsmm};
use semimarkov::{Dataset, Sequence, SymbolTable, TrainConfig};

use semimarkov_cli::error::{AppError, AppResult};
use semimarkov_cli::io::{self, MetricsRow, PredictionRow};
use semimarkov_cli::bench;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Hsmm,
    IsHsmm,
    IlpHsmm,
}

impl From<KindArg> for ModelKind {
    fn from(kind: KindArg) -> ModelKind {
        match kind {
            KindArg::Hsmm => ModelKind::Hsmm,
            KindArg::IsHsmm => ModelKind::IsHsmm,
            KindArg::IlpHsmm => ModelKind::IlpHsmm,
        }
    }
}

const ALL_KINDS: [KindArg; 3] = [KindArg::Hsmm, KindArg::IsHsmm, KindArg::IlpHsmm];

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Error,
    Warn,
    Info,
    Debug,
}

impl From<LevelArg> for log::LevelFilter {
    fn from(level: LevelArg) -> log::LevelFilter {
        match level {
            LevelArg::Error => log::LevelFilter::Error,
            LevelArg::Warn => log::LevelFilter::Warn,
            LevelArg::Info => log::LevelFilter::Info,
            LevelArg::Debug => log::LevelFilter::Debug,
        }
    }
}

/// EM hyperparameters shared by the training commands.
#[derive(Args)]
struct ConfigArgs {
    /// Relative improvement below which training stops.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Hard cap on EM iterations.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Additive smoothing mass for re-estimated rows.
    #[arg(long, default_value_t = 1e-6)]
    kappa: f64,
    /// Pseudo-count per state pair for gap statistics.
    #[arg(long, default_value_t = 1e-4)]
    delta_pt: f64,
    /// Scale of the unseen-pair density floor.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Lower bound on fitted gap standard deviations.
    #[arg(long, default_value_t = 0.5)]
    sigma_min: f64,
}

impl ConfigArgs {
    fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            kappa: self.kappa,
            seed,
            delta_pt: self.delta_pt,
            c: self.c,
            sigma_min: self.sigma_min,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "semimarkov",
    version,
    about = "Sequence models with explicit interval handling"
)]
struct Cli {
    /// Seed override for generation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-label training.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Stderr log verbosity.
    #[arg(long, global = true, value_enum, default_value_t = LevelArg::Warn)]
    log_level: LevelArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic train/test JSONL datasets.
    Gen {
        /// Profile JSON; fields absent there keep their defaults.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Output directory for train.jsonl and test.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per label and write a model bank.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Hidden states per model.
        #[arg(long, default_value_t = 5)]
        states: usize,
        /// Longest modeled run, in ticks.
        #[arg(long, default_value_t = 10)]
        dmax: usize,
        /// Bucket count for interval lengths (interval-state models).
        #[arg(long, default_value_t = 10)]
        dmax_int: usize,
        #[command(flatten)]
        config: ConfigArgs,
        /// Optional CSV of per-iteration objective values.
        #[arg(long)]
        train_log: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score sequences against a bank and write predictions CSV.
    Recognize {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Score interval-length models by the sum criterion.
        #[arg(long)]
        ilp_sum: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute per-label precision/recall/f from predictions or a bank.
    Eval {
        /// Predictions CSV produced by recognize.
        #[arg(long, conflicts_with_all = ["bank", "data"])]
        pred: Option<PathBuf>,
        #[arg(long, requires = "data")]
        bank: Option<PathBuf>,
        #[arg(long, requires = "bank")]
        data: Option<PathBuf>,
        #[arg(long)]
        ilp_sum: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean reproducibility per interval count.
    Repro {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time train and recognize phases over growing corpora.
    Bench {
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = ALL_KINDS)]
        kinds: Vec<KindArg>,
        /// Training corpus sizes; each rounds to a multiple of the label count.
        #[arg(long, value_delimiter = ',', default_values_t = vec![16, 32])]
        sizes: Vec<usize>,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        states: usize,
        #[arg(long, default_value_t = 10)]
        dmax: usize,
        #[arg(long, default_value_t = 10)]
        dmax_int: usize,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a corpus, train every kind, and write the comparison grid.
    Compare {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = ALL_KINDS)]
        kinds: Vec<KindArg>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5])]
        states: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        dmax: usize,
        #[arg(long, default_value_t = 10)]
        dmax_int: usize,
        #[arg(long)]
        ilp_sum: bool,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for metrics.csv and repro.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level.into())
        .format_timestamp(None)
        .init();
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        std::process::exit(err.category.exit_code());
    }
}

fn run(cli: Cli) -> AppResult<()> {
    let seed = cli.seed;
    let jobs = cli.jobs.max(1);
    match cli.command {
        Command::Gen { profile, out } => cmd_gen(seed, profile, out),
        Command::Train {
            data,
            kind,
            states,
            dmax,
            dmax_int,
            config,
            train_log,
            out,
        } => cmd_train(
            seed,
            jobs,
            data,
            kind.into(),
            states,
            dmax,
            dmax_int,
            &config,
            train_log,
            out,
        ),
        Command::Recognize {
            bank,
            data,
            ilp_sum,
            out,
        } => cmd_recognize(bank, data, ilp_sum, out),
        Command::Eval {
            pred,
            bank,
            data,
            ilp_sum,
            out,
        } => cmd_eval(pred, bank, data, ilp_sum, out),
        Command::Repro { bank, data, out } => cmd_repro(bank, data, out),
        Command::Bench {
            kinds,
            sizes,
            profile,
            states,
            dmax,
            dmax_int,
            config,
            out,
        } => cmd_bench(
            seed, kinds, sizes, profile, states, dmax, dmax_int, &config, out,
        ),
        Command::Compare {
            profile,
            kinds,
            states,
            dmax,
            dmax_int,
            ilp_sum,
            config,
            out_dir,
        } => cmd_compare(
            seed, profile, kinds, states, dmax, dmax_int, ilp_sum, &config, out_dir,
        ),
    }
}

fn resolve_profile(seed: Option<u64>, path: Option<PathBuf>) -> AppResult<GenProfile> {
    let mut profile = match path {
        Some(p) => io::load_profile(&p)?,
        None => GenProfile::default(),
    };
    if let Some(s) = seed {
        profile.seed = s;
    }
    Ok(profile)
}

fn cmd_gen(seed: Option<u64>, profile: Option<PathBuf>, out: PathBuf) -> AppResult<()> {
    let profile = resolve_profile(seed, profile)?;
    let (train, test) = synth_dataset(&profile)?;
    io::save_dataset(&out.join("train.jsonl"), &train)?;
    io::save_dataset(&out.join("test.jsonl"), &test)?;
    log::info!(
        "wrote {} train and {} test sequences over {} labels to {}",
        train.sequences.len(),
        test.sequences.len(),
        train.labels.len(),
        out.display()
    );
    Ok(())
}

/// train_bank with the per-label loop spread over worker threads. Labels are
/// merged back in label order, so the result matches the serial path.
fn train_bank_parallel(
    kind: ModelKind,
    data: &Dataset,
    m: usize,
    dmax: usize,
    dmax_int: usize,
    config: &TrainConfig,
    jobs: usize,
) -> AppResult<ModelBank> {
    let num_labels = data.labels.len();
    if jobs <= 1 || num_labels <= 1 {
        return Ok(train_bank(kind, data, m, dmax, dmax_int, config)?);
    }
    data.validate().map_err(AppError::from)?;
    let n = data.table.len();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<semimarkov::Result<TrainedModel>>>> =
        (0..num_labels).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(num_labels) {
            scope.spawn(|| loop {
                let label = next.fetch_add(1, Ordering::Relaxed);
                if label >= num_labels {
                    break;
                }
                let seqs: Vec<&[usize]> = data
                    .with_label(label)
                    .into_iter()
                    .map(|s| s.obs.as_slice())
                    .collect();
                let out = match kind {
                    ModelKind::Hsmm => hsmm::train(label, &seqs, m, n, dmax, config),
                    ModelKind::IsHsmm => {
                        is_hsmm::train_is(label, &seqs, m, n, dmax, dmax_int, config)
                    }
                    ModelKind::IlpHsmm => ilp_hsmm::train_ilp(label, &seqs, m, n, dmax, config),
                };
                *slots[label].lock().unwrap() = Some(out);
            });
        }
    });
    let mut models = Vec::with_capacity(num_labels);
    for slot in slots {
        let result = slot
            .into_inner()
            .expect("training thread panicked")
            .expect("every label was claimed by a worker");
        models.push(result.map_err(AppError::from)?);
    }
    let bank = ModelBank {
        labels: data.labels.clone(),
        symbols: data.table.names().to_vec(),
        models,
    };
    bank.validate().map_err(AppError::from)?;
    Ok(bank)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    seed: Option<u64>,
    jobs: usize,
    data: PathBuf,
    kind: ModelKind,
    states: usize,
    dmax: usize,
    dmax_int: usize,
    config_args: &ConfigArgs,
    train_log: Option<PathBuf>,
    out: PathBuf,
) -> AppResult<()> {
    let data = io::load_dataset(&data)?;
    let config = config_args.to_config(seed.unwrap_or(0));
    let bank = train_bank_parallel(kind, &data, states, dmax, dmax_int, &config, jobs)?;
    if let Some(log_path) = train_log {
        let rows: Vec<(String, Vec<hsmm::IterationStat>)> = bank
            .models
            .iter()
            .map(|m| (bank.labels[m.label].clone(), m.history.clone()))
            .collect();
        io::save_train_log(&log_path, &rows)?;
    }
    io::save_bank(&out, &bank, &config)?;
    log::info!(
        "trained {} {} models and wrote {}",
        bank.models.len(),
        ModelKind::from(kind).as_str(),
        out.display()
    );
    Ok(())
}

/// Re-encode a dataset into the bank's symbol ids (matching by name) so files
/// written against a different registration order still score correctly.
fn align_to_bank(data: &Dataset, bank: &ModelBank) -> AppResult<Dataset> {
    let mut table = SymbolTable::from_names(&bank.symbols).map_err(AppError::from)?;
    table.freeze();
    let mut sequences = Vec::with_capacity(data.sequences.len());
    for seq in &data.sequences {
        let mut obs = Vec::with_capacity(seq.obs.len());
        for &id in &seq.obs {
            let name = data.table.name_of(id);
            let mapped = table.id_of(name).ok_or_else(|| {
                AppError::validation(format!("symbol {name:?} is not in the model alphabet"))
            })?;
            obs.push(mapped);
        }
        sequences.push(Sequence::new(seq.label, obs));
    }
    Ok(Dataset {
        table,
        labels: data.labels.clone(),
        sequences,
        split: data.split.clone(),
    })
}

/// Score every sequence against every model. Returns the score column labels
/// (bank model order) and one row per sequence.
fn score_dataset(
    bank: &ModelBank,
    data: &Dataset,
    ilp_sum: bool,
) -> AppResult<(Vec<String>, Vec<PredictionRow>)> {
    let aligned = align_to_bank(data, bank)?;
    let kind = bank.kind().map_err(AppError::from)?;
    let states = bank.models[0].params.base().m;
    let score_labels: Vec<String> = bank
        .models
        .iter()
        .map(|m| bank.labels[m.label].clone())
        .collect();
    let mut rows = Vec::with_capacity(aligned.sequences.len());
    for (i, seq) in aligned.sequences.iter().enumerate() {
        let (scores, predicted) = if ilp_sum && kind == ModelKind::IlpHsmm {
            let mut scores = Vec::with_capacity(bank.models.len());
            for model in &bank.models {
                let ModelParams::Ilp(p) = &model.params else {
                    return Err(AppError::validation(
                        "bank does not hold interval-length models",
                    ));
                };
                scores.push(ilp_hsmm::forward_ilp(p, &seq.obs).map_err(AppError::from)?);
            }
            let mut label = usize::MAX;
            let mut best = f64::NEG_INFINITY;
            for (model, &score) in bank.models.iter().zip(&scores) {
                if score > best
                    || (score == best && score != f64::NEG_INFINITY && model.label < label)
                {
                    best = score;
                    label = model.label;
                }
            }
            if best == f64::NEG_INFINITY {
                label = bank.models.iter().map(|m| m.label).min().unwrap_or(0);
            }
            (scores, label)
        } else {
            let rec = hsmm::recognize(bank, &seq.obs).map_err(AppError::from)?;
            (rec.scores, rec.label)
        };
        rows.push(PredictionRow {
            kind,
            states,
            seq: i,
            actual: seq
                .label
                .map(|l| aligned.labels[l].clone())
                .unwrap_or_default(),
            predicted: bank.labels[predicted].clone(),
            scores,
        });
    }
    Ok((score_labels, rows))
}

fn cmd_recognize(bank: PathBuf, data: PathBuf, ilp_sum: bool, out: PathBuf) -> AppResult<()> {
    let stored = io::load_bank(&bank)?;
    let data = io::load_dataset(&data)?;
    let (score_labels, rows) = score_dataset(&stored.bank, &data, ilp_sum)?;
    io::save_predictions(&out, &score_labels, &rows)?;
    log::info!("scored {} sequences into {}", rows.len(), out.display());
    Ok(())
}

fn intern_name(names: &mut Vec<String>, name: &str) -> usize {
    match names.iter().position(|n| n == name) {
        Some(k) => k,
        None => {
            names.push(name.to_string());
            names.len() - 1
        }
    }
}

/// Per-label metric rows from (kind, states, actual, predicted) records,
/// grouped by (kind, states) in encounter order. Each group closes with a
/// macro-average row labeled "macro".
fn metrics_rows(records: &[(String, usize, String, String)]) -> AppResult<Vec<MetricsRow>> {
    let mut groups: Vec<((String, usize), Vec<(String, String)>)> = Vec::new();
    for (kind, states, actual, predicted) in records {
        if actual.is_empty() {
            return Err(AppError::validation(
                "predictions lack actual labels; nothing to score against",
            ));
        }
        let key = (kind.clone(), *states);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pairs)) => pairs.push((actual.clone(), predicted.clone())),
            None => groups.push((key, vec![(actual.clone(), predicted.clone())])),
        }
    }
    let mut out = Vec::new();
    for ((kind, states), pairs) in groups {
        let mut names: Vec<String> = Vec::new();
        let idx_pairs: Vec<(usize, usize)> = pairs
            .iter()
            .map(|(a, p)| (intern_name(&mut names, a), intern_name(&mut names, p)))
            .collect();
        let report = confusion_metrics(&idx_pairs);
        for row in &report.per_label {
            out.push(MetricsRow {
                kind: kind.clone(),
                states,
                label: names[row.label].clone(),
                precision: row.precision,
                recall: row.recall,
                f: row.f_measure,
            });
        }
        out.push(MetricsRow {
            kind: kind.clone(),
            states,
            label: "macro".to_string(),
            precision: report.macro_precision,
            recall: report.macro_recall,
            f: report.macro_f,
        });
    }
    Ok(out)
}

fn cmd_eval(
    pred: Option<PathBuf>,
    bank: Option<PathBuf>,
    data: Option<PathBuf>,
    ilp_sum: bool,
    out: PathBuf,
) -> AppResult<()> {
    let records: Vec<(String, usize, String, String)> = match (pred, bank, data) {
        (Some(pred), None, None) => io::load_predictions(&pred)?,
        (None, Some(bank), Some(data)) => {
            let stored = io::load_bank(&bank)?;
            let data = io::load_dataset(&data)?;
            let (_, rows) = score_dataset(&stored.bank, &data, ilp_sum)?;
            rows.into_iter()
                .map(|r| (r.kind.as_str().to_string(), r.states, r.actual, r.predicted))
                .collect()
        }
        _ => {
            return Err(AppError::validation(
                "eval needs either --pred or both --bank and --data",
            ))
        }
    };
    let rows = metrics_rows(&records)?;
    io::save_metrics(&out, &rows)?;
    log::info!("wrote {} metric rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_repro(bank: PathBuf, data: PathBuf, out: PathBuf) -> AppResult<()> {
    let stored = io::load_bank(&bank)?;
    let data = io::load_dataset(&data)?;
    let aligned = align_to_bank(&data, &stored.bank)?;
    let kind = stored.bank.kind().map_err(AppError::from)?;
    let curve = repro_curve(&stored.bank, &aligned).map_err(AppError::from)?;
    let rows: Vec<(ModelKind, usize, f64)> = curve.into_iter().map(|(k, r)| (kind, k, r)).collect();
    io::save_repro(&out, &rows)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    seed: Option<u64>,
    kinds: Vec<KindArg>,
    sizes: Vec<usize>,
    profile: Option<PathBuf>,
    states: usize,
    dmax: usize,
    dmax_int: usize,
    config_args: &ConfigArgs,
    out: PathBuf,
) -> AppResult<()> {
    let profile = resolve_profile(seed, profile)?;
    let config = config_args.to_config(seed.unwrap_or(0));
    let kinds: Vec<ModelKind> = kinds.into_iter().map(ModelKind::from).collect();
    let rows = bench::benchmark_time(&kinds, &sizes, &profile, states, dmax, dmax_int, &config)?;
    io::save_times(&out, &rows)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    seed: Option<u64>,
    profile: Option<PathBuf>,
    kinds: Vec<KindArg>,
    states: Vec<usize>,
    dmax: usize,
    dmax_int: usize,
    ilp_sum: bool,
    config_args: &ConfigArgs,
    out_dir: PathBuf,
) -> AppResult<()> {
    let profile = resolve_profile(seed, profile)?;
    let config = config_args.to_config(seed.unwrap_or(0));
    let (train, test) = synth_dataset(&profile).map_err(AppError::from)?;
    let kinds: Vec<ModelKind> = kinds.into_iter().map(ModelKind::from).collect();
    let comparison = run_comparison(
        &train, &test, &kinds, &states, dmax, dmax_int, &config, ilp_sum,
    )
    .map_err(AppError::from)?;
    let mut metric_rows = Vec::new();
    for cell in &comparison.cells {
        match (&cell.report, &cell.error) {
            (Some(report), _) => {
                for row in &report.per_label {
                    metric_rows.push(MetricsRow {
                        kind: cell.kind.as_str().to_string(),
                        states: cell.states,
                        label: train.labels[row.label].clone(),
                        precision: row.precision,
                        recall: row.recall,
                        f: row.f_measure,
                    });
                }
                metric_rows.push(MetricsRow {
                    kind: cell.kind.as_str().to_string(),
                    states: cell.states,
                    label: "macro".to_string(),
                    precision: report.macro_precision,
                    recall: report.macro_recall,
                    f: report.macro_f,
                });
            }
            (None, Some(err)) => log::warn!(
                "skipping {} with {} states: {err}",
                cell.kind.as_str(),
                cell.states
            ),
            (None, None) => {}
        }
    }
    let repro_rows: Vec<(ModelKind, usize, f64)> = comparison
        .repro
        .iter()
        .map(|p| (p.kind, p.num_intervals, p.r))
        .collect();
    io::save_metrics(&out_dir.join("metrics.csv"), &metric_rows)?;
    io::save_repro(&out_dir.join("repro.csv"), &repro_rows)?;
    log::info!("wrote comparison grid to {}", out_dir.display());
    Ok(())
}
