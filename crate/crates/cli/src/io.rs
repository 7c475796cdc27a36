//! File formats: JSONL datasets, JSON model banks, GenProfile JSON, and the
//! CSV outputs. All writes go through a temp file plus rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use semimarkov::datagen::{GenProfile, LabelTemplate};
use semimarkov::hsmm::{IterationStat, ModelBank, ModelKind, ModelParams, TrainedModel};
use semimarkov::ilp_hsmm::{IlpParams, IntervalGaussian};
use semimarkov::is_hsmm::IsHsmmParams;
use semimarkov::{Dataset, HsmmParams, Sequence, SymbolTable, TrainConfig};

use crate::error::{AppError, AppResult, Category};

fn read_file(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::from(e).at(path, None))
}

/// Write through a sibling temp file so the target is never half-written.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| AppError::from(e.error))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    alphabet: Vec<String>,
    interval_symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SequenceLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    obs: Vec<String>,
}

pub fn save_dataset(path: &Path, data: &Dataset) -> AppResult<()> {
    let mut out = Vec::new();
    let header = DatasetHeader {
        alphabet: data.table.names().to_vec(),
        interval_symbol: data.table.name_of(semimarkov::INTERVAL).to_string(),
        split: Some(data.split.clone()),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for seq in &data.sequences {
        let line = SequenceLine {
            label: seq.label.map(|l| data.labels[l].clone()),
            obs: seq.obs.iter().map(|&s| data.table.name_of(s).to_string()).collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.push(b'\n');
    }
    atomic_write(path, &out)
}

/// Load a JSONL dataset. A leading header line fixes the alphabet (unknown
/// symbols then become errors); without one the alphabet is inferred in
/// first-seen order. Labels are numbered in first-seen order.
pub fn load_dataset(path: &Path) -> AppResult<Dataset> {
    let text = read_file(path)?;
    let mut table = SymbolTable::new();
    let mut split = String::from("train");
    let mut labels: Vec<String> = Vec::new();
    let mut sequences: Vec<Sequence> = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |err: AppError| err.at(path, Some(idx + 1));
        if idx == 0 {
            let probe: serde_json::Value =
                serde_json::from_str(line).map_err(|e| at(e.into()))?;
            if probe.get("alphabet").is_some() {
                let header: DatasetHeader =
                    serde_json::from_str(line).map_err(|e| at(e.into()))?;
                table = SymbolTable::from_names(&header.alphabet).map_err(|e| at(e.into()))?;
                table.freeze();
                if let Some(s) = header.split {
                    split = s;
                }
                saw_header = true;
                continue;
            }
        }
        let parsed: SequenceLine = serde_json::from_str(line).map_err(|e| at(e.into()))?;
        let label = parsed.label.map(|name| {
            labels.iter().position(|l| *l == name).unwrap_or_else(|| {
                labels.push(name);
                labels.len() - 1
            })
        });
        let mut obs = Vec::with_capacity(parsed.obs.len());
        for name in &parsed.obs {
            obs.push(table.intern(name).map_err(|e| at(e.into()))?);
        }
        sequences.push(Sequence::new(label, obs));
    }
    if !saw_header {
        table.freeze();
    }
    let data = Dataset {
        table,
        labels,
        sequences,
        split,
    };
    data.validate().map_err(|e| AppError::from(e).at(path, None))?;
    Ok(data)
}

#[derive(Serialize, Deserialize, Clone)]
struct GaussianFile {
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    observed: bool,
}

#[derive(Serialize, Deserialize, Clone, PartialEq)]
struct ConfigFile {
    epsilon: f64,
    max_iters: usize,
    kappa: f64,
    seed: u64,
    delta_pt: f64,
    c: f64,
    sigma_min: f64,
}

impl From<&TrainConfig> for ConfigFile {
    fn from(c: &TrainConfig) -> ConfigFile {
        ConfigFile {
            epsilon: c.epsilon,
            max_iters: c.max_iters,
            kappa: c.kappa,
            seed: c.seed,
            delta_pt: c.delta_pt,
            c: c.c,
            sigma_min: c.sigma_min,
        }
    }
}

impl From<&ConfigFile> for TrainConfig {
    fn from(c: &ConfigFile) -> TrainConfig {
        TrainConfig {
            epsilon: c.epsilon,
            max_iters: c.max_iters,
            kappa: c.kappa,
            seed: c.seed,
            delta_pt: c.delta_pt,
            c: c.c,
            sigma_min: c.sigma_min,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    label: String,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "Dmax")]
    dmax: usize,
    alphabet: Vec<String>,
    pi: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "Dmax_int", default, skip_serializing_if = "Option::is_none")]
    dmax_int: Option<usize>,
    #[serde(rename = "A2", default, skip_serializing_if = "Option::is_none")]
    a2: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    l: Option<Vec<Vec<GaussianFile>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta_pt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_min: Option<f64>,
    config: ConfigFile,
    final_log_likelihood: f64,
    iterations: usize,
}

fn chunk(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks(width).map(<[f64]>::to_vec).collect()
}

fn flatten(rows: &[Vec<f64>], width: usize, what: &str) -> AppResult<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * width);
    for row in rows {
        if row.len() != width {
            return Err(AppError::schema(format!(
                "{what} row has {} entries, expected {width}",
                row.len()
            )));
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}

fn model_to_file(model: &TrainedModel, bank: &ModelBank, config: &TrainConfig) -> ModelFile {
    let base = model.params.base();
    let s = base.num_supers();
    let mut file = ModelFile {
        kind: model.params.kind().as_str().to_string(),
        label: bank.labels[model.label].clone(),
        m: base.m,
        n: base.n,
        dmax: base.dmax,
        alphabet: bank.symbols.clone(),
        pi: chunk(&base.pi, base.dmax),
        a: chunk(&base.a, s),
        b: chunk(&base.b, base.n),
        dmax_int: None,
        a2: None,
        l: None,
        delta_pt: None,
        c: None,
        sigma_min: None,
        config: config.into(),
        final_log_likelihood: model.final_log_likelihood,
        iterations: model.iterations,
    };
    match &model.params {
        ModelParams::Hsmm(_) => {}
        ModelParams::Is(p) => {
            file.dmax_int = Some(p.dmax_int);
            let per_bucket: Vec<Vec<f64>> = chunk(&p.a2, s);
            file.a2 = Some(
                per_bucket
                    .chunks(p.dmax_int)
                    .map(<[Vec<f64>]>::to_vec)
                    .collect(),
            );
        }
        ModelParams::Ilp(p) => {
            file.delta_pt = Some(p.delta_pt);
            file.c = Some(p.c);
            file.sigma_min = Some(p.sigma_min);
            if p.fitted {
                file.l = Some(
                    p.l
                        .chunks(base.m)
                        .map(|row| {
                            row.iter()
                                .map(|g| GaussianFile {
                                    mu: g.mu,
                                    sigma: g.sigma,
                                    lo: g.lo,
                                    hi: g.hi,
                                    observed: g.observed,
                                })
                                .collect()
                        })
                        .collect(),
                );
            }
        }
    }
    file
}

fn params_from_file(file: &ModelFile) -> AppResult<ModelParams> {
    let kind = ModelKind::parse(&file.kind)?;
    let s = file.m * file.dmax;
    let base = HsmmParams {
        m: file.m,
        n: file.n,
        dmax: file.dmax,
        pi: flatten(&file.pi, file.dmax, "pi")?,
        a: flatten(&file.a, s, "A")?,
        b: flatten(&file.b, file.n, "B")?,
    };
    if file.alphabet.len() != file.n {
        return Err(AppError::schema(format!(
            "alphabet has {} names but N = {}",
            file.alphabet.len(),
            file.n
        )));
    }
    let params = match kind {
        ModelKind::Hsmm => ModelParams::Hsmm(base),
        ModelKind::IsHsmm => {
            let dmax_int = file
                .dmax_int
                .ok_or_else(|| AppError::schema("is-hsmm model lacks Dmax_int"))?;
            let nested = file
                .a2
                .as_ref()
                .ok_or_else(|| AppError::schema("is-hsmm model lacks A2"))?;
            if nested.len() != s + 1 || nested.iter().any(|src| src.len() != dmax_int) {
                return Err(AppError::schema("A2 shape does not match M, Dmax, Dmax_int"));
            }
            let mut a2 = Vec::with_capacity((s + 1) * dmax_int * s);
            for src in nested {
                for row in src {
                    if row.len() != s {
                        return Err(AppError::schema("A2 target row length mismatch"));
                    }
                    a2.extend_from_slice(row);
                }
            }
            ModelParams::Is(IsHsmmParams {
                base,
                dmax_int,
                a2,
            })
        }
        ModelKind::IlpHsmm => {
            let delta_pt = file.delta_pt.unwrap_or(1e-4);
            let sigma_min = file.sigma_min.unwrap_or(0.5);
            let c = file.c.unwrap_or(0.5);
            let (l, fitted) = match &file.l {
                None => (Vec::new(), false),
                Some(rows) => {
                    if rows.len() != file.m || rows.iter().any(|r| r.len() != file.m) {
                        return Err(AppError::schema("L is not an M by M table"));
                    }
                    let mut l = Vec::with_capacity(file.m * file.m);
                    for row in rows {
                        for g in row {
                            l.push(IntervalGaussian {
                                mu: g.mu,
                                sigma: g.sigma,
                                lo: g.lo,
                                hi: g.hi,
                                observed: g.observed,
                            });
                        }
                    }
                    (l, true)
                }
            };
            ModelParams::Ilp(IlpParams {
                base,
                l,
                fitted,
                delta_pt,
                c,
                sigma_min,
            })
        }
    };
    Ok(params)
}

fn validate_params(params: &ModelParams) -> semimarkov::Result<()> {
    match params {
        ModelParams::Hsmm(p) => p.validate(),
        ModelParams::Is(p) => p.validate(),
        ModelParams::Ilp(p) => p.validate(),
    }
}

/// A bank plus the config that trained it, as stored on disk.
pub struct StoredBank {
    pub bank: ModelBank,
    pub config: TrainConfig,
}

pub fn save_bank(path: &Path, bank: &ModelBank, config: &TrainConfig) -> AppResult<()> {
    let files: Vec<ModelFile> = bank
        .models
        .iter()
        .map(|m| model_to_file(m, bank, config))
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&files)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn load_bank(path: &Path) -> AppResult<StoredBank> {
    let text = read_file(path)?;
    let files: Vec<ModelFile> =
        serde_json::from_str(&text).map_err(|e| AppError::from(e).at(path, None))?;
    if files.is_empty() {
        return Err(AppError::validation("model bank is empty").at(path, None));
    }
    let symbols = files[0].alphabet.clone();
    let config: TrainConfig = (&files[0].config).into();
    let mut labels: Vec<String> = Vec::new();
    let mut models = Vec::with_capacity(files.len());
    for file in &files {
        if file.alphabet != symbols {
            return Err(AppError::schema("models in one bank use different alphabets")
                .at(path, None));
        }
        let label = match labels.iter().position(|l| *l == file.label) {
            Some(k) => k,
            None => {
                labels.push(file.label.clone());
                labels.len() - 1
            }
        };
        let params = params_from_file(file).map_err(|e| e.at(path, None))?;
        validate_params(&params).map_err(|e| AppError::from(e).at(path, None))?;
        models.push(TrainedModel {
            label,
            params,
            final_log_likelihood: file.final_log_likelihood,
            iterations: file.iterations,
            history: Vec::new(),
            em_history: Vec::new(),
        });
    }
    let bank = ModelBank {
        labels,
        symbols,
        models,
    };
    bank.validate().map_err(|e| AppError::from(e).at(path, None))?;
    Ok(StoredBank { bank, config })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    symbols: Vec<usize>,
    durations: Vec<usize>,
    gaps: Vec<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    num_labels: Option<usize>,
    sequences_per_label: Option<usize>,
    runs_per_seq: Option<usize>,
    d_min: Option<usize>,
    d_max: Option<usize>,
    l_min: Option<usize>,
    l_max: Option<usize>,
    alphabet_size: Option<usize>,
    p_noise: Option<f64>,
    jitter: Option<bool>,
    add_start_end: Option<bool>,
    templates: Option<Vec<TemplateFile>>,
    seed: Option<u64>,
}

/// Read a profile JSON; absent fields keep their defaults.
pub fn load_profile(path: &Path) -> AppResult<GenProfile> {
    let text = read_file(path)?;
    let file: ProfileFile =
        serde_json::from_str(&text).map_err(|e| AppError::from(e).at(path, None))?;
    let mut profile = GenProfile::default();
    if let Some(x) = file.num_labels {
        profile.num_labels = x;
    }
    if let Some(x) = file.sequences_per_label {
        profile.sequences_per_label = x;
    }
    if let Some(x) = file.runs_per_seq {
        profile.runs_per_seq = x;
    }
    if let Some(x) = file.d_min {
        profile.d_min = x;
    }
    if let Some(x) = file.d_max {
        profile.d_max = x;
    }
    if let Some(x) = file.l_min {
        profile.l_min = x;
    }
    if let Some(x) = file.l_max {
        profile.l_max = x;
    }
    if let Some(x) = file.alphabet_size {
        profile.alphabet_size = x;
    }
    if let Some(x) = file.p_noise {
        profile.p_noise = x;
    }
    if let Some(x) = file.jitter {
        profile.jitter = x;
    }
    if let Some(x) = file.add_start_end {
        profile.add_start_end = x;
    }
    if let Some(x) = file.seed {
        profile.seed = x;
    }
    if let Some(templates) = file.templates {
        profile.templates = Some(
            templates
                .into_iter()
                .map(|t| LabelTemplate {
                    symbols: t.symbols,
                    durations: t.durations,
                    gaps: t.gaps,
                })
                .collect(),
        );
    }
    profile
        .validate()
        .map_err(|e| AppError::from(e).at(path, None))?;
    Ok(profile)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(writer: csv::Writer<Vec<u8>>, path: &Path) -> AppResult<()> {
    let bytes = writer
        .into_inner()
        .map_err(|e| AppError::new(Category::Io, e.to_string()))?;
    atomic_write(path, &bytes)
}

/// One scored sequence in a predictions file.
pub struct PredictionRow {
    pub kind: ModelKind,
    pub states: usize,
    pub seq: usize,
    pub actual: String,
    pub predicted: String,
    pub scores: Vec<f64>,
}

pub fn save_predictions(
    path: &Path,
    score_labels: &[String],
    rows: &[PredictionRow],
) -> AppResult<()> {
    let mut w = csv_writer();
    let mut header = vec![
        "kind".to_string(),
        "states".to_string(),
        "seq".to_string(),
        "actual".to_string(),
        "predicted".to_string(),
    ];
    header.extend(score_labels.iter().map(|l| format!("score:{l}")));
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.kind.as_str().to_string(),
            row.states.to_string(),
            row.seq.to_string(),
            row.actual.clone(),
            row.predicted.clone(),
        ];
        record.extend(row.scores.iter().map(|s| s.to_string()));
        w.write_record(&record)?;
    }
    finish_csv(w, path)
}

/// Read back (kind, states, actual, predicted) from a predictions file.
pub fn load_predictions(path: &Path) -> AppResult<Vec<(String, usize, String, String)>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| AppError::from(e).at(path, None))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AppError::from(e).at(path, None))?;
        if record.len() < 5 {
            return Err(AppError::schema("prediction row has fewer than 5 fields")
                .at(path, None));
        }
        let states: usize = record[1]
            .parse()
            .map_err(|_| AppError::schema("states column is not a number").at(path, None))?;
        rows.push((
            record[0].to_string(),
            states,
            record[3].to_string(),
            record[4].to_string(),
        ));
    }
    Ok(rows)
}

/// metrics.csv rows: kind, states, label, precision, recall, f.
pub struct MetricsRow {
    pub kind: String,
    pub states: usize,
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

pub fn save_metrics(path: &Path, rows: &[MetricsRow]) -> AppResult<()> {
    let mut w = csv_writer();
    w.write_record(["kind", "states", "label", "precision", "recall", "f"])?;
    for row in rows {
        w.write_record([
            row.kind.as_str(),
            &row.states.to_string(),
            row.label.as_str(),
            &row.precision.to_string(),
            &row.recall.to_string(),
            &row.f.to_string(),
        ])?;
    }
    finish_csv(w, path)
}

/// repro.csv rows: kind, num_intervals, r.
pub fn save_repro(path: &Path, rows: &[(ModelKind, usize, f64)]) -> AppResult<()> {
    let mut w = csv_writer();
    w.write_record(["kind", "num_intervals", "r"])?;
    for (kind, k, r) in rows {
        w.write_record([kind.as_str(), &k.to_string(), &r.to_string()])?;
    }
    finish_csv(w, path)
}

/// times.csv rows: kind, n, phase, seconds.
pub fn save_times(path: &Path, rows: &[crate::bench::TimeRow]) -> AppResult<()> {
    let mut w = csv_writer();
    w.write_record(["kind", "n", "phase", "seconds"])?;
    for row in rows {
        w.write_record([
            row.kind.as_str(),
            &row.n.to_string(),
            row.phase,
            &row.seconds.to_string(),
        ])?;
    }
    finish_csv(w, path)
}

/// Per-iteration training log rows: label, iteration, log_likelihood, delta.
pub fn save_train_log(path: &Path, rows: &[(String, Vec<IterationStat>)]) -> AppResult<()> {
    let mut w = csv_writer();
    w.write_record(["label", "iteration", "log_likelihood", "delta"])?;
    for (label, stats) in rows {
        for stat in stats {
            w.write_record([
                label.as_str(),
                &stat.iteration.to_string(),
                &stat.log_likelihood.to_string(),
                &stat.delta.to_string(),
            ])?;
        }
    }
    finish_csv(w, path)
}
