//! Explicit-duration hidden semi-Markov model.
//!
//! A sequence is tiled by segments (state j, duration d), 1 <= d <= Dmax,
//! with no self-transitions between consecutive segments. Each tick of a
//! segment emits independently from the state's emission row. This module
//! holds the baseline model plus the shared types (train config, trained
//! model, model bank, recognition result) used by all three model families.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ilp_hsmm::IlpParams;
use crate::is_hsmm::IsHsmmParams;
use crate::lattice::{self, EmisTable, LogHsmm, FROM_ENTRY};
use crate::math::{self, ln, log_sum_exp_slice};

/// Baseline model parameters, stored in the linear domain.
///
/// Super-state index: `j * dmax + (d - 1)` for state `j`, duration `d`.
/// `pi` has one entry per super-state; `a` is row-major source to target
/// with the source state's own block structurally zero; `b` is row-major
/// state to symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct HsmmParams {
    pub m: usize,
    pub n: usize,
    pub dmax: usize,
    pub pi: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Row sums are accepted when within this distance of one.
pub const ROW_SUM_TOL: f64 = 1e-9;

impl HsmmParams {
    /// All-zero parameter block of the given shape.
    pub fn zeroed(m: usize, n: usize, dmax: usize) -> HsmmParams {
        let s = m * dmax;
        HsmmParams {
            m,
            n,
            dmax,
            pi: vec![0.0; s],
            a: vec![0.0; s * s],
            b: vec![0.0; m * n],
        }
    }

    /// Super-state count.
    #[inline]
    pub fn num_supers(&self) -> usize {
        self.m * self.dmax
    }

    /// Super-state index of (state, duration).
    #[inline]
    pub fn sup(&self, j: usize, d: usize) -> usize {
        j * self.dmax + (d - 1)
    }

    /// Shape, finiteness, normalization and structural-zero checks.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.dmax == 0 {
            return Err(Error::dims("m, n and dmax must all be positive"));
        }
        let s = self.num_supers();
        if self.pi.len() != s || self.a.len() != s * s || self.b.len() != self.m * self.n {
            return Err(Error::dims("parameter vector lengths do not match shape"));
        }
        for &x in self.pi.iter().chain(self.a.iter()).chain(self.b.iter()) {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::dims("parameters must be finite and non-negative"));
            }
        }
        check_row_sum(&self.pi, "pi")?;
        for j in 0..self.m {
            check_row_sum(&self.b[j * self.n..(j + 1) * self.n], "b")?;
        }
        for src in 0..s {
            let i = src / self.dmax;
            let row = &self.a[src * s..(src + 1) * s];
            for (tgt, &x) in row.iter().enumerate() {
                if tgt / self.dmax == i && x != 0.0 {
                    return Err(Error::dims("self-transition entries must be zero"));
                }
            }
            // A single-state model has no legal targets; its rows stay zero.
            if self.m > 1 {
                check_row_sum(row, "a")?;
            }
        }
        Ok(())
    }
}

fn check_row_sum(row: &[f64], what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if math::abs(sum - 1.0) > ROW_SUM_TOL {
        return Err(Error::dims(alloc::format!(
            "{} row sums to {} instead of 1",
            what,
            sum
        )));
    }
    Ok(())
}

/// How a lattice pass treats runs longer than the duration cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DurationPolicy {
    /// Produce the score the lattice supports, `-inf` when nothing does.
    #[default]
    Clamp,
    /// Error out when a sequence scores `-inf` and contains a run longer
    /// than the duration cap.
    Strict,
}

/// Training loop knobs shared by all model families.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Stop once the likelihood gain drops below this.
    pub epsilon: f64,
    /// Maximum number of parameter updates.
    pub max_iters: usize,
    /// Additive smoothing applied to every count before normalizing.
    pub kappa: f64,
    /// Seed for parameter initialization.
    pub seed: u64,
    /// Interval-length density below this defines the Gaussian support edge.
    pub delta_pt: f64,
    /// Out-of-support interval-length mass factor.
    pub c: f64,
    /// Lower bound on fitted interval-length standard deviations.
    pub sigma_min: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epsilon: 1e-4,
            max_iters: 100,
            kappa: 1e-6,
            seed: 0,
            delta_pt: 1e-4,
            c: 0.5,
            sigma_min: 0.5,
        }
    }
}

/// Model family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Hsmm,
    IsHsmm,
    IlpHsmm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Hsmm => "hsmm",
            ModelKind::IsHsmm => "is-hsmm",
            ModelKind::IlpHsmm => "ilp-hsmm",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        match s {
            "hsmm" => Ok(ModelKind::Hsmm),
            "is-hsmm" => Ok(ModelKind::IsHsmm),
            "ilp-hsmm" => Ok(ModelKind::IlpHsmm),
            _ => Err(Error::validation(alloc::format!("unknown model kind {:?}", s))),
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of any model family.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Hsmm(HsmmParams),
    Is(IsHsmmParams),
    Ilp(IlpParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Hsmm(_) => ModelKind::Hsmm,
            ModelParams::Is(_) => ModelKind::IsHsmm,
            ModelParams::Ilp(_) => ModelKind::IlpHsmm,
        }
    }

    /// The embedded baseline block.
    pub fn base(&self) -> &HsmmParams {
        match self {
            ModelParams::Hsmm(p) => p,
            ModelParams::Is(p) => &p.base,
            ModelParams::Ilp(p) => &p.base,
        }
    }
}

/// One training-loop row: the likelihood of the parameters entering
/// iteration `iteration` and its gain over the previous row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStat {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub delta: f64,
}

/// A trained per-label model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub label: usize,
    pub params: ModelParams,
    /// Score of the returned parameters on the training batch.
    pub final_log_likelihood: f64,
    /// Number of parameter updates performed.
    pub iterations: usize,
    /// Per-iteration training objective (joint score for the
    /// interval-length family, plain likelihood otherwise).
    pub history: Vec<IterationStat>,
    /// Per-iteration base-model likelihood; equals `history` except for the
    /// interval-length family.
    pub em_history: Vec<IterationStat>,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }
}

/// One trained model per label, plus the naming context they share.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBank {
    pub labels: Vec<String>,
    pub symbols: Vec<String>,
    pub models: Vec<TrainedModel>,
}

impl ModelBank {
    /// Uniform kind of the bank's models.
    pub fn kind(&self) -> Result<ModelKind> {
        let first = self
            .models
            .first()
            .ok_or_else(|| Error::validation("model bank is empty"))?
            .kind();
        if self.models.iter().any(|m| m.kind() != first) {
            return Err(Error::validation("model bank mixes model kinds"));
        }
        Ok(first)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind()?;
        for model in &self.models {
            if model.label >= self.labels.len() {
                return Err(Error::validation("model label out of range"));
            }
            let base = model.params.base();
            base.validate()?;
            if base.n != self.symbols.len() {
                return Err(Error::dims("model alphabet size differs from bank symbols"));
            }
        }
        Ok(())
    }
}

/// Recognition outcome: best label, its score, and one score per model in
/// bank order.
#[derive(Debug, Clone, PartialEq)]
pub struct Recognition {
    pub label: usize,
    pub log_p: f64,
    pub scores: Vec<f64>,
    /// Every model scored `-inf`; `label` is then the lowest label id.
    pub all_impossible: bool,
}

/// Generation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateMode {
    /// Greedy: highest-scoring segment choice at every step, ties to the
    /// lowest state then duration then symbol.
    MostLikely,
    /// Sample segments and symbols from the model distributions.
    Sampled,
}

/// Forward/backward tables over segment boundaries. `alpha[t]` scores paths
/// whose last segment ends exactly at boundary `t`; `beta[t]` scores the
/// remainder given a segment ended at `t`. A table not produced by the
/// originating call is left empty.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub m: usize,
    pub dmax: usize,
    pub t_len: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Lattice {
    #[inline]
    fn idx(&self, t: usize, j: usize, d: usize) -> usize {
        t * self.m * self.dmax + j * self.dmax + (d - 1)
    }

    pub fn alpha(&self, t: usize, j: usize, d: usize) -> f64 {
        self.alpha[self.idx(t, j, d)]
    }

    pub fn beta(&self, t: usize, j: usize, d: usize) -> f64 {
        self.beta[self.idx(t, j, d)]
    }

    /// Log posterior mass of all segments ending at boundary `t`, given both
    /// tables are filled. Equals the sequence log likelihood at `t = T` and
    /// otherwise the log probability of a segment boundary at `t`.
    pub fn boundary_mass(&self, t: usize, log_p: f64) -> f64 {
        let s = self.m * self.dmax;
        let mut acc = crate::math::LogSum::new();
        for sup in 0..s {
            let x = self.alpha[t * s + sup] + self.beta[t * s + sup];
            if x != f64::NEG_INFINITY {
                acc.push(x);
            }
        }
        acc.value() - log_p
    }
}

/// Draw a row of positive weights and normalize it.
fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
    let sum: f64 = row.iter().sum();
    for x in &mut row {
        *x /= sum;
    }
    row
}

/// Random valid parameters: every admissible entry positive, rows
/// normalized, self-transition blocks zero. Draw order is pi, then the
/// transition rows in source order, then the emission rows, so equal seeds
/// give equal parameters.
pub fn init_params(m: usize, n: usize, dmax: usize, seed: u64) -> HsmmParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = m * dmax;
    let mut p = HsmmParams::zeroed(m, n, dmax);
    p.pi = random_row(&mut rng, s);
    for src in 0..s {
        if m == 1 {
            break;
        }
        let i = src / dmax;
        let row = random_row(&mut rng, s - dmax);
        let mut k = 0;
        for tgt in 0..s {
            if tgt / dmax != i {
                p.a[src * s + tgt] = row[k];
                k += 1;
            }
        }
    }
    for j in 0..m {
        let row = random_row(&mut rng, n);
        p.b[j * n..(j + 1) * n].copy_from_slice(&row);
    }
    p
}

/// Log probability that state `j` emits the given window, one tick per
/// symbol.
pub fn emission_block(p: &HsmmParams, j: usize, window: &[usize]) -> Result<f64> {
    if j >= p.m {
        return Err(Error::dims("state index out of range"));
    }
    let mut sum = 0.0;
    for &sym in window {
        if sym >= p.n {
            return Err(Error::dims("symbol id out of range"));
        }
        let lb = ln(p.b[j * p.n + sym]);
        if lb == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        sum += lb;
    }
    Ok(sum)
}

pub(crate) fn check_obs(p: &HsmmParams, obs: &[usize]) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(&sym) = obs.iter().find(|&&sym| sym >= p.n) {
        return Err(Error::dims(alloc::format!(
            "symbol id {} out of range for alphabet of {}",
            sym,
            p.n
        )));
    }
    Ok(())
}

/// Longest run of equal symbols, for strict-mode diagnostics.
fn longest_run(obs: &[usize]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    let mut prev = usize::MAX;
    for &sym in obs {
        if sym == prev {
            cur += 1;
        } else {
            cur = 1;
            prev = sym;
        }
        best = best.max(cur);
    }
    best
}

fn strict_gate(p: &HsmmParams, obs: &[usize], log_p: f64, policy: DurationPolicy) -> Result<()> {
    if policy == DurationPolicy::Strict && log_p == f64::NEG_INFINITY {
        let run_len = longest_run(obs);
        if run_len > p.dmax {
            return Err(Error::LengthExceeded {
                run_len,
                dmax: p.dmax,
            });
        }
    }
    Ok(())
}

/// Forward pass. Returns the filled alpha table and the sequence log
/// likelihood (sum over all segmentations).
pub fn forward(p: &HsmmParams, obs: &[usize]) -> Result<(Lattice, f64)> {
    forward_with(p, obs, DurationPolicy::Clamp)
}

pub fn forward_with(
    p: &HsmmParams,
    obs: &[usize],
    policy: DurationPolicy,
) -> Result<(Lattice, f64)> {
    p.validate()?;
    check_obs(p, obs)?;
    let lp = LogHsmm::new(p);
    let em = EmisTable::new(&lp, obs);
    let t_len = obs.len();
    let s = lp.s;
    let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    lattice::span_forward(&lp, &em, 0, t_len, &lp.log_pi, &mut alpha);
    let log_p = log_sum_exp_slice(&alpha[t_len * s..]);
    strict_gate(p, obs, log_p, policy)?;
    Ok((
        Lattice {
            m: p.m,
            dmax: p.dmax,
            t_len,
            alpha,
            beta: Vec::new(),
        },
        log_p,
    ))
}

/// Backward pass. Returns the filled beta table; `beta[T]` is zero
/// everywhere by definition.
pub fn backward(p: &HsmmParams, obs: &[usize]) -> Result<Lattice> {
    p.validate()?;
    check_obs(p, obs)?;
    let lp = LogHsmm::new(p);
    let em = EmisTable::new(&lp, obs);
    let t_len = obs.len();
    let s = lp.s;
    let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    beta[t_len * s..].fill(0.0);
    lattice::span_backward(&lp, &em, 0, t_len, &mut beta);
    Ok(Lattice {
        m: p.m,
        dmax: p.dmax,
        t_len,
        alpha: Vec::new(),
        beta,
    })
}

/// Best segmentation as (state, duration) pairs plus its log score. Ties
/// resolve to the lowest super-state index at every choice point.
pub fn viterbi(p: &HsmmParams, obs: &[usize]) -> Result<(Vec<(usize, usize)>, f64)> {
    viterbi_with(p, obs, DurationPolicy::Clamp)
}

pub fn viterbi_with(
    p: &HsmmParams,
    obs: &[usize],
    policy: DurationPolicy,
) -> Result<(Vec<(usize, usize)>, f64)> {
    p.validate()?;
    check_obs(p, obs)?;
    let lp = LogHsmm::new(p);
    let em = EmisTable::new(&lp, obs);
    let t_len = obs.len();
    let s = lp.s;
    let mut score = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    let mut back = vec![FROM_ENTRY; (t_len + 1) * s];
    lattice::span_viterbi(&lp, &em, 0, t_len, &lp.log_pi, &mut score, &mut back);
    let mut best = f64::NEG_INFINITY;
    let mut best_sup = 0usize;
    for (sup, &x) in score[t_len * s..].iter().enumerate() {
        if x > best {
            best = x;
            best_sup = sup;
        }
    }
    strict_gate(p, obs, best, policy)?;
    if best == f64::NEG_INFINITY {
        return Ok((Vec::new(), best));
    }
    let mut segments = Vec::new();
    let mut g = t_len;
    let mut sup = best_sup;
    loop {
        let d = lp.dur_of(sup);
        segments.push((lp.state_of(sup), d));
        let prev = back[g * s + sup];
        g -= d;
        if prev == FROM_ENTRY {
            break;
        }
        sup = prev as usize;
    }
    segments.reverse();
    Ok((segments, best))
}

/// Normalize initial-distribution counts with additive smoothing.
pub(crate) fn mstep_pi(counts: &[f64], kappa: f64) -> Vec<f64> {
    let denom: f64 = counts.iter().map(|&x| x + kappa).sum();
    if denom <= 0.0 {
        let u = 1.0 / counts.len() as f64;
        return vec![u; counts.len()];
    }
    counts.iter().map(|&x| (x + kappa) / denom).collect()
}

/// Normalize transition counts row-wise with additive smoothing, keeping
/// self-transition blocks at zero. Rows with no mass become uniform over the
/// admissible targets.
pub(crate) fn mstep_a(counts: &[f64], m: usize, dmax: usize, kappa: f64) -> Vec<f64> {
    let s = m * dmax;
    let mut a = vec![0.0; s * s];
    if m == 1 {
        return a;
    }
    for src in 0..s {
        let i = src / dmax;
        let mut denom = 0.0;
        for tgt in 0..s {
            if tgt / dmax != i {
                denom += counts[src * s + tgt] + kappa;
            }
        }
        for tgt in 0..s {
            if tgt / dmax == i {
                continue;
            }
            a[src * s + tgt] = if denom > 0.0 {
                (counts[src * s + tgt] + kappa) / denom
            } else {
                1.0 / (s - dmax) as f64
            };
        }
    }
    a
}

/// Normalize emission counts row-wise with additive smoothing. Rows with no
/// mass become uniform.
pub(crate) fn mstep_b(counts: &[f64], m: usize, n: usize, kappa: f64) -> Vec<f64> {
    let mut b = vec![0.0; m * n];
    for j in 0..m {
        let mut denom = 0.0;
        for sym in 0..n {
            denom += counts[j * n + sym] + kappa;
        }
        for sym in 0..n {
            b[j * n + sym] = if denom > 0.0 {
                (counts[j * n + sym] + kappa) / denom
            } else {
                1.0 / n as f64
            };
        }
    }
    b
}

/// One expectation pass plus the parameter update it implies. Returns the
/// updated parameters and the log likelihood of the *input* parameters on
/// the batch. Sequences the lattice cannot explain are skipped; if all are,
/// the pass fails.
pub(crate) fn em_pass(
    p: &HsmmParams,
    seqs: &[&[usize]],
    kappa: f64,
) -> Result<(HsmmParams, f64)> {
    let lp = LogHsmm::new(p);
    let s = lp.s;
    let mut pi_counts = vec![0.0; s];
    let mut a_counts = vec![0.0; s * s];
    let mut b_counts = vec![0.0; p.m * p.n];
    let mut ll = 0.0;
    let mut used = 0usize;
    for &obs in seqs {
        check_obs(p, obs)?;
        let t_len = obs.len();
        let em = EmisTable::new(&lp, obs);
        let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        lattice::span_forward(&lp, &em, 0, t_len, &lp.log_pi, &mut alpha);
        let log_p = log_sum_exp_slice(&alpha[t_len * s..]);
        if log_p == f64::NEG_INFINITY {
            continue;
        }
        let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        beta[t_len * s..].fill(0.0);
        lattice::span_backward(&lp, &em, 0, t_len, &mut beta);
        let mut cover = lattice::CoverDelta::new(p.m, t_len);
        lattice::span_accumulate(
            &lp,
            &em,
            0,
            t_len,
            &alpha,
            &beta,
            log_p,
            &mut pi_counts,
            &mut a_counts,
            &mut cover,
        );
        cover.flush(obs, p.n, &mut b_counts);
        ll += log_p;
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateLattice);
    }
    let next = HsmmParams {
        m: p.m,
        n: p.n,
        dmax: p.dmax,
        pi: mstep_pi(&pi_counts, kappa),
        a: mstep_a(&a_counts, p.m, p.dmax, kappa),
        b: mstep_b(&b_counts, p.m, p.n, kappa),
    };
    Ok((next, ll))
}

/// One parameter update from a batch of sequences.
pub fn reestimate(p: &HsmmParams, seqs: &[&[usize]], kappa: f64) -> Result<HsmmParams> {
    p.validate()?;
    em_pass(p, seqs, kappa).map(|(next, _)| next)
}

/// Expected state-to-state transition counts under the posterior, summed
/// over durations and sequences. Sequence-opening segments do not count;
/// sequences the model cannot explain are skipped.
pub fn expected_transition_counts(p: &HsmmParams, seqs: &[&[usize]]) -> Result<Vec<f64>> {
    p.validate()?;
    let lp = LogHsmm::new(p);
    let s = lp.s;
    let mut a_counts = vec![0.0; s * s];
    let mut used = false;
    for &obs in seqs {
        check_obs(p, obs)?;
        let t_len = obs.len();
        let em = EmisTable::new(&lp, obs);
        let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        lattice::span_forward(&lp, &em, 0, t_len, &lp.log_pi, &mut alpha);
        let log_p = log_sum_exp_slice(&alpha[t_len * s..]);
        if log_p == f64::NEG_INFINITY {
            continue;
        }
        let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        beta[t_len * s..].fill(0.0);
        lattice::span_backward(&lp, &em, 0, t_len, &mut beta);
        let mut cover = lattice::CoverDelta::new(p.m, t_len);
        let mut entry = vec![0.0; s];
        lattice::span_accumulate(
            &lp,
            &em,
            0,
            t_len,
            &alpha,
            &beta,
            log_p,
            &mut entry,
            &mut a_counts,
            &mut cover,
        );
        used = true;
    }
    if !used {
        return Err(Error::DegenerateLattice);
    }
    let mut out = vec![0.0; p.m * p.m];
    for src in 0..s {
        for tgt in 0..s {
            out[(src / p.dmax) * p.m + tgt / p.dmax] += a_counts[src * s + tgt];
        }
    }
    Ok(out)
}

/// Run the shared stopping loop over a reestimation step. Each iteration
/// scores the current parameters, records the row, stops before updating
/// when the gain falls below epsilon or the update budget is spent, and
/// otherwise applies the update. The returned likelihood always belongs to
/// the returned parameters.
pub(crate) fn run_em_loop<P, F>(
    mut params: P,
    config: &TrainConfig,
    mut step: F,
) -> Result<(P, f64, usize, Vec<IterationStat>)>
where
    F: FnMut(&P) -> Result<(P, f64)>,
{
    let mut history = Vec::new();
    let mut ll_prev = f64::NAN;
    let mut h = 1usize;
    loop {
        let (next, ll) = step(&params)?;
        let delta = if h == 1 { 0.0 } else { ll - ll_prev };
        history.push(IterationStat {
            iteration: h,
            log_likelihood: ll,
            delta,
        });
        if (h > 1 && delta < config.epsilon) || h > config.max_iters {
            return Ok((params, ll, h - 1, history));
        }
        params = next;
        ll_prev = ll;
        h += 1;
    }
}

/// Fit a baseline model to one label's sequences.
pub fn train(
    label: usize,
    seqs: &[&[usize]],
    m: usize,
    n: usize,
    dmax: usize,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    if seqs.is_empty() {
        return Err(Error::validation("training batch is empty"));
    }
    let init = init_params(m, n, dmax, config.seed);
    let (params, final_ll, iterations, history) =
        run_em_loop(init, config, |p| em_pass(p, seqs, config.kappa))?;
    Ok(TrainedModel {
        label,
        params: ModelParams::Hsmm(params),
        final_log_likelihood: final_ll,
        iterations,
        history: history.clone(),
        em_history: history,
    })
}

/// Score a sequence under one trained model, whatever its family.
pub fn score_model(model: &TrainedModel, obs: &[usize]) -> Result<f64> {
    match &model.params {
        ModelParams::Hsmm(p) => forward(p, obs).map(|(_, ll)| ll),
        ModelParams::Is(p) => crate::is_hsmm::forward_is(p, obs).map(|(_, ll)| ll),
        ModelParams::Ilp(p) => crate::ilp_hsmm::score_ilp(p, obs),
    }
}

/// Score a sequence under every model in the bank and pick the best label.
/// Ties resolve to the lowest label id; if every score is `-inf` the result
/// carries the lowest label and the `all_impossible` flag.
pub fn recognize(bank: &ModelBank, obs: &[usize]) -> Result<Recognition> {
    bank.validate()?;
    let mut scores = Vec::with_capacity(bank.models.len());
    for model in &bank.models {
        scores.push(score_model(model, obs)?);
    }
    let mut label = usize::MAX;
    let mut log_p = f64::NEG_INFINITY;
    for (model, &score) in bank.models.iter().zip(&scores) {
        let better = score > log_p
            || (score == log_p && score != f64::NEG_INFINITY && model.label < label);
        if better {
            log_p = score;
            label = model.label;
        }
    }
    let all_impossible = log_p == f64::NEG_INFINITY;
    if all_impossible {
        label = bank.models.iter().map(|m| m.label).min().unwrap_or(0);
    }
    Ok(Recognition {
        label,
        log_p,
        scores,
        all_impossible,
    })
}

/// Sample an index proportional to the given non-negative weights.
pub(crate) fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let x = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return Some(i);
        }
    }
    weights.iter().rposition(|&w| w > 0.0)
}

/// Most probable symbol of a state, ties to the lowest id.
pub(crate) fn argmax_symbol(p: &HsmmParams, j: usize) -> usize {
    let row = &p.b[j * p.n..(j + 1) * p.n];
    let mut best = 0usize;
    for (sym, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = sym;
        }
    }
    best
}

fn gen_hsmm(p: &HsmmParams, t_len: usize, mode: GenerateMode, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = p.num_supers();
    let mut out = Vec::with_capacity(t_len);
    let mut cur: Option<usize> = None;
    while out.len() < t_len {
        let row = match cur {
            None => &p.pi[..],
            Some(src) => &p.a[src * s..(src + 1) * s],
        };
        let sup = match mode {
            GenerateMode::MostLikely => {
                let mut best = f64::NEG_INFINITY;
                let mut best_sup = None;
                for (sup, &w) in row.iter().enumerate() {
                    let j = sup / p.dmax;
                    let d = sup % p.dmax + 1;
                    let score = ln(w) + d as f64 * ln(p.b[j * p.n + argmax_symbol(p, j)]);
                    if score > best {
                        best = score;
                        best_sup = Some(sup);
                    }
                }
                best_sup
            }
            GenerateMode::Sampled => sample_index(&mut rng, row),
        };
        let Some(sup) = sup else { break };
        let j = sup / p.dmax;
        let d = sup % p.dmax + 1;
        for _ in 0..d {
            if out.len() == t_len {
                break;
            }
            let sym = match mode {
                GenerateMode::MostLikely => argmax_symbol(p, j),
                GenerateMode::Sampled => {
                    match sample_index(&mut rng, &p.b[j * p.n..(j + 1) * p.n]) {
                        Some(sym) => sym,
                        None => return out,
                    }
                }
            };
            out.push(sym);
        }
        cur = Some(sup);
    }
    out
}

/// Generate a sequence of up to `t_len` ticks from a trained model. The
/// sequence may come up short if generation reaches a dead end.
pub fn generate(model: &TrainedModel, t_len: usize, mode: GenerateMode, seed: u64) -> Vec<usize> {
    match &model.params {
        ModelParams::Hsmm(p) => gen_hsmm(p, t_len, mode, seed),
        ModelParams::Is(p) => crate::is_hsmm::generate_is(p, t_len, mode, seed),
        ModelParams::Ilp(p) => crate::ilp_hsmm::generate_ilp(p, t_len, mode, seed),
    }
}
