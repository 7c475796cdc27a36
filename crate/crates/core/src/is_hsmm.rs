//! Interval-state model: the baseline plus a second-order bridge tensor.
//!
//! Interval ticks split a sequence into spans of ordinary symbols. Within a
//! span the baseline lattice applies unchanged. Across a gap of length `l`
//! the transition is drawn from a bridge tensor indexed by the source
//! super-state, the bucketed gap length, and the target super-state; a gap
//! opening the sequence uses a dedicated start row instead of the initial
//! distribution. A gap closing the sequence carries no factor, and a
//! sequence of nothing but interval ticks scores log probability zero.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::INTERVAL;
use crate::error::{Error, Result};
use crate::hsmm::{
    self, DurationPolicy, GenerateMode, HsmmParams, Lattice, ModelParams, TrainConfig,
    TrainedModel,
};
use crate::lattice::{self, EmisTable, LogHsmm};
use crate::math::{exp, ln, log_sum_exp_slice, LogSum};

/// Interval-state parameters: a baseline block plus the bridge tensor.
///
/// `a2` is row-major `[source][bucket][target]` with `S + 1` source rows;
/// row `S` is the start row used when the sequence opens with a gap. Each
/// (source, bucket) row is normalized over targets outside the source's
/// state block; the start row is normalized over all targets.
#[derive(Debug, Clone, PartialEq)]
pub struct IsHsmmParams {
    pub base: HsmmParams,
    /// Number of gap-length buckets; gaps of this length or longer share
    /// the last bucket.
    pub dmax_int: usize,
    pub a2: Vec<f64>,
}

/// Bucket index of a positive gap length.
#[inline]
pub fn bucket(gap: usize, dmax_int: usize) -> usize {
    gap.min(dmax_int) - 1
}

impl IsHsmmParams {
    /// Index of the start row in `a2`.
    #[inline]
    pub fn start_row(&self) -> usize {
        self.base.num_supers()
    }

    #[inline]
    fn a2_at(&self, src: usize, bkt: usize, tgt: usize) -> f64 {
        let s = self.base.num_supers();
        self.a2[(src * self.dmax_int + bkt) * s + tgt]
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.base.n < 2 {
            return Err(Error::dims(
                "interval-state models need the interval symbol plus at least one other",
            ));
        }
        if self.dmax_int == 0 {
            return Err(Error::dims("dmax_int must be positive"));
        }
        let s = self.base.num_supers();
        if self.a2.len() != (s + 1) * self.dmax_int * s {
            return Err(Error::dims("bridge tensor length does not match shape"));
        }
        for &x in &self.a2 {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::dims("bridge entries must be finite and non-negative"));
            }
        }
        for src in 0..=s {
            for bkt in 0..self.dmax_int {
                let mut sum = 0.0;
                for tgt in 0..s {
                    let x = self.a2_at(src, bkt, tgt);
                    if src < s && tgt / self.base.dmax == src / self.base.dmax {
                        if x != 0.0 {
                            return Err(Error::dims(
                                "bridge self-state entries must be zero",
                            ));
                        }
                    } else {
                        sum += x;
                    }
                }
                // Non-start rows have no targets in a single-state model.
                if self.base.m == 1 && src < s {
                    continue;
                }
                if crate::math::abs(sum - 1.0) > hsmm::ROW_SUM_TOL {
                    return Err(Error::dims("bridge row does not sum to 1"));
                }
            }
        }
        Ok(())
    }
}

/// Random valid interval-state parameters. The baseline block is drawn
/// exactly as [`hsmm::init_params`] draws it, then the bridge rows follow in
/// source-major, bucket-minor order.
pub fn init_params_is(m: usize, n: usize, dmax: usize, dmax_int: usize, seed: u64) -> IsHsmmParams {
    let base = hsmm::init_params(m, n, dmax, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let s = m * dmax;
    let mut a2 = vec![0.0; (s + 1) * dmax_int * s];
    for src in 0..=s {
        for bkt in 0..dmax_int {
            let row_at = (src * dmax_int + bkt) * s;
            if src == s {
                let row: Vec<f64> = (0..s).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
                let sum: f64 = row.iter().sum();
                for (tgt, &x) in row.iter().enumerate() {
                    a2[row_at + tgt] = x / sum;
                }
            } else {
                if m == 1 {
                    continue;
                }
                let i = src / dmax;
                let draws: Vec<f64> = (0..s - dmax).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
                let sum: f64 = draws.iter().sum();
                let mut k = 0;
                for tgt in 0..s {
                    if tgt / dmax != i {
                        a2[row_at + tgt] = draws[k] / sum;
                        k += 1;
                    }
                }
            }
        }
    }
    IsHsmmParams { base, dmax_int, a2 }
}

/// Maximal stretches of non-interval ticks and the gap lengths around them.
/// `gaps` has one entry per span boundary: leading, between each pair of
/// spans, trailing.
fn split_spans(obs: &[usize]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut gaps: Vec<usize> = Vec::new();
    let mut t = 0;
    while t < obs.len() {
        if obs[t] == INTERVAL {
            let lo = t;
            while t < obs.len() && obs[t] == INTERVAL {
                t += 1;
            }
            gaps.push(t - lo);
        } else {
            if gaps.len() == spans.len() {
                gaps.push(0);
            }
            let lo = t;
            while t < obs.len() && obs[t] != INTERVAL {
                t += 1;
            }
            spans.push((lo, t));
        }
    }
    if gaps.len() == spans.len() {
        gaps.push(0);
    }
    (spans, gaps)
}

/// Log view of the bridge tensor alongside the baseline log view.
struct LogIs {
    lp: LogHsmm,
    dmax_int: usize,
    la2: Vec<f64>,
}

impl LogIs {
    fn new(p: &IsHsmmParams) -> LogIs {
        LogIs {
            lp: LogHsmm::new(&p.base),
            dmax_int: p.dmax_int,
            la2: p.a2.iter().map(|&x| ln(x)).collect(),
        }
    }

    #[inline]
    fn row(&self, src: usize, bkt: usize) -> &[f64] {
        let s = self.lp.s;
        let at = (src * self.dmax_int + bkt) * s;
        &self.la2[at..at + s]
    }
}

/// Entry scores for the span after a gap: bridge rows combined over the
/// predecessors that ended the previous span.
fn bridge_entry(li: &LogIs, alpha_row: &[f64], bkt: usize) -> Vec<f64> {
    let s = li.lp.s;
    let mut entry = vec![f64::NEG_INFINITY; s];
    for (tgt, e) in entry.iter_mut().enumerate() {
        let mut acc = LogSum::new();
        for (src, &a) in alpha_row.iter().enumerate().take(s) {
            if a == f64::NEG_INFINITY {
                continue;
            }
            let x = li.row(src, bkt)[tgt];
            if x != f64::NEG_INFINITY {
                acc.push(a + x);
            }
        }
        *e = acc.value();
    }
    entry
}

fn longest_plain_run(obs: &[usize]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    let mut prev = usize::MAX;
    for &sym in obs {
        if sym == INTERVAL {
            cur = 0;
            prev = usize::MAX;
            continue;
        }
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

fn fill_alpha(li: &LogIs, em: &EmisTable, spans: &[(usize, usize)], gaps: &[usize], alpha: &mut [f64]) {
    let s = li.lp.s;
    let mut entry = if gaps[0] == 0 {
        li.lp.log_pi.clone()
    } else {
        li.row(s, bucket(gaps[0], li.dmax_int)).to_vec()
    };
    for (k, &(lo, hi)) in spans.iter().enumerate() {
        lattice::span_forward(&li.lp, em, lo, hi, &entry, alpha);
        if k + 1 < spans.len() {
            let bkt = bucket(gaps[k + 1], li.dmax_int);
            entry = bridge_entry(li, &alpha[hi * s..(hi + 1) * s], bkt);
        }
    }
}

/// First-segment scores of a span: emission window plus the beta value at
/// the segment's end boundary, per target super-state.
fn entry_beta(li: &LogIs, em: &EmisTable, lo: usize, hi: usize, beta: &[f64]) -> Vec<f64> {
    let s = li.lp.s;
    let mut eb = vec![f64::NEG_INFINITY; s];
    for j in 0..li.lp.m {
        for d in 1..=li.lp.dmax.min(hi - lo) {
            let tgt = j * li.lp.dmax + (d - 1);
            let b = beta[(lo + d) * s + tgt];
            if b != f64::NEG_INFINITY {
                eb[tgt] = em.window(j, lo, lo + d) + b;
            }
        }
    }
    eb
}

fn fill_beta(li: &LogIs, em: &EmisTable, spans: &[(usize, usize)], gaps: &[usize], beta: &mut [f64]) {
    let s = li.lp.s;
    for k in (0..spans.len()).rev() {
        let (lo, hi) = spans[k];
        if k + 1 == spans.len() {
            beta[hi * s..(hi + 1) * s].fill(0.0);
        } else {
            let (nlo, nhi) = spans[k + 1];
            let bkt = bucket(gaps[k + 1], li.dmax_int);
            let eb = entry_beta(li, em, nlo, nhi, beta);
            for src in 0..s {
                let row = li.row(src, bkt);
                let mut acc = LogSum::new();
                for (tgt, &e) in eb.iter().enumerate() {
                    if e == f64::NEG_INFINITY || row[tgt] == f64::NEG_INFINITY {
                        continue;
                    }
                    acc.push(row[tgt] + e);
                }
                beta[hi * s + src] = acc.value();
            }
        }
        lattice::span_backward(&li.lp, em, lo, hi, beta);
    }
}

/// Forward pass. Interval ticks contribute structure, not emission factors;
/// a sequence with no ordinary ticks scores zero.
pub fn forward_is(p: &IsHsmmParams, obs: &[usize]) -> Result<(Lattice, f64)> {
    forward_is_with(p, obs, DurationPolicy::Clamp)
}

pub fn forward_is_with(
    p: &IsHsmmParams,
    obs: &[usize],
    policy: DurationPolicy,
) -> Result<(Lattice, f64)> {
    p.validate()?;
    hsmm::check_obs(&p.base, obs)?;
    let (spans, gaps) = split_spans(obs);
    let li = LogIs::new(p);
    let s = li.lp.s;
    let t_len = obs.len();
    let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    let log_p = if spans.is_empty() {
        0.0
    } else {
        let em = EmisTable::new(&li.lp, obs);
        fill_alpha(&li, &em, &spans, &gaps, &mut alpha);
        let hi = spans.last().unwrap().1;
        log_sum_exp_slice(&alpha[hi * s..(hi + 1) * s])
    };
    if policy == DurationPolicy::Strict && log_p == f64::NEG_INFINITY {
        let run_len = longest_plain_run(obs);
        if run_len > p.base.dmax {
            return Err(Error::LengthExceeded {
                run_len,
                dmax: p.base.dmax,
            });
        }
    }
    Ok((
        Lattice {
            m: p.base.m,
            dmax: p.base.dmax,
            t_len,
            alpha,
            beta: Vec::new(),
        },
        log_p,
    ))
}

/// Backward pass, the mirror of [`forward_is`].
pub fn backward_is(p: &IsHsmmParams, obs: &[usize]) -> Result<Lattice> {
    p.validate()?;
    hsmm::check_obs(&p.base, obs)?;
    let (spans, gaps) = split_spans(obs);
    let li = LogIs::new(p);
    let t_len = obs.len();
    let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * li.lp.s];
    if !spans.is_empty() {
        let em = EmisTable::new(&li.lp, obs);
        fill_beta(&li, &em, &spans, &gaps, &mut beta);
    }
    Ok(Lattice {
        m: p.base.m,
        dmax: p.base.dmax,
        t_len,
        alpha: Vec::new(),
        beta,
    })
}

struct IsCounts {
    pi: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    a2: Vec<f64>,
}

fn em_pass_is(p: &IsHsmmParams, seqs: &[&[usize]], kappa: f64) -> Result<(IsHsmmParams, f64)> {
    let li = LogIs::new(p);
    let s = li.lp.s;
    let m = p.base.m;
    let n = p.base.n;
    let mut counts = IsCounts {
        pi: vec![0.0; s],
        a: vec![0.0; s * s],
        b: vec![0.0; m * n],
        a2: vec![0.0; (s + 1) * p.dmax_int * s],
    };
    let mut ll = 0.0;
    let mut used = 0usize;
    for &obs in seqs {
        hsmm::check_obs(&p.base, obs)?;
        let (spans, gaps) = split_spans(obs);
        if spans.is_empty() {
            used += 1;
            continue;
        }
        let t_len = obs.len();
        let em = EmisTable::new(&li.lp, obs);
        let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        fill_alpha(&li, &em, &spans, &gaps, &mut alpha);
        let last_hi = spans.last().unwrap().1;
        let log_p = log_sum_exp_slice(&alpha[last_hi * s..(last_hi + 1) * s]);
        if log_p == f64::NEG_INFINITY {
            continue;
        }
        let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        fill_beta(&li, &em, &spans, &gaps, &mut beta);
        let mut cover = lattice::CoverDelta::new(m, t_len);
        let mut scratch = vec![0.0; s];
        for (k, &(lo, hi)) in spans.iter().enumerate() {
            scratch.fill(0.0);
            lattice::span_accumulate(
                &li.lp,
                &em,
                lo,
                hi,
                &alpha,
                &beta,
                log_p,
                &mut scratch,
                &mut counts.a,
                &mut cover,
            );
            if k == 0 {
                if gaps[0] == 0 {
                    for (tgt, &w) in scratch.iter().enumerate() {
                        counts.pi[tgt] += w;
                    }
                } else {
                    let bkt = bucket(gaps[0], p.dmax_int);
                    let at = (s * p.dmax_int + bkt) * s;
                    for (tgt, &w) in scratch.iter().enumerate() {
                        counts.a2[at + tgt] += w;
                    }
                }
            }
            // Bridge posteriors into the next span.
            if k + 1 < spans.len() {
                let (nlo, nhi) = spans[k + 1];
                let bkt = bucket(gaps[k + 1], p.dmax_int);
                let eb = entry_beta(&li, &em, nlo, nhi, &beta);
                let alpha_row = &alpha[hi * s..(hi + 1) * s];
                for (src, &a) in alpha_row.iter().enumerate() {
                    if a == f64::NEG_INFINITY {
                        continue;
                    }
                    let row = li.row(src, bkt);
                    let at = (src * p.dmax_int + bkt) * s;
                    for (tgt, &e) in eb.iter().enumerate() {
                        if e == f64::NEG_INFINITY || row[tgt] == f64::NEG_INFINITY {
                            continue;
                        }
                        counts.a2[at + tgt] += exp(a + row[tgt] + e - log_p);
                    }
                }
            }
        }
        cover.flush(obs, n, &mut counts.b);
        ll += log_p;
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateLattice);
    }
    let mut a2 = vec![0.0; (s + 1) * p.dmax_int * s];
    for src in 0..=s {
        for bkt in 0..p.dmax_int {
            let at = (src * p.dmax_int + bkt) * s;
            let mut denom = 0.0;
            for tgt in 0..s {
                if src < s && tgt / p.base.dmax == src / p.base.dmax {
                    continue;
                }
                denom += counts.a2[at + tgt] + kappa;
            }
            for tgt in 0..s {
                if src < s && tgt / p.base.dmax == src / p.base.dmax {
                    continue;
                }
                let valid = if src < s { s - p.base.dmax } else { s };
                if valid == 0 {
                    continue;
                }
                a2[at + tgt] = if denom > 0.0 {
                    (counts.a2[at + tgt] + kappa) / denom
                } else {
                    1.0 / valid as f64
                };
            }
        }
    }
    let next = IsHsmmParams {
        base: HsmmParams {
            m,
            n,
            dmax: p.base.dmax,
            pi: hsmm::mstep_pi(&counts.pi, kappa),
            a: hsmm::mstep_a(&counts.a, m, p.base.dmax, kappa),
            // Interval ticks are never scored through emissions, so the
            // interval column only ever receives smoothing mass and the
            // emission update matches the baseline's exactly.
            b: hsmm::mstep_b(&counts.b, m, n, kappa),
        },
        dmax_int: p.dmax_int,
        a2,
    };
    Ok((next, ll))
}

/// One parameter update from a batch of sequences.
pub fn reestimate_is(p: &IsHsmmParams, seqs: &[&[usize]], kappa: f64) -> Result<IsHsmmParams> {
    p.validate()?;
    em_pass_is(p, seqs, kappa).map(|(next, _)| next)
}

/// Expected state-to-state transition counts under the posterior, summed
/// over durations, buckets, and sequences. Both within-span transitions and
/// bridges across gaps count; sequence-opening segments do not. Sequences
/// the model cannot explain are skipped.
pub fn expected_transition_counts(p: &IsHsmmParams, seqs: &[&[usize]]) -> Result<Vec<f64>> {
    p.validate()?;
    let li = LogIs::new(p);
    let s = li.lp.s;
    let m = p.base.m;
    let dmax = p.base.dmax;
    let mut a_counts = vec![0.0; s * s];
    let mut out = vec![0.0; m * m];
    let mut used = false;
    for &obs in seqs {
        hsmm::check_obs(&p.base, obs)?;
        let (spans, gaps) = split_spans(obs);
        if spans.is_empty() {
            used = true;
            continue;
        }
        let t_len = obs.len();
        let em = EmisTable::new(&li.lp, obs);
        let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        fill_alpha(&li, &em, &spans, &gaps, &mut alpha);
        let last_hi = spans.last().unwrap().1;
        let log_p = log_sum_exp_slice(&alpha[last_hi * s..(last_hi + 1) * s]);
        if log_p == f64::NEG_INFINITY {
            continue;
        }
        let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * s];
        fill_beta(&li, &em, &spans, &gaps, &mut beta);
        let mut cover = lattice::CoverDelta::new(m, t_len);
        let mut scratch = vec![0.0; s];
        for (k, &(lo, hi)) in spans.iter().enumerate() {
            scratch.fill(0.0);
            lattice::span_accumulate(
                &li.lp,
                &em,
                lo,
                hi,
                &alpha,
                &beta,
                log_p,
                &mut scratch,
                &mut a_counts,
                &mut cover,
            );
            if k + 1 < spans.len() {
                let (nlo, nhi) = spans[k + 1];
                let bkt = bucket(gaps[k + 1], p.dmax_int);
                let eb = entry_beta(&li, &em, nlo, nhi, &beta);
                let alpha_row = &alpha[hi * s..(hi + 1) * s];
                for (src, &a) in alpha_row.iter().enumerate() {
                    if a == f64::NEG_INFINITY {
                        continue;
                    }
                    let row = li.row(src, bkt);
                    for (tgt, &e) in eb.iter().enumerate() {
                        if e == f64::NEG_INFINITY || row[tgt] == f64::NEG_INFINITY {
                            continue;
                        }
                        out[(src / dmax) * m + tgt / dmax] += exp(a + row[tgt] + e - log_p);
                    }
                }
            }
        }
        used = true;
    }
    if !used {
        return Err(Error::DegenerateLattice);
    }
    for src in 0..s {
        for tgt in 0..s {
            out[(src / dmax) * m + tgt / dmax] += a_counts[src * s + tgt];
        }
    }
    Ok(out)
}

/// Fit an interval-state model to one label's sequences.
pub fn train_is(
    label: usize,
    seqs: &[&[usize]],
    m: usize,
    n: usize,
    dmax: usize,
    dmax_int: usize,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    if seqs.is_empty() {
        return Err(Error::validation("training batch is empty"));
    }
    let init = init_params_is(m, n, dmax, dmax_int, config.seed);
    let (params, final_ll, iterations, history) =
        hsmm::run_em_loop(init, config, |p| em_pass_is(p, seqs, config.kappa))?;
    Ok(TrainedModel {
        label,
        params: ModelParams::Is(params),
        final_log_likelihood: final_ll,
        iterations,
        history: history.clone(),
        em_history: history,
    })
}

/// Interval-state recognition; the bank must hold interval-state models.
pub fn recognize_is(bank: &hsmm::ModelBank, obs: &[usize]) -> Result<hsmm::Recognition> {
    if bank.kind()? != hsmm::ModelKind::IsHsmm {
        return Err(Error::validation("bank does not hold interval-state models"));
    }
    hsmm::recognize(bank, obs)
}

/// Greedy or sampled generation. Each step ranks the direct transition row
/// against every bucketed bridge row; choosing a bridge emits that bucket's
/// gap length in interval ticks before the target segment. Ties prefer the
/// direct row, then lower buckets, then lower target super-states.
pub fn generate_is(p: &IsHsmmParams, t_len: usize, mode: GenerateMode, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = p.base.num_supers();
    let k_buckets = p.dmax_int;
    let mut out: Vec<usize> = Vec::with_capacity(t_len);
    let mut cur: Option<usize> = None;
    while out.len() < t_len {
        // Candidate weights: direct row first, then bridge rows per bucket.
        // The opening step uses the initial distribution as its direct row
        // and the start row for every bucket.
        let (direct, bridge_src): (&[f64], usize) = match cur {
            None => (&p.base.pi[..], s),
            Some(src) => (&p.base.a[src * s..(src + 1) * s], src),
        };
        let mut weights: Vec<f64> = Vec::with_capacity(s * (k_buckets + 1));
        weights.extend_from_slice(direct);
        for bkt in 0..k_buckets {
            let at = (bridge_src * p.dmax_int + bkt) * s;
            weights.extend_from_slice(&p.a2[at..at + s]);
        }
        let choice = match mode {
            GenerateMode::MostLikely => {
                let mut best = f64::NEG_INFINITY;
                let mut best_at = None;
                for (idx, &w) in weights.iter().enumerate() {
                    let tgt = idx % s;
                    let j = tgt / p.base.dmax;
                    let d = tgt % p.base.dmax + 1;
                    let score =
                        ln(w) + d as f64 * ln(p.base.b[j * p.base.n + hsmm::argmax_symbol(&p.base, j)]);
                    if score > best {
                        best = score;
                        best_at = Some(idx);
                    }
                }
                best_at
            }
            GenerateMode::Sampled => hsmm::sample_index(&mut rng, &weights),
        };
        let Some(idx) = choice else { break };
        let tgt = idx % s;
        let gap = idx / s;
        if gap > 0 {
            for _ in 0..gap {
                if out.len() == t_len {
                    break;
                }
                out.push(INTERVAL);
            }
        }
        let j = tgt / p.base.dmax;
        let d = tgt % p.base.dmax + 1;
        for _ in 0..d {
            if out.len() == t_len {
                break;
            }
            let sym = match mode {
                GenerateMode::MostLikely => hsmm::argmax_symbol(&p.base, j),
                GenerateMode::Sampled => {
                    match hsmm::sample_index(&mut rng, &p.base.b[j * p.base.n..(j + 1) * p.base.n])
                    {
                        Some(sym) => sym,
                        None => return out,
                    }
                }
            };
            out.push(sym);
        }
        cur = Some(tgt);
    }
    out
}
