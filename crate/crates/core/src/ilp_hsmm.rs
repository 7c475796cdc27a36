//! Interval-length model: the baseline plus per-state-pair Gaussian gap
//! lengths.
//!
//! Ordinary ticks are modeled by the baseline block on the interval-stripped
//! sequence, one state per run with the run length as its duration. Each
//! positive gap between two runs contributes the density of a Gaussian
//! attached to the (previous state, next state) pair, truncated to the range
//! where it exceeds a point threshold; outside every pair's range a shared
//! floor applies. Gaps opening or closing a sequence carry no factor, and
//! gaps of length zero (plain symbol changes) carry none either.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::INTERVAL;
use crate::error::{Error, Result};
use crate::hsmm::{
    self, DurationPolicy, GenerateMode, HsmmParams, IterationStat, ModelParams, TrainConfig,
    TrainedModel,
};
use crate::math::{exp, ln, round, sqrt, LogSum};
use crate::seq::{segment_ids, strip_intervals};

/// Normal density.
pub fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    exp(-0.5 * z * z) / (sigma * sqrt(2.0 * core::f64::consts::PI))
}

/// A fitted interval-length distribution for one state pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGaussian {
    pub mu: f64,
    pub sigma: f64,
    /// Range where the density stays at or above the point threshold.
    pub lo: f64,
    pub hi: f64,
    /// Fitted from data rather than filled in from the corpus-wide prior.
    pub observed: bool,
}

impl IntervalGaussian {
    fn with_support(mu: f64, sigma: f64, delta_pt: f64, observed: bool) -> IntervalGaussian {
        let peak = 1.0 / (sigma * sqrt(2.0 * core::f64::consts::PI));
        let w = if peak > delta_pt {
            sigma * sqrt(2.0 * ln(peak / delta_pt))
        } else {
            0.0
        };
        IntervalGaussian {
            mu,
            sigma,
            lo: mu - w,
            hi: mu + w,
            observed,
        }
    }

    /// Fit mean and (sample) standard deviation, flooring the deviation; a
    /// single sample gets the floor directly.
    pub fn fit(samples: &[f64], sigma_min: f64, delta_pt: f64) -> IntervalGaussian {
        let n = samples.len();
        assert!(n > 0, "fit needs at least one sample");
        let mu = samples.iter().sum::<f64>() / n as f64;
        let sigma = if n == 1 {
            sigma_min
        } else {
            let var = samples.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64;
            let s = sqrt(var);
            if s > sigma_min {
                s
            } else {
                sigma_min
            }
        };
        IntervalGaussian::with_support(mu, sigma, delta_pt, true)
    }

    /// Prior for pairs never seen across a gap.
    pub fn prior(mu: f64, sigma: f64, delta_pt: f64) -> IntervalGaussian {
        IntervalGaussian::with_support(mu, sigma, delta_pt, false)
    }

    /// Smallest density the distribution takes inside its own support: the
    /// value at a support edge, or the peak when the support is a point.
    pub fn edge_density(&self) -> f64 {
        gaussian_pdf(self.hi, self.mu, self.sigma)
    }

    /// Density of a gap length given the shared out-of-support floor.
    pub fn prob(&self, gap: f64, floor: f64) -> f64 {
        if gap >= self.lo && gap <= self.hi {
            gaussian_pdf(gap, self.mu, self.sigma)
        } else {
            floor
        }
    }

    pub fn log_prob(&self, gap: f64, floor: f64) -> f64 {
        ln(self.prob(gap, floor))
    }
}

/// Interval-length parameters: a baseline block plus one Gaussian per
/// ordered state pair (row-major, empty until the first fit).
#[derive(Debug, Clone, PartialEq)]
pub struct IlpParams {
    pub base: HsmmParams,
    pub l: Vec<IntervalGaussian>,
    /// Before the first fit every gap density is taken as one.
    pub fitted: bool,
    pub delta_pt: f64,
    pub c: f64,
    pub sigma_min: f64,
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl IlpParams {
    pub fn fresh(base: HsmmParams, config: &TrainConfig) -> IlpParams {
        IlpParams {
            base,
            l: Vec::new(),
            fitted: false,
            delta_pt: config.delta_pt,
            c: config.c,
            sigma_min: config.sigma_min,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !positive_finite(self.delta_pt) || !positive_finite(self.sigma_min) {
            return Err(Error::dims("delta_pt and sigma_min must be positive"));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::dims("c must lie in [0, 1]"));
        }
        let want = self.base.m * self.base.m;
        if self.fitted && self.l.len() != want {
            return Err(Error::dims("interval table length does not match state count"));
        }
        if !self.fitted && !self.l.is_empty() {
            return Err(Error::dims("unfitted parameters carry an interval table"));
        }
        for g in &self.l {
            if !positive_finite(g.sigma) || !g.mu.is_finite() || g.hi < g.lo {
                return Err(Error::dims("interval Gaussian is degenerate"));
            }
        }
        Ok(())
    }

    /// Out-of-support density: the attenuation constant times the smallest
    /// in-support density over every pair.
    pub fn floor_density(&self) -> f64 {
        let mut min = f64::INFINITY;
        for g in &self.l {
            let e = g.edge_density();
            if e < min {
                min = e;
            }
        }
        if min.is_finite() {
            self.c * min
        } else {
            self.c * self.delta_pt
        }
    }

    fn log_gap(&self, i: usize, j: usize, gap: usize, floor: f64) -> f64 {
        if !self.fitted || gap == 0 {
            return 0.0;
        }
        self.l[i * self.base.m + j].log_prob(gap as f64, floor)
    }
}

/// Density of a gap length under one pair's distribution, with the
/// parameter set supplying the shared out-of-support floor.
pub fn interval_pdf(g: &IntervalGaussian, gap: f64, p: &IlpParams) -> f64 {
    g.prob(gap, p.floor_density())
}

/// Best per-run state assignment and its joint score, or nothing when no
/// assignment has positive probability. Overlong runs yield nothing as
/// well; callers differentiate via the run lengths.
fn best_assignment(p: &IlpParams, obs: &[usize]) -> Result<Option<(Vec<usize>, f64)>> {
    p.validate()?;
    hsmm::check_obs(&p.base, obs)?;
    let seg = segment_ids(obs);
    if seg.runs.is_empty() {
        return Ok(Some((Vec::new(), 0.0)));
    }
    if seg.runs.iter().any(|r| r.len > p.base.dmax) {
        return Ok(None);
    }
    let m = p.base.m;
    let floor = p.floor_density();
    let r_count = seg.runs.len();
    let emis = |r: usize, j: usize| -> f64 {
        seg.runs[r].len as f64 * ln(p.base.b[j * p.base.n + seg.runs[r].symbol])
    };
    let mut score = vec![f64::NEG_INFINITY; r_count * m];
    let mut back = vec![usize::MAX; r_count * m];
    for (j, slot) in score[..m].iter_mut().enumerate() {
        *slot = ln(p.base.pi[p.base.sup(j, seg.runs[0].len)]) + emis(0, j);
    }
    let s = p.base.num_supers();
    for r in 1..r_count {
        for j in 0..m {
            let tgt = p.base.sup(j, seg.runs[r].len);
            let mut best = f64::NEG_INFINITY;
            let mut best_i = usize::MAX;
            for i in 0..m {
                if i == j {
                    continue;
                }
                let prev = score[(r - 1) * m + i];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                let src = p.base.sup(i, seg.runs[r - 1].len);
                let cand =
                    prev + ln(p.base.a[src * s + tgt]) + p.log_gap(i, j, seg.gaps[r], floor);
                if cand > best {
                    best = cand;
                    best_i = i;
                }
            }
            score[r * m + j] = if best == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                best + emis(r, j)
            };
            back[r * m + j] = best_i;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_j = usize::MAX;
    for j in 0..m {
        if score[(r_count - 1) * m + j] > best {
            best = score[(r_count - 1) * m + j];
            best_j = j;
        }
    }
    if best == f64::NEG_INFINITY {
        return Ok(None);
    }
    let mut states = vec![0usize; r_count];
    let mut j = best_j;
    for r in (0..r_count).rev() {
        states[r] = j;
        if r > 0 {
            j = back[r * m + j];
        }
    }
    Ok(Some((states, best)))
}

/// Best per-run state assignment and its joint score (run emissions,
/// duration-indexed transitions, gap factors). Ties resolve to the lowest
/// state at every choice point. Runs longer than the duration cap error
/// under strict; with no explaining run the no-path case is an error in
/// both policies. An all-interval sequence has the empty assignment at
/// score zero.
pub fn viterbi_ilp(p: &IlpParams, obs: &[usize]) -> Result<(Vec<usize>, f64)> {
    viterbi_ilp_with(p, obs, DurationPolicy::Clamp)
}

pub fn viterbi_ilp_with(
    p: &IlpParams,
    obs: &[usize],
    policy: DurationPolicy,
) -> Result<(Vec<usize>, f64)> {
    match best_assignment(p, obs)? {
        Some(found) => Ok(found),
        None => {
            let seg = segment_ids(obs);
            if let Some(run) = seg.runs.iter().find(|r| r.len > p.base.dmax) {
                if policy == DurationPolicy::Strict {
                    return Err(Error::LengthExceeded {
                        run_len: run.len,
                        dmax: p.base.dmax,
                    });
                }
                return Ok((Vec::new(), f64::NEG_INFINITY));
            }
            Err(Error::ImpossibleSequence)
        }
    }
}

/// Recognition score, max criterion: the joint score of the best
/// assignment, `-inf` when none exists, zero for all-interval input.
pub fn score_ilp(p: &IlpParams, obs: &[usize]) -> Result<f64> {
    Ok(match best_assignment(p, obs)? {
        Some((_, score)) => score,
        None => f64::NEG_INFINITY,
    })
}

/// Recognition score, sum criterion: log sum over every assignment of the
/// joint score. Same structure as [`score_ilp`] with max replaced by sum.
pub fn forward_ilp(p: &IlpParams, obs: &[usize]) -> Result<f64> {
    p.validate()?;
    hsmm::check_obs(&p.base, obs)?;
    let seg = segment_ids(obs);
    if seg.runs.is_empty() {
        return Ok(0.0);
    }
    if seg.runs.iter().any(|r| r.len > p.base.dmax) {
        return Ok(f64::NEG_INFINITY);
    }
    let m = p.base.m;
    let s = p.base.num_supers();
    let floor = p.floor_density();
    let r_count = seg.runs.len();
    let emis = |r: usize, j: usize| -> f64 {
        seg.runs[r].len as f64 * ln(p.base.b[j * p.base.n + seg.runs[r].symbol])
    };
    let mut score = vec![f64::NEG_INFINITY; r_count * m];
    for (j, slot) in score[..m].iter_mut().enumerate() {
        *slot = ln(p.base.pi[p.base.sup(j, seg.runs[0].len)]) + emis(0, j);
    }
    for r in 1..r_count {
        for j in 0..m {
            let tgt = p.base.sup(j, seg.runs[r].len);
            let mut acc = LogSum::new();
            for i in 0..m {
                if i == j {
                    continue;
                }
                let prev = score[(r - 1) * m + i];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                let src = p.base.sup(i, seg.runs[r - 1].len);
                let x = prev + ln(p.base.a[src * s + tgt]) + p.log_gap(i, j, seg.gaps[r], floor);
                if x != f64::NEG_INFINITY {
                    acc.push(x);
                }
            }
            let sum = acc.value();
            score[r * m + j] = if sum == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                sum + emis(r, j)
            };
        }
    }
    let mut acc = LogSum::new();
    for j in 0..m {
        let x = score[(r_count - 1) * m + j];
        if x != f64::NEG_INFINITY {
            acc.push(x);
        }
    }
    Ok(acc.value())
}

/// Fit one Gaussian per state pair from the gaps of the batch's best
/// assignments. Pairs never seen across a positive gap get a wide prior
/// centered on the corpus-wide gap mean; with no gaps anywhere the prior
/// collapses to zero mean at the deviation floor.
pub fn fit_interval_stats(p: &IlpParams, seqs: &[&[usize]]) -> Result<Vec<IntervalGaussian>> {
    let m = p.base.m;
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); m * m];
    let mut all: Vec<f64> = Vec::new();
    for &obs in seqs {
        let Some((states, _)) = best_assignment(p, obs)? else {
            continue;
        };
        if states.is_empty() {
            continue;
        }
        let seg = segment_ids(obs);
        for r in 1..states.len() {
            let gap = seg.gaps[r];
            if gap > 0 {
                samples[states[r - 1] * m + states[r]].push(gap as f64);
                all.push(gap as f64);
            }
        }
    }
    let prior = if all.is_empty() {
        IntervalGaussian::prior(0.0, p.sigma_min, p.delta_pt)
    } else {
        let mu = all.iter().sum::<f64>() / all.len() as f64;
        let sd = if all.len() == 1 {
            0.0
        } else {
            sqrt(all.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / (all.len() - 1) as f64)
        };
        let sigma = if 3.0 * sd > p.sigma_min {
            3.0 * sd
        } else {
            p.sigma_min
        };
        IntervalGaussian::prior(mu, sigma, p.delta_pt)
    };
    Ok(samples
        .iter()
        .map(|pair| {
            if pair.is_empty() {
                prior.clone()
            } else {
                IntervalGaussian::fit(pair, p.sigma_min, p.delta_pt)
            }
        })
        .collect())
}

/// Fit an interval-length model to one label's sequences.
///
/// Each iteration advances the baseline block one reestimation step on the
/// stripped sequences, then refits the pair Gaussians from the freshest
/// assignments. `history` records the joint objective (baseline batch
/// likelihood plus the gap factors of the current best assignments);
/// `em_history` records the baseline part alone. Stopping follows the
/// baseline rows: the joint rows drop when the gap factors first enter, as
/// densities are below one, so their deltas are not comparable across the
/// first fit. Sequences without a valid assignment contribute no gap
/// factors.
pub fn train_ilp(
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
    let stripped: Vec<Vec<usize>> = seqs.iter().map(|&obs| strip_intervals(obs)).collect();
    let plain: Vec<&[usize]> = stripped
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.as_slice())
        .collect();
    if plain.is_empty() {
        return Err(Error::DegenerateLattice);
    }
    let mut params = IlpParams::fresh(hsmm::init_params(m, n, dmax, config.seed), config);
    let mut history: Vec<IterationStat> = Vec::new();
    let mut em_history: Vec<IterationStat> = Vec::new();
    let mut prev_joint = f64::NAN;
    let mut prev_base = f64::NAN;
    let mut h = 1usize;
    loop {
        let (base_next, base_ll) = hsmm::em_pass(&params.base, &plain, config.kappa)?;
        let mut gap_ll = 0.0;
        if params.fitted {
            let floor = params.floor_density();
            for &obs in seqs {
                let Some((states, _)) = best_assignment(&params, obs)? else {
                    continue;
                };
                let seg = segment_ids(obs);
                for r in 1..states.len() {
                    gap_ll += params.log_gap(states[r - 1], states[r], seg.gaps[r], floor);
                }
            }
        }
        let joint = base_ll + gap_ll;
        history.push(IterationStat {
            iteration: h,
            log_likelihood: joint,
            delta: if h == 1 { 0.0 } else { joint - prev_joint },
        });
        em_history.push(IterationStat {
            iteration: h,
            log_likelihood: base_ll,
            delta: if h == 1 { 0.0 } else { base_ll - prev_base },
        });
        if (h > 1 && base_ll - prev_base < config.epsilon) || h > config.max_iters {
            return Ok(TrainedModel {
                label,
                params: ModelParams::Ilp(params),
                final_log_likelihood: joint,
                iterations: h - 1,
                history,
                em_history,
            });
        }
        prev_joint = joint;
        prev_base = base_ll;
        let mut next = IlpParams {
            base: base_next,
            l: params.l,
            fitted: params.fitted,
            delta_pt: params.delta_pt,
            c: params.c,
            sigma_min: params.sigma_min,
        };
        next.l = fit_interval_stats(&next, seqs)?;
        next.fitted = true;
        params = next;
        h += 1;
    }
}

/// Interval-length recognition; the bank must hold interval-length models.
pub fn recognize_ilp(bank: &hsmm::ModelBank, obs: &[usize]) -> Result<hsmm::Recognition> {
    if bank.kind()? != hsmm::ModelKind::IlpHsmm {
        return Err(Error::validation("bank does not hold interval-length models"));
    }
    hsmm::recognize(bank, obs)
}

/// Generation: baseline segment choices, with the rounded mean gap of each
/// observed state pair inserted as interval ticks between segments. Pairs
/// only covered by the prior insert nothing.
pub fn generate_ilp(p: &IlpParams, t_len: usize, mode: GenerateMode, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = p.base.num_supers();
    let mut out: Vec<usize> = Vec::with_capacity(t_len);
    let mut cur: Option<usize> = None;
    while out.len() < t_len {
        let row = match cur {
            None => &p.base.pi[..],
            Some(src) => &p.base.a[src * s..(src + 1) * s],
        };
        let sup = match mode {
            GenerateMode::MostLikely => {
                let mut best = f64::NEG_INFINITY;
                let mut best_sup = None;
                for (sup, &w) in row.iter().enumerate() {
                    let j = sup / p.base.dmax;
                    let d = sup % p.base.dmax + 1;
                    let score = ln(w)
                        + d as f64 * ln(p.base.b[j * p.base.n + hsmm::argmax_symbol(&p.base, j)]);
                    if score > best {
                        best = score;
                        best_sup = Some(sup);
                    }
                }
                best_sup
            }
            GenerateMode::Sampled => hsmm::sample_index(&mut rng, row),
        };
        let Some(sup) = sup else { break };
        let j = sup / p.base.dmax;
        let d = sup % p.base.dmax + 1;
        if let Some(src) = cur {
            let i = src / p.base.dmax;
            if p.fitted {
                let g = &p.l[i * p.base.m + j];
                if g.observed {
                    let ticks = round(g.mu).max(0.0) as usize;
                    for _ in 0..ticks {
                        if out.len() == t_len {
                            break;
                        }
                        out.push(INTERVAL);
                    }
                }
            }
        }
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
        cur = Some(sup);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_pdf_matches_closed_form() {
        assert_relative_eq!(gaussian_pdf(0.0, 0.0, 1.0), 0.3989422804014327, epsilon = 1e-15);
        for &sigma in &[0.5f64, 1.0, 2.0] {
            let peak = 1.0 / sqrt(2.0 * core::f64::consts::PI * sigma * sigma);
            assert_relative_eq!(gaussian_pdf(3.0, 3.0, sigma), peak, epsilon = 1e-15);
        }
        assert_relative_eq!(
            gaussian_pdf(1.0, 3.0, 2.0),
            gaussian_pdf(5.0, 3.0, 2.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn fit_floors_deviation_and_sets_support() {
        let g = IntervalGaussian::fit(&[4.0, 6.0], 0.5, 1e-4);
        assert_relative_eq!(g.mu, 5.0);
        assert_relative_eq!(g.sigma, sqrt(2.0), epsilon = 1e-12);
        let peak = gaussian_pdf(g.mu, g.mu, g.sigma);
        let w = g.sigma * sqrt(2.0 * ln(peak / 1e-4));
        assert_relative_eq!(g.lo, 5.0 - w, epsilon = 1e-12);
        assert_relative_eq!(g.hi, 5.0 + w, epsilon = 1e-12);
        // The density meets the threshold exactly at the support edge.
        assert_relative_eq!(g.edge_density(), 1e-4, epsilon = 1e-12);
        let single = IntervalGaussian::fit(&[7.0], 0.5, 1e-4);
        assert_relative_eq!(single.mu, 7.0);
        assert_relative_eq!(single.sigma, 0.5);
        let tight = IntervalGaussian::fit(&[3.0, 3.0, 3.0], 0.5, 1e-4);
        assert_relative_eq!(tight.sigma, 0.5);
    }

    #[test]
    fn shrinking_the_threshold_never_shrinks_support() {
        let samples = [2.0, 5.0, 6.0];
        let mut prev = IntervalGaussian::fit(&samples, 0.5, 1e-2);
        for &d in &[1e-3, 1e-4, 1e-6, 1e-9] {
            let g = IntervalGaussian::fit(&samples, 0.5, d);
            assert!(g.lo <= prev.lo && g.hi >= prev.hi);
            prev = g;
        }
    }

    #[test]
    fn out_of_support_gaps_hit_the_shared_floor() {
        let mut p = forced();
        p.l = vec![
            IntervalGaussian::fit(&[4.0, 6.0], 0.5, 1e-4),
            IntervalGaussian::fit(&[2.0], 0.5, 1e-4),
            IntervalGaussian::prior(3.0, 1.0, 1e-4),
            IntervalGaussian::prior(3.0, 1.0, 1e-4),
        ];
        p.fitted = true;
        let g = &p.l[0];
        assert_relative_eq!(interval_pdf(g, 5.0, &p), gaussian_pdf(5.0, 5.0, g.sigma));
        // Far outside: half of the smallest in-support density over the table.
        let floor_src = p.l.iter().map(IntervalGaussian::edge_density).fold(f64::INFINITY, f64::min);
        assert_relative_eq!(interval_pdf(g, 50.0, &p), 0.5 * floor_src, epsilon = 1e-18);
    }

    /// Two states with deterministic emissions over {interval, a, b}.
    fn forced() -> IlpParams {
        let base = HsmmParams {
            m: 2,
            n: 3,
            dmax: 2,
            pi: vec![0.6, 0.1, 0.2, 0.1],
            a: vec![
                0.0, 0.0, 0.3, 0.7, //
                0.0, 0.0, 0.4, 0.6, //
                0.2, 0.8, 0.0, 0.0, //
                0.9, 0.1, 0.0, 0.0,
            ],
            b: vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        };
        IlpParams {
            base,
            l: Vec::new(),
            fitted: false,
            delta_pt: 1e-4,
            c: 0.5,
            sigma_min: 0.5,
        }
    }

    #[test]
    fn viterbi_assigns_runs_and_scores_them() {
        let p = forced();
        // a a | gap gap | b: states forced to [0, 1].
        let (states, score) = viterbi_ilp(&p, &[1, 1, 0, 0, 2]).unwrap();
        assert_eq!(states, vec![0, 1]);
        // pi(0,2) * a[(0,2) -> (1,1)] with unit emissions, no gap factor yet.
        assert_relative_eq!(score, (0.1f64 * 0.4).ln(), max_relative = 1e-12);
        let (states, score) = viterbi_ilp(&p, &[0, 0, 0]).unwrap();
        assert!(states.is_empty());
        assert_eq!(score, 0.0);
    }

    #[test]
    fn gap_factors_enter_once_fitted() {
        let mut p = forced();
        p.l = vec![
            IntervalGaussian::prior(0.0, 0.5, 1e-4),
            IntervalGaussian::fit(&[2.0, 2.0, 4.0], 0.5, 1e-4),
            IntervalGaussian::prior(0.0, 0.5, 1e-4),
            IntervalGaussian::prior(0.0, 0.5, 1e-4),
        ];
        p.fitted = true;
        let (states, score) = viterbi_ilp(&p, &[1, 1, 0, 0, 2]).unwrap();
        assert_eq!(states, vec![0, 1]);
        let g01 = &p.l[1];
        assert_relative_eq!(
            score,
            (0.1f64 * 0.4).ln() + g01.log_prob(2.0, p.floor_density()),
            max_relative = 1e-12
        );
        // Zero gaps never carry a factor.
        let (_, score) = viterbi_ilp(&p, &[1, 1, 2]).unwrap();
        assert_relative_eq!(score, (0.1f64 * 0.4).ln(), max_relative = 1e-12);
        // The sum criterion agrees when only one assignment exists and
        // otherwise dominates the max.
        assert_relative_eq!(
            forward_ilp(&p, &[1, 1, 0, 0, 2]).unwrap(),
            score_ilp(&p, &[1, 1, 0, 0, 2]).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn overlong_runs_respect_the_duration_policy() {
        let p = forced();
        let (states, score) = viterbi_ilp(&p, &[1, 1, 1]).unwrap();
        assert!(states.is_empty());
        assert_eq!(score, f64::NEG_INFINITY);
        let err = viterbi_ilp_with(&p, &[1, 1, 1], DurationPolicy::Strict).unwrap_err();
        assert!(matches!(err, Error::LengthExceeded { run_len: 3, dmax: 2 }));
    }

    #[test]
    fn dead_emissions_make_the_sequence_impossible() {
        let mut p = forced();
        // No state can emit symbol 1 any more.
        p.base.b = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let err = viterbi_ilp(&p, &[1, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::ImpossibleSequence));
        // Recognition maps the same situation to a -inf score.
        assert_eq!(score_ilp(&p, &[1, 1, 2]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn fit_interval_stats_collects_gaps_by_pair() {
        let p = forced();
        let seqs: Vec<Vec<usize>> = vec![
            vec![1, 1, 0, 0, 0, 2, 1],
            vec![1, 1, 0, 0, 0, 0, 0, 2],
        ];
        let refs: Vec<&[usize]> = seqs.iter().map(|s| s.as_slice()).collect();
        let l = fit_interval_stats(&p, &refs).unwrap();
        // Pair (0, 1) saw gaps 3 and 5.
        let g01 = &l[1];
        assert!(g01.observed);
        assert_relative_eq!(g01.mu, 4.0);
        assert_relative_eq!(g01.sigma, sqrt(2.0), epsilon = 1e-12);
        // Pair (1, 0) only appeared across a zero gap: prior, corpus mean 4.
        let g10 = &l[2];
        assert!(!g10.observed);
        assert_relative_eq!(g10.mu, 4.0);
        assert_relative_eq!(g10.sigma, 3.0 * sqrt(2.0), epsilon = 1e-12);
    }

    #[test]
    fn constant_gaps_fit_with_floored_deviation() {
        let p = forced();
        let seqs: Vec<Vec<usize>> = vec![
            vec![1, 0, 0, 0, 0, 2],
            vec![1, 0, 0, 0, 0, 2],
            vec![1, 0, 0, 0, 0, 2],
        ];
        let refs: Vec<&[usize]> = seqs.iter().map(|s| s.as_slice()).collect();
        let l = fit_interval_stats(&p, &refs).unwrap();
        let g01 = &l[1];
        assert_relative_eq!(g01.mu, 4.0);
        assert_relative_eq!(g01.sigma, 0.5);
    }

    #[test]
    fn interval_free_training_matches_baseline() {
        let seqs: Vec<Vec<usize>> = vec![vec![1, 2, 1, 1, 2], vec![2, 1, 2, 2, 1]];
        let refs: Vec<&[usize]> = seqs.iter().map(|s| s.as_slice()).collect();
        let config = TrainConfig {
            epsilon: 1e-3,
            max_iters: 6,
            ..TrainConfig::default()
        };
        let ours = train_ilp(0, &refs, 2, 3, 2, &config).unwrap();
        let base = hsmm::train(0, &refs, 2, 3, 2, &config).unwrap();
        assert_eq!(ours.iterations, base.iterations);
        for (a, b) in ours.history.iter().zip(&base.history) {
            assert_eq!(a.log_likelihood.to_bits(), b.log_likelihood.to_bits());
        }
        let ModelParams::Ilp(p) = &ours.params else {
            panic!("wrong params kind");
        };
        let ModelParams::Hsmm(bp) = &base.params else {
            panic!("wrong params kind");
        };
        assert_eq!(&p.base, bp);
        assert!(p.l.iter().all(|g| !g.observed));
    }

    #[test]
    fn training_recovers_gap_means() {
        // Gap between the two forced runs is always 3 or 4.
        let seqs: Vec<Vec<usize>> = vec![
            vec![1, 1, 0, 0, 0, 2, 2],
            vec![1, 1, 0, 0, 0, 0, 2, 2],
            vec![1, 1, 0, 0, 0, 2, 2],
        ];
        let refs: Vec<&[usize]> = seqs.iter().map(|s| s.as_slice()).collect();
        let config = TrainConfig {
            epsilon: 1e-4,
            max_iters: 20,
            ..TrainConfig::default()
        };
        let model = train_ilp(0, &refs, 2, 3, 2, &config).unwrap();
        let ModelParams::Ilp(p) = &model.params else {
            panic!("wrong params kind");
        };
        assert!(p.fitted);
        p.validate().unwrap();
        // One ordered pair carries the observed mean 10/3; its mirror is
        // possible too depending on which state won the first run.
        let observed: Vec<&IntervalGaussian> = p.l.iter().filter(|g| g.observed).collect();
        assert_eq!(observed.len(), 1);
        assert_relative_eq!(observed[0].mu, 10.0 / 3.0, epsilon = 0.1);
        // The baseline rows are monotone; the joint rows are allowed to drop
        // once when the gap factors first enter.
        for w in model.em_history.windows(2) {
            assert!(w[1].log_likelihood >= w[0].log_likelihood - 1e-8);
        }
        assert_eq!(model.history.len(), model.em_history.len());
    }

    #[test]
    fn generation_inserts_rounded_mean_gaps() {
        let mut p = forced();
        // Segment chain: state 0 duration 2, then state 1 duration 2, with a
        // fitted 2.3-mean gap on the (0, 1) pair only.
        p.base.pi = vec![0.05, 0.9, 0.02, 0.03];
        p.base.a = vec![
            0.0, 0.0, 0.1, 0.9, //
            0.0, 0.0, 0.2, 0.8, //
            0.1, 0.9, 0.0, 0.0, //
            0.05, 0.95, 0.0, 0.0,
        ];
        p.base.b = vec![0.0, 0.9, 0.1, 0.0, 0.2, 0.8];
        p.l = vec![
            IntervalGaussian::prior(0.0, 0.5, 1e-4),
            IntervalGaussian::fit(&[2.0, 2.0, 3.0], 0.5, 1e-4),
            IntervalGaussian::prior(9.0, 0.5, 1e-4),
            IntervalGaussian::prior(0.0, 0.5, 1e-4),
        ];
        p.fitted = true;
        let out = generate_ilp(&p, 8, GenerateMode::MostLikely, 1);
        // Gap 2.33 rounds to 2 ticks; the unobserved (1, 0) pair inserts none.
        assert_eq!(out, vec![1, 1, 0, 0, 2, 2, 1, 1]);
        let sampled = generate_ilp(&p, 20, GenerateMode::Sampled, 7);
        assert_eq!(sampled, generate_ilp(&p, 20, GenerateMode::Sampled, 7));
    }
}
