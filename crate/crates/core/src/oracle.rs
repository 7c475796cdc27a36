//! Brute-force reference scorers.
//!
//! Everything here enumerates complete paths and accumulates linear-domain
//! products, sharing no code with the lattice kernels; tests compare the two
//! implementations against each other. Enumeration is guarded by a path
//! budget, so these run only on small instances. Tie-breaking among equal
//! best paths is unspecified here; exercise it with continuous parameters
//! where ties have measure zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::alphabet::INTERVAL;
use crate::error::{Error, Result};
use crate::hsmm::HsmmParams;
use crate::ilp_hsmm::{gaussian_pdf, IlpParams};
use crate::is_hsmm::{bucket, IsHsmmParams};
use crate::math::ln;

/// Maximum number of paths any oracle call will enumerate.
pub const ENUM_LIMIT: u64 = 10_000_000;

/// Count segmentations of a length-`t_len` sequence, saturating at the
/// budget.
fn count_paths(m: usize, dmax: usize, t_len: usize) -> u64 {
    // cnt[g][j]: segmentations of the first g ticks whose last state is j.
    let mut cnt = vec![0u64; (t_len + 1) * m];
    for j in 0..m {
        for d in 1..=dmax.min(t_len) {
            cnt[d * m + j] = 1;
        }
    }
    for g in 1..=t_len {
        for j in 0..m {
            let mut sum = cnt[g * m + j];
            for d in 1..=dmax.min(g) {
                for i in 0..m {
                    if i != j {
                        sum = sum.saturating_add(cnt[(g - d) * m + i].min(ENUM_LIMIT));
                    }
                }
            }
            // Clamp so the guard comparison stays meaningful after overflow.
            cnt[g * m + j] = sum.min(ENUM_LIMIT.saturating_mul(2));
        }
    }
    let mut total = 0u64;
    for j in 0..m {
        total = total.saturating_add(cnt[t_len * m + j]);
    }
    total
}

fn guard(m: usize, dmax: usize, t_len: usize) -> Result<()> {
    if count_paths(m, dmax, t_len) > ENUM_LIMIT {
        return Err(Error::TooLarge { limit: ENUM_LIMIT });
    }
    Ok(())
}

/// Linear-domain emission product of one segment.
fn seg_prob(p: &HsmmParams, j: usize, obs: &[usize]) -> f64 {
    obs.iter().map(|&sym| p.b[j * p.n + sym]).product()
}

fn enumerate_paths<F: FnMut(&[(usize, usize)], f64)>(
    p: &HsmmParams,
    obs: &[usize],
    mut visit: F,
) {
    let s = p.num_supers();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: FnMut(&[(usize, usize)], f64)>(
        p: &HsmmParams,
        obs: &[usize],
        s: usize,
        g: usize,
        prev: Option<usize>,
        prob: f64,
        stack: &mut Vec<(usize, usize)>,
        visit: &mut F,
    ) {
        if g == obs.len() {
            visit(stack, prob);
            return;
        }
        // Durations outermost, then states, so the visit order is fixed.
        for d in 1..=p.dmax.min(obs.len() - g) {
            for j in 0..p.m {
                if let Some(prev) = prev {
                    if prev / p.dmax == j {
                        continue;
                    }
                }
                let sup = p.sup(j, d);
                let trans = match prev {
                    None => p.pi[sup],
                    Some(prev) => p.a[prev * s + sup],
                };
                let w = trans * seg_prob(p, j, &obs[g..g + d]);
                if w == 0.0 {
                    continue;
                }
                stack.push((j, d));
                recurse(p, obs, s, g + d, Some(sup), prob * w, stack, visit);
                stack.pop();
            }
        }
    }
    recurse(p, obs, s, 0, None, 1.0, &mut stack, &mut visit);
}

/// Sum over all segmentations, by enumeration.
pub fn brute_likelihood(p: &HsmmParams, obs: &[usize]) -> Result<f64> {
    p.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    guard(p.m, p.dmax, obs.len())?;
    let mut total = 0.0f64;
    enumerate_paths(p, obs, |_, prob| total += prob);
    Ok(ln(total))
}

/// Sum over the segmentations with a segment boundary at `t`, by
/// enumeration.
pub fn brute_boundary_mass(p: &HsmmParams, obs: &[usize], t: usize) -> Result<f64> {
    p.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    guard(p.m, p.dmax, obs.len())?;
    let mut total = 0.0f64;
    enumerate_paths(p, obs, |segs, prob| {
        let mut g = 0usize;
        for &(_, d) in segs {
            g += d;
            if g == t {
                total += prob;
                return;
            }
        }
        if t == 0 {
            total += prob;
        }
    });
    Ok(ln(total))
}

/// Highest-probability segmentation, by enumeration.
pub fn brute_best_path(p: &HsmmParams, obs: &[usize]) -> Result<(Vec<(usize, usize)>, f64)> {
    p.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    guard(p.m, p.dmax, obs.len())?;
    let mut best = 0.0f64;
    let mut best_path: Vec<(usize, usize)> = Vec::new();
    enumerate_paths(p, obs, |segs, prob| {
        if prob > best {
            best = prob;
            best_path = segs.to_vec();
        }
    });
    Ok((best_path, ln(best)))
}

fn split_spans(obs: &[usize]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut spans = Vec::new();
    let mut gaps = Vec::new();
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

/// Sum over all bridged segmentations of an interval-bearing sequence, by
/// enumeration. An all-interval sequence scores zero.
pub fn brute_likelihood_is(p: &IsHsmmParams, obs: &[usize]) -> Result<f64> {
    p.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    let (spans, gaps) = split_spans(obs);
    if spans.is_empty() {
        return Ok(0.0);
    }
    let mut leaves = 1u64;
    for &(lo, hi) in &spans {
        leaves = leaves.saturating_mul(count_paths(p.base.m, p.base.dmax, hi - lo));
        if leaves > ENUM_LIMIT {
            return Err(Error::TooLarge { limit: ENUM_LIMIT });
        }
    }
    let s = p.base.num_supers();
    let a2 = |src: usize, bkt: usize, tgt: usize| p.a2[(src * p.dmax_int + bkt) * s + tgt];

    // Recurse over (span, boundary within span, previous super-state).
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        p: &IsHsmmParams,
        obs: &[usize],
        spans: &[(usize, usize)],
        gaps: &[usize],
        a2: &dyn Fn(usize, usize, usize) -> f64,
        k: usize,
        g: usize,
        prev: Option<usize>,
        prob: f64,
        total: &mut f64,
    ) {
        let s = p.base.num_supers();
        let (lo, hi) = spans[k];
        if g == hi {
            if k + 1 == spans.len() {
                *total += prob;
            } else {
                recurse(p, obs, spans, gaps, a2, k + 1, spans[k + 1].0, prev, prob, total);
            }
            return;
        }
        let first_of_span = g == lo;
        for d in 1..=p.base.dmax.min(hi - g) {
            for j in 0..p.base.m {
                if let Some(prev) = prev {
                    // The virtual start row (index s) divides past every state.
                    if prev / p.base.dmax == j {
                        continue;
                    }
                }
                let sup = p.base.sup(j, d);
                let trans = if first_of_span {
                    match prev {
                        None => p.base.pi[sup],
                        Some(prev) => a2(prev, bucket(gaps[k], p.dmax_int), sup),
                    }
                } else {
                    p.base.a[prev.unwrap() * s + sup]
                };
                let w = trans * seg_prob(&p.base, j, &obs[g..g + d]);
                if w == 0.0 {
                    continue;
                }
                recurse(p, obs, spans, gaps, a2, k, g + d, Some(sup), prob * w, total);
            }
        }
    }

    let mut total = 0.0f64;
    let start = if gaps[0] == 0 { None } else { Some(s) };
    recurse(
        p,
        obs,
        &spans,
        &gaps,
        &a2,
        0,
        spans[0].0,
        start,
        1.0,
        &mut total,
    );
    Ok(ln(total))
}

/// Highest-probability per-run state assignment with gap factors, by
/// enumeration over assignments.
pub fn brute_best_path_ilp(p: &IlpParams, obs: &[usize]) -> Result<(Vec<usize>, f64)> {
    p.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    let seg = crate::seq::segment_ids(obs);
    if seg.runs.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    if seg.runs.iter().any(|r| r.len > p.base.dmax) {
        return Ok((Vec::new(), f64::NEG_INFINITY));
    }
    let m = p.base.m as u64;
    let mut paths = m;
    for _ in 1..seg.runs.len() {
        paths = paths.saturating_mul(m.saturating_sub(1).max(1));
        if paths > ENUM_LIMIT {
            return Err(Error::TooLarge { limit: ENUM_LIMIT });
        }
    }
    // Out-of-support gap density, recomputed from the raw definition: the
    // attenuation constant times the smallest density any pair takes at its
    // own support edge.
    let floor = if p.fitted {
        p.c * p
            .l
            .iter()
            .map(|g| gaussian_pdf(g.hi, g.mu, g.sigma))
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let gap_prob = |i: usize, j: usize, gap: usize| -> f64 {
        if !p.fitted || gap == 0 {
            return 1.0;
        }
        let g = &p.l[i * p.base.m + j];
        let x = gap as f64;
        if x >= g.lo && x <= g.hi {
            gaussian_pdf(x, g.mu, g.sigma)
        } else {
            floor
        }
    };
    let s = p.base.num_supers();
    let mut best = 0.0f64;
    let mut best_states: Vec<usize> = Vec::new();
    let mut states: Vec<usize> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        p: &IlpParams,
        seg: &crate::seq::SegmentedSequence,
        gap_prob: &dyn Fn(usize, usize, usize) -> f64,
        s: usize,
        r: usize,
        prob: f64,
        states: &mut Vec<usize>,
        best: &mut f64,
        best_states: &mut Vec<usize>,
    ) {
        if r == seg.runs.len() {
            if prob > *best {
                *best = prob;
                *best_states = states.clone();
            }
            return;
        }
        let run = &seg.runs[r];
        for j in 0..p.base.m {
            let sup = p.base.sup(j, run.len);
            let mut w = seg_prob(&p.base, j, &vec![run.symbol; run.len]);
            if r == 0 {
                w *= p.base.pi[sup];
            } else {
                let i = states[r - 1];
                if i == j {
                    continue;
                }
                let src = p.base.sup(i, seg.runs[r - 1].len);
                w *= p.base.a[src * s + sup] * gap_prob(i, j, seg.gaps[r]);
            }
            if w == 0.0 {
                continue;
            }
            states.push(j);
            recurse(p, seg, gap_prob, s, r + 1, prob * w, states, best, best_states);
            states.pop();
        }
    }

    recurse(
        p,
        &seg,
        &gap_prob,
        s,
        0,
        1.0,
        &mut states,
        &mut best,
        &mut best_states,
    );
    if best == 0.0 {
        return Ok((Vec::new(), f64::NEG_INFINITY));
    }
    Ok((best_states, ln(best)))
}
