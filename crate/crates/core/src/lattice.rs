//! Shared segment-lattice kernels.
//!
//! A "span" is a maximal stretch of ticks that one chain of (state, duration)
//! segments must tile exactly: the whole sequence for the baseline model, each
//! run group between interval runs for the interval-state model. All three
//! model families drive these kernels; the baseline and the interval-state
//! model therefore perform bit-identical arithmetic on interval-free input.
//!
//! Boundary convention: boundary `g` means ticks `0..g` are consumed. A
//! segment (state j, duration d) ending at `g` covers ticks `g-d..g`.
//! Super-state index: `s = j * dmax + (d - 1)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::hsmm::HsmmParams;
use crate::math::{ln, LogSum};

/// Sentinel in Viterbi backpointer tables: segment was entered from the span
/// entry scores, not from a predecessor segment.
pub(crate) const FROM_ENTRY: u32 = u32::MAX;

/// Log-domain view of [`HsmmParams`]. Parameters are stored linear; every
/// lattice pass works on this view.
pub(crate) struct LogHsmm {
    pub m: usize,
    pub n: usize,
    pub dmax: usize,
    /// m * dmax, the super-state count.
    pub s: usize,
    pub log_pi: Vec<f64>,
    /// Row-major source -> target.
    pub log_a: Vec<f64>,
    /// Transposed copy, row-major target -> source (forward passes scan
    /// sources for a fixed target).
    pub log_a_t: Vec<f64>,
    pub log_b: Vec<f64>,
}

impl LogHsmm {
    pub fn new(p: &HsmmParams) -> LogHsmm {
        let s = p.m * p.dmax;
        let log_pi: Vec<f64> = p.pi.iter().map(|&x| ln(x)).collect();
        let log_a: Vec<f64> = p.a.iter().map(|&x| ln(x)).collect();
        let mut log_a_t = vec![f64::NEG_INFINITY; s * s];
        for src in 0..s {
            for tgt in 0..s {
                log_a_t[tgt * s + src] = log_a[src * s + tgt];
            }
        }
        LogHsmm {
            m: p.m,
            n: p.n,
            dmax: p.dmax,
            s,
            log_pi,
            log_a,
            log_a_t,
            log_b: p.b.iter().map(|&x| ln(x)).collect(),
        }
    }

    #[inline(always)]
    pub fn state_of(&self, sup: usize) -> usize {
        sup / self.dmax
    }

    #[inline(always)]
    pub fn dur_of(&self, sup: usize) -> usize {
        sup % self.dmax + 1
    }
}

/// Per-sequence emission prefix sums: windows of per-tick log emissions in
/// O(1). Zero-probability ticks are tracked in a separate counter so the
/// subtraction never produces `-inf - -inf`.
pub(crate) struct EmisTable {
    t_len: usize,
    /// m rows of t_len + 1 prefix sums over finite per-tick log emissions.
    cum: Vec<f64>,
    /// m rows of t_len + 1 counts of zero-probability ticks.
    zeros: Vec<u32>,
}

impl EmisTable {
    pub fn new(lp: &LogHsmm, obs: &[usize]) -> EmisTable {
        let t_len = obs.len();
        let mut cum = vec![0.0f64; lp.m * (t_len + 1)];
        let mut zeros = vec![0u32; lp.m * (t_len + 1)];
        for j in 0..lp.m {
            let row = j * (t_len + 1);
            let mut acc = 0.0f64;
            let mut z = 0u32;
            for (t, &sym) in obs.iter().enumerate() {
                let lb = lp.log_b[j * lp.n + sym];
                if lb == f64::NEG_INFINITY {
                    z += 1;
                } else {
                    acc += lb;
                }
                cum[row + t + 1] = acc;
                zeros[row + t + 1] = z;
            }
        }
        EmisTable { t_len, cum, zeros }
    }

    /// Sum of log emissions of state `j` over ticks `lo..hi`.
    #[inline(always)]
    pub fn window(&self, j: usize, lo: usize, hi: usize) -> f64 {
        let row = j * (self.t_len + 1);
        if self.zeros[row + hi] > self.zeros[row + lo] {
            f64::NEG_INFINITY
        } else {
            self.cum[row + hi] - self.cum[row + lo]
        }
    }
}

/// Sum over predecessors of `alpha_row[src] + log_a[src -> tgt]`, skipping
/// the target's own state block (structurally zero transitions).
#[inline]
fn gather_sources(lp: &LogHsmm, alpha_row: &[f64], tgt: usize, j: usize) -> f64 {
    let at_row = &lp.log_a_t[tgt * lp.s..(tgt + 1) * lp.s];
    let mut acc = LogSum::new();
    for i in 0..lp.m {
        if i == j {
            continue;
        }
        let base = i * lp.dmax;
        for di in 0..lp.dmax {
            let a = alpha_row[base + di];
            if a == f64::NEG_INFINITY {
                continue;
            }
            acc.push(a + at_row[base + di]);
        }
    }
    acc.value()
}

/// Forward pass over one span of ticks `lo..hi`.
///
/// `entry[tgt]` is the log probability of opening the span with super-state
/// `tgt` (initial or bridge factor, emission excluded). Rows `lo+1..=hi` of
/// the global `(T+1) x S` table `alpha` are written; the caller owns row
/// initialization outside the span.
pub(crate) fn span_forward(
    lp: &LogHsmm,
    em: &EmisTable,
    lo: usize,
    hi: usize,
    entry: &[f64],
    alpha: &mut [f64],
) {
    let s = lp.s;
    for g in lo + 1..=hi {
        // Split so the alpha row being written and the earlier rows read as
        // predecessors live in disjoint borrows.
        let (past, cur) = alpha.split_at_mut(g * s);
        let row = &mut cur[..s];
        for j in 0..lp.m {
            for d in 1..=lp.dmax.min(g - lo) {
                let tgt = j * lp.dmax + (d - 1);
                let trans = if g - d == lo {
                    entry[tgt]
                } else {
                    gather_sources(lp, &past[(g - d) * s..(g - d) * s + s], tgt, j)
                };
                row[tgt] = if trans == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    trans + em.window(j, g - d, g)
                };
            }
            for d in g - lo + 1..=lp.dmax {
                row[j * lp.dmax + (d - 1)] = f64::NEG_INFINITY;
            }
        }
    }
}

/// Backward pass over one span. Row `hi` of `beta` must already hold the exit
/// scores (0 at the final boundary, bridge factors otherwise); rows
/// `lo..hi` are written.
pub(crate) fn span_backward(
    lp: &LogHsmm,
    em: &EmisTable,
    lo: usize,
    hi: usize,
    beta: &mut [f64],
) {
    let s = lp.s;
    for g in (lo..hi).rev() {
        let (cur, future) = beta.split_at_mut((g + 1) * s);
        let row_start = g * s;
        for src in 0..s {
            let i = lp.state_of(src);
            let a_row = &lp.log_a[src * s..(src + 1) * s];
            let mut acc = LogSum::new();
            for j in 0..lp.m {
                if j == i {
                    continue;
                }
                for d in 1..=lp.dmax.min(hi - g) {
                    let tgt = j * lp.dmax + (d - 1);
                    let a = a_row[tgt];
                    if a == f64::NEG_INFINITY {
                        continue;
                    }
                    // `future` starts at boundary g + 1.
                    let b = future[(d - 1) * s + tgt];
                    if b == f64::NEG_INFINITY {
                        continue;
                    }
                    acc.push(a + em.window(j, g, g + d) + b);
                }
            }
            cur[row_start + src] = acc.value();
        }
    }
}

/// Viterbi (max-product) forward over one span. `score` mirrors `alpha`;
/// `back[g * S + tgt]` holds the predecessor super-state or [`FROM_ENTRY`].
/// Ties keep the first candidate in scan order, i.e. the lowest
/// (state, duration) predecessor.
pub(crate) fn span_viterbi(
    lp: &LogHsmm,
    em: &EmisTable,
    lo: usize,
    hi: usize,
    entry: &[f64],
    score: &mut [f64],
    back: &mut [u32],
) {
    let s = lp.s;
    for g in lo + 1..=hi {
        let (past, cur) = score.split_at_mut(g * s);
        let row = &mut cur[..s];
        for j in 0..lp.m {
            for d in 1..=lp.dmax.min(g - lo) {
                let tgt = j * lp.dmax + (d - 1);
                let mut best = f64::NEG_INFINITY;
                let mut best_src = FROM_ENTRY;
                if g - d == lo {
                    best = entry[tgt];
                } else {
                    let prev = &past[(g - d) * s..(g - d) * s + s];
                    let at_row = &lp.log_a_t[tgt * s..(tgt + 1) * s];
                    for i in 0..lp.m {
                        if i == j {
                            continue;
                        }
                        for di in 0..lp.dmax {
                            let src = i * lp.dmax + di;
                            let cand = prev[src] + at_row[src];
                            if cand > best {
                                best = cand;
                                best_src = src as u32;
                            }
                        }
                    }
                }
                row[tgt] = if best == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    best + em.window(j, g - d, g)
                };
                back[g * s + tgt] = best_src;
            }
            for d in g - lo + 1..=lp.dmax {
                let tgt = j * lp.dmax + (d - 1);
                row[tgt] = f64::NEG_INFINITY;
                back[g * s + tgt] = FROM_ENTRY;
            }
        }
    }
}

/// Per-state posterior tick coverage, accumulated as interval deltas and
/// resolved by prefix sum; turns segment posteriors into per-tick emission
/// counts without an inner loop over segment ticks.
pub(crate) struct CoverDelta {
    m: usize,
    t_len: usize,
    delta: Vec<f64>,
}

impl CoverDelta {
    pub fn new(m: usize, t_len: usize) -> CoverDelta {
        CoverDelta {
            m,
            t_len,
            delta: vec![0.0; m * (t_len + 1)],
        }
    }

    /// Add `w` to state `j`'s coverage of ticks `lo..hi`.
    #[inline(always)]
    pub fn add(&mut self, j: usize, lo: usize, hi: usize, w: f64) {
        self.delta[j * (self.t_len + 1) + lo] += w;
        self.delta[j * (self.t_len + 1) + hi] -= w;
    }

    /// Resolve coverage into emission counts: `b_counts[j][obs[t]] += cover`.
    pub fn flush(&self, obs: &[usize], n: usize, b_counts: &mut [f64]) {
        for j in 0..self.m {
            let row = &self.delta[j * (self.t_len + 1)..(j + 1) * (self.t_len + 1)];
            let mut cover = 0.0f64;
            for (t, &sym) in obs.iter().enumerate() {
                cover += row[t];
                if cover != 0.0 {
                    b_counts[j * n + sym] += cover;
                }
            }
        }
    }
}

/// Shared count accumulation for one span under one sequence's lattices.
///
/// Adds, for each first segment of the span, its posterior to `entry_counts`
/// (caller decides whether that is a pi count, a bridge count or a start-row
/// count), for each within-span transition its posterior to `a_counts`, and
/// each segment's posterior coverage to `cover`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn span_accumulate(
    lp: &LogHsmm,
    em: &EmisTable,
    lo: usize,
    hi: usize,
    alpha: &[f64],
    beta: &[f64],
    log_p: f64,
    entry_counts: &mut [f64],
    a_counts: &mut [f64],
    cover: &mut CoverDelta,
) {
    let s = lp.s;
    // First-segment posteriors and segment coverage.
    for g in lo + 1..=hi {
        for tgt in 0..s {
            let d = lp.dur_of(tgt);
            if d > g - lo {
                continue;
            }
            let post = alpha[g * s + tgt] + beta[g * s + tgt] - log_p;
            if post == f64::NEG_INFINITY {
                continue;
            }
            let w = crate::math::exp(post);
            cover.add(lp.state_of(tgt), g - d, g, w);
            if g - d == lo {
                entry_counts[tgt] += w;
            }
        }
    }
    // Within-span transitions: source segment ends at g, target covers g..g+d.
    for g in lo + 1..hi {
        let alpha_row = &alpha[g * s..(g + 1) * s];
        for j in 0..lp.m {
            for d in 1..=lp.dmax.min(hi - g) {
                let tgt = j * lp.dmax + (d - 1);
                let tail = em.window(j, g, g + d) + beta[(g + d) * s + tgt] - log_p;
                if tail == f64::NEG_INFINITY {
                    continue;
                }
                let at_row = &lp.log_a_t[tgt * s..(tgt + 1) * s];
                for i in 0..lp.m {
                    if i == j {
                        continue;
                    }
                    for di in 0..lp.dmax {
                        let src = i * lp.dmax + di;
                        let a = alpha_row[src];
                        if a == f64::NEG_INFINITY {
                            continue;
                        }
                        let x = a + at_row[src] + tail;
                        if x != f64::NEG_INFINITY {
                            a_counts[src * s + tgt] += crate::math::exp(x);
                        }
                    }
                }
            }
        }
    }
}
