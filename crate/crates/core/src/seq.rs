//! Sequences, run/gap segmentation and the in-memory dataset.

use alloc::string::String;
use alloc::vec::Vec;

use crate::alphabet::{SymbolTable, INTERVAL};
use crate::error::{Error, Result};

/// One observation sequence: symbol ids, one per unit time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    /// Label id into the owning dataset's label list, if any.
    pub label: Option<usize>,
    pub obs: Vec<usize>,
}

impl Sequence {
    pub fn new(label: Option<usize>, obs: Vec<usize>) -> Sequence {
        Sequence { label, obs }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Number of interval runs (gaps of positive length).
    pub fn num_intervals(&self) -> usize {
        segment_ids(&self.obs).gaps.iter().filter(|&&l| l > 0).count()
    }
}

/// A maximal run of one non-interval symbol. `start` is the 0-based tick
/// index of the first observation in the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub symbol: usize,
    pub start: usize,
    pub len: usize,
}

/// Run/gap view of a sequence.
///
/// `gaps[k]` is the interval length before run `k`; `gaps[runs.len()]` is the
/// trailing gap, so there is always exactly one more gap than runs and
/// `total == sum(run lengths) + sum(gaps)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedSequence {
    pub runs: Vec<Run>,
    pub gaps: Vec<usize>,
    pub total: usize,
}

impl SegmentedSequence {
    /// Inner gaps only: the gap after run `k` and before run `k + 1`,
    /// excluding the leading and trailing ones. Empty when fewer than 2 runs.
    pub fn inner_gaps(&self) -> &[usize] {
        if self.runs.len() < 2 {
            &[]
        } else {
            &self.gaps[1..self.runs.len()]
        }
    }
}

/// Encode raw symbol names positionally. Unknown names register themselves
/// while the table is open and are errors once it is frozen.
pub fn encode_sequence<S: AsRef<str>>(raw: &[S], table: &mut SymbolTable) -> Result<Sequence> {
    if raw.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut obs = Vec::with_capacity(raw.len());
    for name in raw {
        obs.push(table.intern(name.as_ref())?);
    }
    Ok(Sequence::new(None, obs))
}

/// Split a sequence into maximal non-interval runs and interval gaps.
pub fn segment_runs(seq: &Sequence) -> Result<SegmentedSequence> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(segment_ids(&seq.obs))
}

pub(crate) fn segment_ids(obs: &[usize]) -> SegmentedSequence {
    let mut runs = Vec::new();
    let mut gaps = Vec::new();
    let mut gap = 0usize;
    let mut t = 0usize;
    while t < obs.len() {
        let sym = obs[t];
        if sym == INTERVAL {
            gap += 1;
            t += 1;
            continue;
        }
        let start = t;
        while t < obs.len() && obs[t] == sym {
            t += 1;
        }
        gaps.push(gap);
        gap = 0;
        runs.push(Run {
            symbol: sym,
            start,
            len: t - start,
        });
    }
    gaps.push(gap);
    SegmentedSequence {
        runs,
        gaps,
        total: obs.len(),
    }
}

/// Inverse of [`segment_runs`]: rebuild the per-tick sequence, filling gaps
/// with the interval symbol.
pub fn desegment(seg: &SegmentedSequence) -> Sequence {
    let mut obs = Vec::with_capacity(seg.total);
    for (k, run) in seg.runs.iter().enumerate() {
        obs.extend(core::iter::repeat_n(INTERVAL, seg.gaps[k]));
        obs.extend(core::iter::repeat_n(run.symbol, run.len));
    }
    obs.extend(core::iter::repeat_n(INTERVAL, *seg.gaps.last().unwrap_or(&0)));
    Sequence::new(None, obs)
}

/// The observations of a sequence with every interval tick removed.
pub fn strip_intervals(obs: &[usize]) -> Vec<usize> {
    obs.iter().copied().filter(|&s| s != INTERVAL).collect()
}

/// A labeled collection of sequences over one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub table: SymbolTable,
    /// Label names indexed by label id.
    pub labels: Vec<String>,
    pub sequences: Vec<Sequence>,
    /// Split tag, conventionally "train" or "test".
    pub split: String,
}

impl Dataset {
    /// Check label density, symbol validity and non-emptiness.
    pub fn validate(&self) -> Result<()> {
        if self.sequences.is_empty() {
            return Err(Error::validation("dataset has no sequences"));
        }
        let n = self.table.len();
        let mut used = alloc::vec![false; self.labels.len()];
        for (idx, seq) in self.sequences.iter().enumerate() {
            if seq.is_empty() {
                return Err(Error::EmptySequence);
            }
            if let Some(&bad) = seq.obs.iter().find(|&&s| s >= n) {
                return Err(Error::dims(alloc::format!(
                    "sequence {idx} uses symbol id {bad} outside alphabet of size {n}"
                )));
            }
            match seq.label {
                Some(l) if l < self.labels.len() => used[l] = true,
                Some(l) => {
                    return Err(Error::dims(alloc::format!(
                        "sequence {idx} uses label id {l} outside label list of size {}",
                        self.labels.len()
                    )))
                }
                None => {}
            }
        }
        if let Some(unused) = used.iter().position(|&u| !u) {
            return Err(Error::validation(alloc::format!(
                "label {:?} is not used by any sequence",
                self.labels[unused]
            )));
        }
        Ok(())
    }

    /// All sequences carrying the given label.
    pub fn with_label(&self, label: usize) -> Vec<&Sequence> {
        self.sequences
            .iter()
            .filter(|s| s.label == Some(label))
            .collect()
    }
}
