//! Synthetic data: volume thresholding, scale encoding, and parameterized
//! run/gap sequence generation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{SymbolTable, END, INTERVAL, START};
use crate::error::{Error, Result};
use crate::math::{abs, round};
use crate::seq::{Dataset, Sequence};

/// A sound-power trace, one non-negative sample per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTrace {
    pub samples: Vec<f64>,
}

impl VolumeTrace {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptySequence);
        }
        if self.samples.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::validation("volume samples must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Alphabet produced by [`quantize_volume`]: the reserved symbols plus
/// "high" and "low".
pub fn volume_table() -> SymbolTable {
    SymbolTable::from_names(&["high", "low"]).unwrap()
}

/// Threshold a power trace into high / low / interval ticks: `v >= b2` is
/// high, `b1 <= v < b2` is low, anything quieter is an interval tick.
pub fn quantize_volume(trace: &VolumeTrace, b1: f64, b2: f64) -> Result<Sequence> {
    if !b1.is_finite() || b1 < 0.0 || !b2.is_finite() || b2 < b1 {
        return Err(Error::InvalidThresholds);
    }
    trace.validate()?;
    let table = volume_table();
    let high = table.id_of("high").unwrap();
    let low = table.id_of("low").unwrap();
    let obs = trace
        .samples
        .iter()
        .map(|&v| {
            if v >= b2 {
                high
            } else if v >= b1 {
                low
            } else {
                INTERVAL
            }
        })
        .collect();
    Ok(Sequence::new(None, obs))
}

/// Pitch names in scale order; value `k * 0.01` maps to `PITCH_NAMES[k - 1]`.
pub const PITCH_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Alphabet produced by [`music_scale_encode`]: the reserved symbols plus
/// the twelve pitches.
pub fn music_table() -> SymbolTable {
    SymbolTable::from_names(&PITCH_NAMES).unwrap()
}

const SCALE_STEP: f64 = 0.01;
const SCALE_TOL: f64 = 1e-6;

/// Encode scale values on the 0.01 grid: 0.01 through 0.12 map to the
/// twelve pitches, 0.00 marks an interval tick.
pub fn music_scale_encode(values: &[f64]) -> Result<Sequence> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut obs = Vec::with_capacity(values.len());
    for &v in values {
        let k = round(v / SCALE_STEP);
        if !(0.0..=12.0).contains(&k) || abs(k * SCALE_STEP - v) > SCALE_TOL {
            return Err(Error::UnknownScaleValue { value: v });
        }
        let k = k as usize;
        obs.push(if k == 0 { INTERVAL } else { 2 + k });
    }
    Ok(Sequence::new(None, obs))
}

/// A label's latent structure: run symbols (0-based ordinary indices),
/// per-run durations, and the gaps between consecutive runs. A zero gap
/// means the runs are adjacent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTemplate {
    pub symbols: Vec<usize>,
    pub durations: Vec<usize>,
    pub gaps: Vec<usize>,
}

/// Generation profile. Templates are drawn per label from the ranges unless
/// given explicitly; each emitted sequence perturbs its template with
/// duration/gap jitter (plus or minus one, clipped to the range, zero gaps
/// never jittered) and symbol substitution with probability `p_noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenProfile {
    pub num_labels: usize,
    /// Sequences per label in each split.
    pub sequences_per_label: usize,
    /// Runs per drawn template; ignored when templates are explicit.
    pub runs_per_seq: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub l_min: usize,
    pub l_max: usize,
    /// Number of ordinary symbols (interval and markers not included).
    pub alphabet_size: usize,
    pub p_noise: f64,
    pub jitter: bool,
    pub add_start_end: bool,
    pub templates: Option<Vec<LabelTemplate>>,
    pub seed: u64,
}

impl Default for GenProfile {
    fn default() -> GenProfile {
        GenProfile {
            num_labels: 27,
            sequences_per_label: 3,
            runs_per_seq: 5,
            d_min: 2,
            d_max: 2,
            l_min: 1,
            l_max: 10,
            alphabet_size: 12,
            p_noise: 0.05,
            jitter: true,
            add_start_end: false,
            templates: None,
            seed: 0,
        }
    }
}

impl GenProfile {
    pub fn validate(&self) -> Result<()> {
        if self.num_labels == 0 || self.sequences_per_label == 0 || self.runs_per_seq == 0 {
            return Err(Error::validation("profile counts must be positive"));
        }
        if self.d_min == 0 || self.d_min > self.d_max {
            return Err(Error::validation("need 1 <= d_min <= d_max"));
        }
        if self.l_min > self.l_max {
            return Err(Error::validation("need l_min <= l_max"));
        }
        if self.alphabet_size == 0 {
            return Err(Error::validation("alphabet must have at least one symbol"));
        }
        if !(0.0..=1.0).contains(&self.p_noise) {
            return Err(Error::validation("p_noise must lie in [0, 1]"));
        }
        if let Some(templates) = &self.templates {
            if templates.len() != self.num_labels {
                return Err(Error::validation("one template per label required"));
            }
            for t in templates {
                let r = t.symbols.len();
                if r == 0 || t.durations.len() != r || t.gaps.len() + 1 != r {
                    return Err(Error::validation("template lengths are inconsistent"));
                }
                if t.symbols.iter().any(|&s| s >= self.alphabet_size) {
                    return Err(Error::validation("template symbol outside alphabet"));
                }
                if t.durations.iter().any(|&d| d < self.d_min || d > self.d_max) {
                    return Err(Error::validation("template duration outside range"));
                }
                for (k, &g) in t.gaps.iter().enumerate() {
                    if g != 0 && (g < self.l_min || g > self.l_max) {
                        return Err(Error::validation("template gap outside range"));
                    }
                    if g == 0 && t.symbols[k] == t.symbols[k + 1] {
                        return Err(Error::validation("adjacent template runs share a symbol"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Ten labels in five twin pairs that share every first-order statistic.
    ///
    /// Each pair uses two gap lengths (g, h) in four (pre, gap, post)
    /// blocks; the twin swaps which gap goes with which block. Both twins
    /// then have identical run chains, identical (pre, gap) pairs, and
    /// identical (gap, post) pairs, so any model reading gaps through a
    /// first-order chain cannot separate them; only the joint
    /// (pre, gap, post) triple differs. The five pairs draw from ten
    /// disjoint length classes spaced three apart, so the plus-or-minus-one
    /// jitter never moves a gap into another class and any two labels from
    /// different pairs disagree in length class at every gap slot.
    pub fn gap_signature(seed: u64) -> GenProfile {
        let pairs: [(usize, usize); 5] = [(1, 4), (7, 10), (13, 16), (19, 22), (25, 28)];
        let mut templates = Vec::with_capacity(10);
        for &(g, h) in &pairs {
            // Runs a c a d b c b d; blocks (a,g,c) (a,h,d) (b,h,c) (b,g,d).
            let symbols = vec![0, 2, 0, 3, 1, 2, 1, 3];
            let durations = vec![2; 8];
            templates.push(LabelTemplate {
                symbols: symbols.clone(),
                durations: durations.clone(),
                gaps: vec![g, 0, h, 0, h, 0, g],
            });
            templates.push(LabelTemplate {
                symbols,
                durations,
                gaps: vec![h, 0, g, 0, g, 0, h],
            });
        }
        GenProfile {
            num_labels: 10,
            sequences_per_label: 4,
            runs_per_seq: 8,
            d_min: 2,
            d_max: 2,
            l_min: 1,
            l_max: 29,
            alphabet_size: 4,
            p_noise: 0.0,
            jitter: true,
            add_start_end: false,
            templates: Some(templates),
            seed,
        }
    }

    /// Three labels whose sequences carry exactly `k` gaps of nominal
    /// length three between duration-two runs; labels differ in which
    /// symbol the run cycle starts on.
    pub fn interval_sweep(k: usize, seed: u64) -> GenProfile {
        let alphabet = 3usize;
        let mut templates = Vec::with_capacity(3);
        for label in 0..3 {
            let symbols: Vec<usize> = (0..=k).map(|r| (label + r) % alphabet).collect();
            templates.push(LabelTemplate {
                symbols,
                durations: vec![2; k + 1],
                gaps: vec![3; k],
            });
        }
        GenProfile {
            num_labels: 3,
            sequences_per_label: 4,
            runs_per_seq: k + 1,
            d_min: 2,
            d_max: 2,
            l_min: 2,
            l_max: 4,
            alphabet_size: alphabet,
            p_noise: 0.0,
            jitter: true,
            add_start_end: false,
            templates: Some(templates),
            seed,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream per (seed, stream tag, label, index).
fn derive_seed(seed: u64, stream: u64, label: usize, idx: usize) -> u64 {
    splitmix64(seed ^ splitmix64(stream ^ splitmix64(label as u64 ^ splitmix64(idx as u64))))
}

fn ordinary_name(k: usize) -> String {
    if k < 26 {
        String::from(char::from(b'a' + k as u8))
    } else {
        format!("s{k}")
    }
}

/// Plus or minus one, centered: 0 with probability 1/2, each direction 1/4.
fn jitter_step(rng: &mut ChaCha8Rng) -> i64 {
    let u = rng.gen::<f64>();
    if u < 0.25 {
        -1
    } else if u < 0.75 {
        0
    } else {
        1
    }
}

fn clip(x: i64, lo: usize, hi: usize) -> usize {
    x.clamp(lo as i64, hi as i64) as usize
}

fn draw_template(profile: &GenProfile, rng: &mut ChaCha8Rng) -> LabelTemplate {
    let r = profile.runs_per_seq;
    let mut symbols = Vec::with_capacity(r);
    for k in 0..r {
        let sym = if k == 0 || profile.alphabet_size == 1 {
            rng.gen_range(0..profile.alphabet_size)
        } else {
            // Avoid repeating the previous run's symbol.
            let prev = symbols[k - 1];
            let draw = rng.gen_range(0..profile.alphabet_size - 1);
            if draw >= prev {
                draw + 1
            } else {
                draw
            }
        };
        symbols.push(sym);
    }
    let durations = (0..r)
        .map(|_| rng.gen_range(profile.d_min..=profile.d_max))
        .collect();
    let gaps = (0..r.saturating_sub(1))
        .map(|_| rng.gen_range(profile.l_min..=profile.l_max))
        .collect();
    LabelTemplate {
        symbols,
        durations,
        gaps,
    }
}

fn emit_sequence(
    profile: &GenProfile,
    template: &LabelTemplate,
    label: usize,
    rng: &mut ChaCha8Rng,
) -> Sequence {
    let r = template.symbols.len();
    let mut obs: Vec<usize> = Vec::new();
    if profile.add_start_end {
        obs.push(START);
    }
    for k in 0..r {
        if k > 0 {
            let mut gap = template.gaps[k - 1];
            if profile.jitter && gap > 0 {
                gap = clip(
                    gap as i64 + jitter_step(rng),
                    profile.l_min.max(1),
                    profile.l_max,
                );
            }
            obs.extend(core::iter::repeat_n(INTERVAL, gap));
        }
        let mut sym = template.symbols[k];
        if profile.p_noise > 0.0 && rng.gen::<f64>() < profile.p_noise && profile.alphabet_size > 1
        {
            let draw = rng.gen_range(0..profile.alphabet_size - 1);
            sym = if draw >= sym { draw + 1 } else { draw };
        }
        let mut dur = template.durations[k];
        if profile.jitter {
            dur = clip(dur as i64 + jitter_step(rng), profile.d_min, profile.d_max);
        }
        obs.extend(core::iter::repeat_n(3 + sym, dur));
    }
    if profile.add_start_end {
        obs.push(END);
    }
    Sequence::new(Some(label), obs)
}

/// Generate matched train and test splits from a profile. Sequences are
/// deterministic in the profile alone: every (split, label, index) slot has
/// its own derived random stream.
pub fn synth_dataset(profile: &GenProfile) -> Result<(Dataset, Dataset)> {
    profile.validate()?;
    let mut table = SymbolTable::new();
    for k in 0..profile.alphabet_size {
        table.intern(&ordinary_name(k))?;
    }
    table.freeze();
    let labels: Vec<String> = (0..profile.num_labels)
        .map(|l| format!("label{l:02}"))
        .collect();
    let templates: Vec<LabelTemplate> = match &profile.templates {
        Some(t) => t.clone(),
        None => (0..profile.num_labels)
            .map(|l| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(profile.seed, 2, l, 0));
                draw_template(profile, &mut rng)
            })
            .collect(),
    };
    let mut splits = Vec::with_capacity(2);
    for (split_id, split) in [(0u64, "train"), (1u64, "test")] {
        let mut sequences = Vec::with_capacity(profile.num_labels * profile.sequences_per_label);
        for (l, template) in templates.iter().enumerate() {
            for idx in 0..profile.sequences_per_label {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(profile.seed, split_id, l, idx + 3));
                sequences.push(emit_sequence(profile, template, l, &mut rng));
            }
        }
        splits.push(Dataset {
            table: table.clone(),
            labels: labels.clone(),
            sequences,
            split: String::from(split),
        });
    }
    let test = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Ok((train, test))
}
