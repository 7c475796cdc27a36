//! Wall-clock scaling measurements for training and recognition.

use std::time::Instant;

use semimarkov::datagen::{synth_dataset, GenProfile};
use semimarkov::eval::{classify, train_bank};
use semimarkov::hsmm::ModelKind;
use semimarkov::TrainConfig;

use crate::error::AppResult;

pub struct TimeRow {
    pub kind: ModelKind,
    pub n: usize,
    pub phase: &'static str,
    pub seconds: f64,
}

fn median3(mut xs: [f64; 3]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs[1]
}

fn time3<F: FnMut() -> AppResult<()>>(mut f: F) -> AppResult<f64> {
    let mut samples = [0.0f64; 3];
    for slot in &mut samples {
        let start = Instant::now();
        f()?;
        *slot = start.elapsed().as_secs_f64();
    }
    Ok(median3(samples))
}

/// Time train and recognize phases per kind and requested corpus size.
/// Sizes are total training-sequence counts; each is reached by scaling
/// sequences_per_label, so actual counts round to a multiple of the label
/// count. Each phase reports the median of three runs.
pub fn benchmark_time(
    kinds: &[ModelKind],
    sizes: &[usize],
    profile: &GenProfile,
    states: usize,
    dmax: usize,
    dmax_int: usize,
    config: &TrainConfig,
) -> AppResult<Vec<TimeRow>> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for &n in sizes {
            let mut sized = profile.clone();
            sized.sequences_per_label = (n / sized.num_labels).max(1);
            let (train, test) = synth_dataset(&sized)?;

            let train_secs = time3(|| {
                train_bank(kind, &train, states, dmax, dmax_int, config)?;
                Ok(())
            })?;
            rows.push(TimeRow {
                kind,
                n,
                phase: "train",
                seconds: train_secs,
            });

            let bank = train_bank(kind, &train, states, dmax, dmax_int, config)?;
            let recognize_secs = time3(|| {
                classify(&bank, &test, false)?;
                Ok(())
            })?;
            rows.push(TimeRow {
                kind,
                n,
                phase: "recognize",
                seconds: recognize_secs,
            });
        }
    }
    Ok(rows)
}
