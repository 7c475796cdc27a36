//! End-to-end training behavior: monotone likelihood climbs, the
//! interval-state bias fix, ranking reductions, and large-input scaling.

use semimarkov::datagen::{synth_dataset, GenProfile};
use semimarkov::hsmm::{
    expected_transition_counts, forward, init_params, train, viterbi, HsmmParams, ModelBank,
    ModelParams, TrainConfig, TrainedModel,
};
use semimarkov::ilp_hsmm::{score_ilp, train_ilp, IlpParams};
use semimarkov::is_hsmm::{self, init_params_is, recognize_is, train_is, IsHsmmParams};
use semimarkov::oracle::brute_likelihood_is;
use semimarkov::seq::strip_intervals;

fn config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..TrainConfig::default()
    }
}

fn obs_slices(seqs: &[Vec<usize>]) -> Vec<&[usize]> {
    seqs.iter().map(|s| s.as_slice()).collect()
}

/// Push `reps` copies of a run/gap template as one observation sequence.
/// `runs` pairs (symbol, duration); `gaps[k]` precedes run `k`, with
/// `gaps[0]` applied only between repetitions.
fn build_seq(runs: &[(usize, usize)], gaps: &[usize], reps: usize) -> Vec<usize> {
    assert_eq!(gaps.len(), runs.len());
    let mut obs = Vec::new();
    for rep in 0..reps {
        for (k, &(sym, d)) in runs.iter().enumerate() {
            if k > 0 || rep > 0 {
                obs.extend(core::iter::repeat_n(0, gaps[k]));
            }
            obs.extend(core::iter::repeat_n(sym, d));
        }
    }
    obs
}

#[test]
fn likelihood_never_dips_for_any_family() {
    let profile = GenProfile {
        num_labels: 3,
        sequences_per_label: 4,
        runs_per_seq: 4,
        d_min: 1,
        d_max: 3,
        l_min: 1,
        l_max: 4,
        alphabet_size: 6,
        p_noise: 0.05,
        jitter: true,
        add_start_end: false,
        templates: None,
        seed: 11,
    };
    let (train_set, _) = synth_dataset(&profile).unwrap();
    let n = train_set.table.len();
    for seed in 0..6u64 {
        let cfg = config(seed);
        for label in 0..3 {
            let seqs: Vec<&[usize]> = train_set
                .with_label(label)
                .into_iter()
                .map(|s| s.obs.as_slice())
                .collect();
            let models = [
                train(label, &seqs, 3, n, 5, &cfg).unwrap(),
                train_is(label, &seqs, 3, n, 5, 5, &cfg).unwrap(),
                train_ilp(label, &seqs, 3, n, 5, &cfg).unwrap(),
            ];
            for model in &models {
                for row in &model.em_history {
                    assert!(
                        row.delta >= -1e-8,
                        "seed {seed} label {label} iter {}: dip {}",
                        row.iteration,
                        row.delta
                    );
                }
            }
        }
    }
}

/// Map each state to its most likely non-interval symbol.
fn argmax_symbols(p: &HsmmParams) -> Vec<usize> {
    (0..p.m)
        .map(|j| {
            (1..p.n)
                .max_by(|&a, &b| {
                    p.b[j * p.n + a]
                        .partial_cmp(&p.b[j * p.n + b])
                        .unwrap()
                })
                .unwrap()
        })
        .collect()
}

/// Reindex an m-by-m count matrix so row/column k describes the state whose
/// dominant symbol is `k + 1`. Requires the dominant symbols to be distinct.
fn canonicalize(counts: &[f64], symbols: &[usize], m: usize) -> Vec<f64> {
    let mut slot = vec![usize::MAX; m];
    for (state, &sym) in symbols.iter().enumerate() {
        assert!(slot[sym - 1] == usize::MAX, "states share a dominant symbol");
        slot[sym - 1] = state;
    }
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = counts[slot[i] * m + slot[j]];
        }
    }
    out
}

/// Two opposed three-symbol cycles, two of three transitions gapped. Each
/// ordered symbol pair appears four times across the corpus.
fn gapped_cycle_corpus() -> Vec<Vec<usize>> {
    let close = |mut v: Vec<usize>| {
        v.extend([0, 0, 0, 1, 1]);
        v
    };
    let fwd = close(build_seq(&[(1, 2), (2, 2), (3, 2)], &[3, 2, 0], 2));
    let rev = close(build_seq(&[(1, 2), (3, 2), (2, 2)], &[3, 2, 0], 2));
    vec![fwd.clone(), fwd, rev.clone(), rev]
}

#[test]
fn bridge_model_recovers_ungapped_transition_statistics() {
    let corpus = gapped_cycle_corpus();
    let gapped = obs_slices(&corpus);
    let stripped: Vec<Vec<usize>> = corpus.iter().map(|s| strip_intervals(s)).collect();
    let plain = obs_slices(&stripped);
    let cfg = config(3);
    let m = 3;
    let n = 4;

    // Reference: the baseline trained and counted on the gap-free corpus.
    let base = match train(0, &plain, m, n, 2, &cfg).unwrap().params {
        ModelParams::Hsmm(p) => p,
        _ => unreachable!(),
    };
    let raw = expected_transition_counts(&base, &plain).unwrap();
    let reference = canonicalize(&raw, &argmax_symbols(&base), m);

    // The bridge model sees the gaps yet reports the same ordinary counts.
    let is_params = match train_is(0, &gapped, m, n, 2, 4, &cfg).unwrap().params {
        ModelParams::Is(p) => p,
        _ => unreachable!(),
    };
    let counts = is_hsmm::expected_transition_counts(&is_params, &gapped).unwrap();
    let counts = canonicalize(&counts, &argmax_symbols(&is_params.base), m);
    for (k, (&got, &want)) in counts.iter().zip(&reference).enumerate() {
        assert!(
            (got - want).abs() <= 0.05,
            "cell {k}: bridge {got} vs reference {want}"
        );
    }

    // Feeding the gap ticks to a plain model as ordinary symbols re-routes
    // the gapped transitions through the interval-emitting state, so the
    // direct pair counts collapse.
    let naive = match train(0, &gapped, m + 1, n, 3, &cfg).unwrap().params {
        ModelParams::Hsmm(p) => p,
        _ => unreachable!(),
    };
    let naive_counts = expected_transition_counts(&naive, &gapped).unwrap();
    let dominant: Vec<usize> = (0..m + 1)
        .map(|j| {
            (0..n)
                .max_by(|&a, &b| {
                    naive.b[j * n + a].partial_cmp(&naive.b[j * n + b]).unwrap()
                })
                .unwrap()
        })
        .collect();
    let mut slot = vec![usize::MAX; m];
    for (state, &sym) in dominant.iter().enumerate() {
        if sym > 0 {
            assert!(slot[sym - 1] == usize::MAX, "states share a dominant symbol");
            slot[sym - 1] = state;
        }
    }
    assert!(slot.iter().all(|&s| s != usize::MAX), "a symbol went unmodeled");
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let got = naive_counts[slot[i] * (m + 1) + slot[j]];
            worst = worst.max((got - reference[i * m + j]).abs());
        }
    }
    assert!(
        worst >= 1.0,
        "naive interval handling unexpectedly matched the reference (worst {worst})"
    );
}

fn bank_of(models: Vec<TrainedModel>, labels: Vec<String>, n: usize) -> ModelBank {
    ModelBank {
        labels,
        symbols: (0..n).map(|k| format!("s{k}")).collect(),
        models,
    }
}

#[test]
fn bridge_rows_decide_recognition() {
    // One state per symbol, two symbols, every path forced; the two models
    // differ only in where the bridge row after symbol 1 sends its mass.
    let base = HsmmParams {
        m: 2,
        n: 3,
        dmax: 2,
        pi: vec![1.0, 0.0, 0.0, 0.0],
        a: {
            // Row-major (from_super, to_super): 0 -> 2, 1 -> 2, 2 -> 0, 3 -> 0.
            let mut a = vec![0.0; 16];
            for (from, to) in [(0usize, 2usize), (1, 2), (2, 0), (3, 0)] {
                a[from * 4 + to] = 1.0;
            }
            a
        },
        b: vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };
    let dmax_int = 3;
    let s = 4;
    let mut favoring = vec![0.0; (s + 1) * dmax_int * s];
    let mut opposing = favoring.clone();
    for src in 0..=s {
        for bkt in 0..dmax_int {
            let row = (src * dmax_int + bkt) * s;
            // Valid targets exclude the source state's block.
            let (short, long) = if src < 2 || src == s { (2, 3) } else { (0, 1) };
            let hit = bkt == 1 && (src == 0 || src == 1);
            favoring[row + short] = if hit { 0.9 } else { 0.5 };
            favoring[row + long] = if hit { 0.1 } else { 0.5 };
            opposing[row + short] = if hit { 0.1 } else { 0.5 };
            opposing[row + long] = if hit { 0.9 } else { 0.5 };
        }
    }
    let wrap = |a2: Vec<f64>, label: usize| TrainedModel {
        label,
        params: ModelParams::Is(IsHsmmParams {
            base: base.clone(),
            dmax_int,
            a2,
        }),
        final_log_likelihood: 0.0,
        iterations: 0,
        history: Vec::new(),
        em_history: Vec::new(),
    };
    let bank = bank_of(
        vec![wrap(favoring.clone(), 0), wrap(opposing.clone(), 1)],
        vec!["favoring".into(), "opposing".into()],
        3,
    );
    // One run of symbol 1, a gap in bucket 2, one short run of symbol 2.
    let query = vec![1, 0, 0, 2];
    let rec = recognize_is(&bank, &query).unwrap();
    assert_eq!(rec.label, 0);
    assert!(rec.scores[0] > rec.scores[1]);
    for (model, &score) in bank.models.iter().zip(&rec.scores) {
        let ModelParams::Is(p) = &model.params else { unreachable!() };
        let brute = brute_likelihood_is(p, &query).unwrap();
        assert!((score - brute).abs() < 1e-9, "score {score} vs oracle {brute}");
    }
}

#[test]
fn uniform_gap_densities_preserve_baseline_ranking() {
    // Three models with sharply separated emissions over a shared alphabet.
    let m = 2;
    let n = 8;
    let dmax = 2;
    let sharpen = |mut p: HsmmParams, s0: usize, s1: usize| {
        for j in 0..m {
            let favorite = if j == 0 { s0 } else { s1 };
            for sym in 0..n {
                p.b[j * n + sym] = if sym == favorite { 0.93 } else { 0.01 };
            }
        }
        p
    };
    let bases: Vec<HsmmParams> = (0..3)
        .map(|k| sharpen(init_params(m, n, dmax, 100 + k as u64), 2 * k + 1, 2 * k + 2))
        .collect();
    let queries: Vec<Vec<usize>> = (0..3)
        .map(|k| build_seq(&[(2 * k + 1, 2), (2 * k + 2, 2)], &[3, 3], 3))
        .collect();
    for query in &queries {
        let stripped = strip_intervals(query);
        let ilp_scores: Vec<f64> = bases
            .iter()
            .map(|base| {
                let p = IlpParams::fresh(base.clone(), &config(0));
                score_ilp(&p, query).unwrap()
            })
            .collect();
        let viterbi_scores: Vec<f64> = bases
            .iter()
            .map(|base| viterbi(base, &stripped).unwrap().1)
            .collect();
        let order = |scores: &[f64]| {
            let mut idx: Vec<usize> = (0..scores.len()).collect();
            idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
            idx
        };
        assert_eq!(
            order(&ilp_scores),
            order(&viterbi_scores),
            "rankings diverged: ilp {ilp_scores:?} viterbi {viterbi_scores:?}"
        );
    }
}

#[test]
fn joint_objective_climbs_once_gap_factors_enter() {
    // Alternating symbol runs separated by a constant gap of three.
    let obs = build_seq(&[(1, 2), (2, 2)], &[3, 3], 6);
    let seqs = vec![obs.as_slice(), obs.as_slice()];
    let cfg = TrainConfig {
        epsilon: 1e-9,
        max_iters: 15,
        seed: 5,
        ..TrainConfig::default()
    };
    let model = train_ilp(0, &seqs, 2, 3, 2, &cfg).unwrap();
    assert!(model.history.len() >= 4, "too few iterations to observe the climb");
    for row in model.history.iter().skip(2) {
        assert!(
            row.delta >= -1e-6,
            "joint objective dipped at iteration {}: {}",
            row.iteration,
            row.delta
        );
    }
}

#[test]
fn long_inputs_stay_finite() {
    let p = init_params(3, 4, 3, 7);
    let obs: Vec<usize> = (0..10_000).map(|t| 1 + (t / 2) % 3).collect();
    let (_, ll) = forward(&p, &obs).unwrap();
    assert!(ll.is_finite(), "plain forward lost the path mass: {ll}");

    let pi = init_params_is(3, 4, 3, 4, 7);
    let gapped: Vec<usize> = (0..10_000)
        .map(|t| if t % 50 >= 48 { 0 } else { 1 + (t / 2) % 3 })
        .collect();
    let (_, ll_is) = is_hsmm::forward_is(&pi, &gapped).unwrap();
    assert!(ll_is.is_finite(), "bridge forward lost the path mass: {ll_is}");
}
