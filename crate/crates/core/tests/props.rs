//! Property tests over randomly drawn models and sequences.

use proptest::prelude::*;

use semimarkov::hsmm::{forward, init_params, reestimate, viterbi};
use semimarkov::ilp_hsmm::IntervalGaussian;
use semimarkov::is_hsmm::{self, bucket, init_params_is};
use semimarkov::seq::{desegment, segment_runs, strip_intervals, Sequence};

fn dims() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1..=3usize, 2..=4usize, 1..=3usize, any::<u64>())
}

fn obs_over(lo: usize, n: usize, max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(lo..n, 1..=max_len)
}

proptest! {
    #[test]
    fn viterbi_never_exceeds_forward((m, n, dmax, seed) in dims(), raw in obs_over(1, 4, 10)) {
        let p = init_params(m, n, dmax, seed);
        let obs: Vec<usize> = raw.into_iter().map(|s| 1 + (s - 1) % (n - 1)).collect();
        let (_, ll) = forward(&p, &obs).unwrap();
        let (_, best) = viterbi(&p, &obs).unwrap();
        prop_assert!(best <= ll + 1e-9, "best {best} exceeds sum {ll}");
    }

    #[test]
    fn reestimated_rows_stay_stochastic((m, n, dmax, seed) in dims(), raw in prop::collection::vec(obs_over(1, 4, 8), 1..=3)) {
        let p = init_params(m, n, dmax, seed);
        let seqs: Vec<Vec<usize>> = raw
            .into_iter()
            .map(|s| s.into_iter().map(|x| 1 + (x - 1) % (n - 1)).collect())
            .collect();
        let refs: Vec<&[usize]> = seqs.iter().map(|s| s.as_slice()).collect();
        // A batch can be entirely unexplainable (m=1 forbids any second
        // segment); only successful updates are constrained.
        if let Ok(next) = reestimate(&p, &refs, 1e-6) {
            // validate() checks every row sum against the tolerance.
            prop_assert!(next.validate().is_ok());
        }
    }

    #[test]
    fn reestimated_bridge_rows_stay_stochastic((m, n, dmax, seed) in dims(), raw in prop::collection::vec(obs_over(0, 4, 8), 1..=3)) {
        let p = init_params_is(m, n, dmax, 3, seed);
        let seqs: Vec<Vec<usize>> = raw
            .into_iter()
            .map(|s| s.into_iter().map(|x| if x == 0 { 0 } else { 1 + (x - 1) % (n - 1) }).collect())
            .collect();
        let refs: Vec<&[usize]> = seqs.iter().map(|s| s.as_slice()).collect();
        if let Ok(next) = is_hsmm::reestimate_is(&p, &refs, 1e-6) {
            prop_assert!(next.validate().is_ok());
        }
    }

    #[test]
    fn segmentation_round_trips(obs in obs_over(0, 4, 24)) {
        let seq = Sequence::new(None, obs.clone());
        let seg = segment_runs(&seq).unwrap();
        prop_assert_eq!(desegment(&seg).obs, obs.clone());
        let run_total: usize = seg.runs.iter().map(|r| r.len).sum();
        let gap_total: usize = seg.gaps.iter().sum();
        prop_assert_eq!(run_total + gap_total, obs.len());
        prop_assert_eq!(run_total, strip_intervals(&obs).len());
    }

    #[test]
    fn interval_free_forward_reduction_is_bitwise((m, n, dmax, seed) in dims(), raw in obs_over(1, 4, 10)) {
        let p = init_params_is(m, n, dmax, 3, seed);
        let obs: Vec<usize> = raw.into_iter().map(|s| 1 + (s - 1) % (n - 1)).collect();
        let (_, is_ll) = is_hsmm::forward_is(&p, &obs).unwrap();
        let (_, base_ll) = forward(&p.base, &obs).unwrap();
        prop_assert_eq!(is_ll.to_bits(), base_ll.to_bits());
    }

    #[test]
    fn gaussian_support_grows_as_the_threshold_shrinks(
        samples in prop::collection::vec(0.0f64..20.0, 1..=6),
        exps in prop::collection::vec(1u32..=9, 2..=5),
    ) {
        let mut deltas: Vec<f64> = exps.iter().map(|&e| 10f64.powi(-(e as i32))).collect();
        deltas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut prev: Option<IntervalGaussian> = None;
        for &d in &deltas {
            let g = IntervalGaussian::fit(&samples, 0.5, d);
            if let Some(p) = &prev {
                prop_assert!(g.lo <= p.lo + 1e-12 && g.hi >= p.hi - 1e-12);
            }
            prev = Some(g);
        }
    }

    #[test]
    fn buckets_stay_in_range(gap in 1usize..100, k in 1usize..12) {
        let b = bucket(gap, k);
        prop_assert!(b < k);
        if gap >= k {
            prop_assert_eq!(b, k - 1);
        } else {
            prop_assert_eq!(b, gap - 1);
        }
    }
}
