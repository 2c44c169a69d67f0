//! Least-squares projection onto nondecreasing sequences.

/// Replaces `values` by its closest (in weighted L2) nondecreasing sequence
/// using pool-adjacent-violators. `weights` must be positive and the same
/// length as `values`; `None` means unit weights.
pub fn project_nondecreasing(values: &mut [f64], weights: Option<&[f64]>) {
    let n = values.len();
    if n < 2 {
        return;
    }
    if let Some(w) = weights {
        assert_eq!(w.len(), n, "weights length mismatch");
    }
    // Blocks as (weighted mean, total weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(n);
    for (i, &v) in values.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let mut cur = (v, w, 1usize);
        while let Some(&(pm, pw, pl)) = blocks.last() {
            if pm <= cur.0 {
                break;
            }
            blocks.pop();
            let tw = pw + cur.1;
            cur = ((pm * pw + cur.0 * cur.1) / tw, tw, pl + cur.2);
        }
        blocks.push(cur);
    }
    let mut i = 0;
    for (mean, _, len) in blocks {
        values[i..i + len].fill(mean);
        i += len;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_sorted_is_untouched() {
        let mut v = vec![0.1, 0.2, 0.2, 0.9];
        project_nondecreasing(&mut v, None);
        assert_eq!(v, vec![0.1, 0.2, 0.2, 0.9]);
    }

    #[test]
    fn pools_violators() {
        let mut v = vec![1.0, 3.0, 2.0, 4.0];
        project_nondecreasing(&mut v, None);
        assert_eq!(v, vec![1.0, 2.5, 2.5, 4.0]);

        let mut v = vec![3.0, 2.0, 1.0];
        project_nondecreasing(&mut v, None);
        assert_eq!(v, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn weighted_pool() {
        let mut v = vec![2.0, 1.0];
        project_nondecreasing(&mut v, Some(&[3.0, 1.0]));
        assert_eq!(v, vec![1.75, 1.75]);
    }

    proptest! {
        #[test]
        fn output_is_monotone_and_mean_preserving(v in prop::collection::vec(-10.0f64..10.0, 1..60)) {
            let mut out = v.clone();
            project_nondecreasing(&mut out, None);
            prop_assert!(out.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            let s0: f64 = v.iter().sum();
            let s1: f64 = out.iter().sum();
            prop_assert!((s0 - s1).abs() < 1e-9);
            // idempotent
            let mut again = out.clone();
            project_nondecreasing(&mut again, None);
            for (a, b) in again.iter().zip(&out) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn no_monotone_sequence_is_closer(v in prop::collection::vec(-5.0f64..5.0, 2..12), shift in -1.0f64..1.0) {
            let mut proj = v.clone();
            project_nondecreasing(&mut proj, None);
            // a competitor: projection plus a constant shift stays monotone
            let d0: f64 = v.iter().zip(&proj).map(|(a, b)| (a - b).powi(2)).sum();
            let d1: f64 = v.iter().zip(&proj).map(|(a, b)| (a - b - shift).powi(2)).sum();
            prop_assert!(d0 <= d1 + 1e-9);
        }
    }
}
