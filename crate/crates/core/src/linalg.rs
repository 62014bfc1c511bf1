//! Dense f32 kernels with f64 accumulation.

const LANES: usize = 8;

/// Dot product of two equal-length slices, accumulated in f64.
///
/// Eight independent accumulators let the compiler vectorize the loop; the
/// summation order is fixed, so the result is deterministic for given inputs.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; LANES];
    let chunks_a = a.chunks_exact(LANES);
    let chunks_b = b.chunks_exact(LANES);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..LANES {
            acc[i] += f64::from(ca[i]) * f64::from(cb[i]);
        }
    }
    let mut sum = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in tail_a.iter().zip(tail_b) {
        sum += f64::from(*x) * f64::from(*y);
    }
    sum
}

#[inline]
pub(crate) fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `a / ‖a‖` computed in f64 and rounded once to f32.
pub(crate) fn normalized(a: &[f32], norm: f64) -> Vec<f32> {
    a.iter().map(|&x| (f64::from(x) / norm) as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum_for_odd_lengths() {
        for len in [0usize, 1, 7, 8, 9, 31, 300] {
            let a: Vec<f32> = (0..len).map(|i| (i as f32 * 0.37).sin()).collect();
            let b: Vec<f32> = (0..len).map(|i| (i as f32 * 0.11).cos()).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
            assert!((dot(&a, &b) - naive).abs() < 1e-12, "len {len}");
        }
    }

    #[test]
    fn normalized_has_unit_norm() {
        let v = [3.0f32, 4.0];
        let n = normalized(&v, norm(&v));
        assert_eq!(n, vec![0.6, 0.8]);
    }
}
