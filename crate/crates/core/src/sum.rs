//! Fixed-order pairwise (cascade) summation.
//!
//! The split points depend only on the slice length, so a given sequence of
//! terms always sums to the same bits regardless of thread count.

const BASE: usize = 8;

/// Pairwise sum of `xs`. Error grows as `O(ε log n)` instead of `O(ε n)`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.5]), 1.5);
        assert_eq!(pairwise_sum(&[1.0; 8]), 8.0);
    }

    #[test]
    fn beats_naive_accumulation() {
        let xs = vec![0.1; 1 << 20];
        let naive: f64 = xs.iter().sum();
        let exact = 0.1 * (1u64 << 20) as f64;
        let pw = pairwise_sum(&xs);
        assert!((pw - exact).abs() < (naive - exact).abs());
        assert!((pw - exact).abs() < 1e-9);
    }
}
