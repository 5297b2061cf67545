//! Fixed-order pairwise reductions.
//!
//! Every sum in the crate goes through these so that results do not depend
//! on iteration order or thread count.

const LEAF: usize = 64;

/// Pairwise sum of `f(i)` for `i in lo..hi`.
#[inline]
pub fn sum_by<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
    let n = hi - lo;
    if n <= LEAF {
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        s
    } else {
        let mid = lo + n / 2;
        sum_by(lo, mid, f) + sum_by(mid, hi, f)
    }
}

pub fn sum(a: &[f64]) -> f64 {
    sum_by(0, a.len(), |i| a[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(0, a.len(), |i| a[i] * b[i])
}

/// Sum of `w[i] * a[i] * b[i]`.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(w.len(), a.len());
    sum_by(0, a.len(), |i| w[i] * a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_input() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(sum(&a), 45.0);
    }

    #[test]
    fn pairwise_is_order_fixed() {
        let a: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 * 1e-3 + 1e10).collect();
        assert_eq!(sum(&a).to_bits(), sum(&a).to_bits());
        let rel = (sum(&a) - a.iter().sum::<f64>()).abs() / sum(&a);
        assert!(rel < 1e-14);
    }

    #[test]
    fn weighted_dot() {
        assert_eq!(wdot(&[2.0, 0.0, 1.0], &[1.0, 5.0, 3.0], &[1.0, 5.0, 3.0]), 11.0);
    }
}
