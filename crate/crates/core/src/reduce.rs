//! Deterministic pairwise ("pyramid") summation.
//!
//! Adjacent pairs are summed level by level, the odd tail element carried
//! up unchanged, until one value remains. The bracketing is fixed by the
//! input order alone, so the result is identical regardless of how callers
//! schedule work around it.

use alloc::vec::Vec;

pub fn pyramid_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        _ => {
            let mut buf: Vec<f64> = values.to_vec();
            let mut n = buf.len();
            while n > 1 {
                let half = n / 2;
                for i in 0..half {
                    buf[i] = buf[2 * i] + buf[2 * i + 1];
                }
                if n % 2 == 1 {
                    buf[half] = buf[n - 1];
                    n = half + 1;
                } else {
                    n = half;
                }
            }
            buf[0]
        }
    }
}
