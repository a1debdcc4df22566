//! Richardson extrapolation over an `h`-ladder with ratio 2.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const ORDER_MIN: f64 = 0.5;
const ORDER_MAX: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Estimated limit `h → 0`.
    pub value: f64,
    /// Error estimate of `value`; infinite with a single level.
    pub error: f64,
    /// Fitted order, when the last three levels converge monotonically.
    pub order: Option<f64>,
}

/// Observed order `log₂(|g₁ − g₂| / |g₂ − g₃|)` from three successive levels.
pub fn observed_order(g: [f64; 3]) -> Option<f64> {
    let d1 = g[1] - g[0];
    let d2 = g[2] - g[1];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return None;
    }
    Some(libm::log2(d1.abs() / d2.abs()))
}

/// Extrapolates `values` ordered from coarsest to finest `h`.
///
/// With three or more levels and a monotone, contracting sequence the last
/// three levels fix an order `p ∈ [0.5, 4]`, the limit is
/// `g₃ + (g₃ − g₂)/(2^p − 1)` and the error is the size of that correction.
/// Otherwise the finest value is returned with the largest successive
/// difference as its error.
pub fn richardson(values: &[f64]) -> Extrapolation {
    let n = values.len();
    match n {
        0 => Extrapolation {
            value: f64::NAN,
            error: f64::INFINITY,
            order: None,
        },
        1 => Extrapolation {
            value: values[0],
            error: f64::INFINITY,
            order: None,
        },
        _ => {
            let last = values[n - 1];
            let spread = values
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max);
            if n >= 3 {
                let g = [values[n - 3], values[n - 2], values[n - 1]];
                if let Some(p) = observed_order(g) {
                    let p = p.clamp(ORDER_MIN, ORDER_MAX);
                    let corr = (g[2] - g[1]) / (libm::exp2(p) - 1.0);
                    return Extrapolation {
                        value: last + corr,
                        error: corr.abs(),
                        order: Some(p),
                    };
                }
                if spread == 0.0 {
                    return Extrapolation {
                        value: last,
                        error: 0.0,
                        order: None,
                    };
                }
            }
            Extrapolation {
                value: last,
                error: spread,
                order: None,
            }
        }
    }
}

/// Extrapolates each column of a table whose rows are ladder levels.
pub fn richardson_columns(rows: &[Vec<f64>]) -> Vec<Extrapolation> {
    let cols = rows.iter().map(|r| r.len()).min().unwrap_or(0);
    (0..cols)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            richardson(&col)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_second_order_limit() {
        let f = |h: f64| 3.0 + 2.0 * h * h;
        let v = [f(0.1), f(0.05), f(0.025)];
        let e = richardson(&v);
        assert!((e.order.unwrap() - 2.0).abs() < 1e-9);
        assert!((e.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_falls_back() {
        let e = richardson(&[1.0, 1.2, 1.1]);
        assert!(e.order.is_none());
        assert_eq!(e.value, 1.1);
        assert!((e.error - 0.2).abs() < 1e-15);
        assert!(richardson(&[2.0]).error.is_infinite());
    }
}
