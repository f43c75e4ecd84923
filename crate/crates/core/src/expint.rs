//! Exponential integral `E1(z) = \int_z^\infty e^{-t}/t dt` for real `z > 0`,
//! and `Ei(-z) = -E1(z)`.
//!
//! Power series below `z = 1`, continued fraction (modified Lentz) above.

use crate::error::{invalid, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_TERMS: usize = 500;
const TINY: f64 = 1e-300;
const CF_DEPTH_TIMES_Z: f64 = 100.0;

/// `Ei(-z)` for `z > 0`; always negative.
pub fn exp_integral_neg(z: f64) -> Result<f64> {
    if !(z > 0.0) || z.is_nan() {
        return Err(invalid(format!("Ei(-z) needs z > 0, got {z}")));
    }
    Ok(-e1(z))
}

/// `E1(z)` for `z > 0`.
pub fn e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z < 1.0 {
        e1_series(z)
    } else {
        e1_continued_fraction(z)
    }
}

/// `-gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)`. Accurate for small `z`;
/// loses relative precision to cancellation once `z` grows past a few units.
pub fn e1_series(z: f64) -> f64 {
    let mut sum = 0.0;
    // term_k = (-1)^{k+1} z^k / k!
    let mut term = 1.0;
    for k in 1..MAX_TERMS {
        term *= -z / k as f64;
        let contrib = -term / k as f64;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() + sum
}

/// Even contraction of the continued fraction
/// `E1(z) = e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...)))`.
///
/// Modified Lentz for `z >= 1`. Below that the fraction converges only after
/// about `1 / z` terms and is evaluated by backward recurrence from a depth
/// of `100 / z` instead.
pub fn e1_continued_fraction(z: f64) -> f64 {
    if z < 1.0 {
        e1_cf_backward(z)
    } else {
        e1_cf_lentz(z)
    }
}

fn e1_cf_lentz(z: f64) -> f64 {
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h * (-z).exp()
}

/// In terms of `r_i = t_i + i + 1`, where `t_i` is the tail below level `i`,
/// the recurrence reads `r_{i-1} = i (z + r_i) / (i + z + r_i)`. Every quantity
/// is positive and `r_i -> 0` as `z -> 0`, so nothing cancels. The recurrence
/// starts from its own fixed point at the truncation depth.
fn e1_cf_backward(z: f64) -> f64 {
    let depth = (CF_DEPTH_TIMES_Z / z).ceil();
    let mut r = 0.5 * ((z * z + 4.0 * depth * z).sqrt() - z);
    let mut i = depth;
    while i >= 1.0 {
        let v = z + r;
        r = i * v / (i + v);
        i -= 1.0;
    }
    (-z).exp() / (z + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // E1(1) = 0.219383934395520...
        assert!((exp_integral_neg(1.0).unwrap() + 0.219_383_934_395_520_27).abs() < 1e-15);
        assert!((exp_integral_neg(0.1317).unwrap() + 1.5777).abs() < 1e-3);
        assert!(exp_integral_neg(0.0).is_err());
        assert!(exp_integral_neg(-1.0).is_err());
        assert!(exp_integral_neg(f64::NAN).is_err());
    }

    #[test]
    fn large_argument_bound() {
        for &z in &[2.0, 5.0, 10.0, 50.0, 200.0] {
            let v = exp_integral_neg(z).unwrap();
            assert!(v < 0.0 || z > 700.0);
            assert!(v.abs() <= (-z).exp() / z);
            // lower bound e^{-z}/(z+1)
            assert!(v.abs() >= (-z).exp() / (z + 1.0));
        }
    }

    #[test]
    fn branches_agree_near_switchover() {
        let mut z = 0.5;
        while z <= 2.0 {
            let s = e1_series(z);
            let c = e1_continued_fraction(z);
            assert!(((s - c) / c).abs() < 1e-13, "z={z}: {s} vs {c}");
            z += 0.01;
        }
    }
}
