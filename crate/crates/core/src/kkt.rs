//! Numerical check of the first-order optimality conditions at the real-valued solution.
//!
//! Per subcarrier the Lagrangian is
//!
//! ```text
//! L(P, b) = alpha P - (1 - alpha) b + lambda [0.2 exp(-1.6 C P / (2^b - 1)) - BER_th]
//! ```
//!
//! with the BER constraint active (zero slack). Only active subcarriers carry a
//! multiplier; nulled subcarriers are skipped. The degenerate branch with
//! `lambda = 0` leaves the system underdetermined and is not represented.

use serde::Serialize;

use crate::allocator::{BerTargets, ContinuousAllocation};
use crate::channel::ChannelRealization;

const LN_2: f64 = std::f64::consts::LN_2;

#[inline]
fn ber_exp(c: f64, p: f64, b: f64) -> (f64, f64) {
    let q = b.exp2() - 1.0;
    (q, (-1.6 * c * p / q).exp())
}

/// Multiplier from stationarity in the power,
/// `lambda = alpha / [0.2 (1.6 C / (2^b - 1)) exp(-1.6 C P / (2^b - 1))]`.
pub fn multiplier_at(alpha: f64, b: f64, p: f64, c: f64) -> f64 {
    let (q, e) = ber_exp(c, p, b);
    alpha / (0.2 * (1.6 * c / q) * e)
}

/// Multiplier implied by an active BER constraint, `alpha (2^b - 1) / (1.6 C BER_th)`.
/// Equal to [`multiplier_at`] wherever the constraint holds with equality.
pub fn constraint_multiplier(alpha: f64, b: f64, c: f64, ber_th: f64) -> f64 {
    alpha * (b.exp2() - 1.0) / (1.6 * c * ber_th)
}

/// Multipliers of the active subcarriers of `allocation`; `None` on nulled ones.
pub fn multipliers(
    alpha: f64,
    allocation: &ContinuousAllocation,
    realization: &ChannelRealization,
) -> Vec<Option<f64>> {
    allocation
        .active
        .iter()
        .enumerate()
        .map(|(i, &on)| {
            on.then(|| {
                multiplier_at(
                    alpha,
                    allocation.bits[i],
                    allocation.powers[i],
                    realization.cnr()[i],
                )
            })
        })
        .collect()
}

/// Analytic gradient `(dL/dP, dL/db)` of the per-subcarrier Lagrangian.
pub fn lagrangian_gradient(alpha: f64, lambda: f64, b: f64, p: f64, c: f64) -> (f64, f64) {
    let (q, e) = ber_exp(c, p, b);
    let d_p = alpha - 0.2 * lambda * (1.6 * c / q) * e;
    let d_b = -(1.0 - alpha) + 0.2 * LN_2 * lambda * (1.6 * c * p * b.exp2() / (q * q)) * e;
    (d_p, d_b)
}

/// Per-subcarrier Lagrangian value.
pub fn lagrangian(alpha: f64, lambda: f64, b: f64, p: f64, c: f64, ber_th: f64) -> f64 {
    let (_, e) = ber_exp(c, p, b);
    alpha * p - (1.0 - alpha) * b + lambda * (0.2 * e - ber_th)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    /// Active subcarriers the remaining vectors refer to.
    pub indices: Vec<usize>,
    pub lambda: Vec<f64>,
    /// `dL/dP / alpha`.
    pub stationarity_p: Vec<f64>,
    /// `dL/db / alpha`.
    pub stationarity_b: Vec<f64>,
    /// `(BER - BER_th) / BER_th`.
    pub primal: Vec<f64>,
    pub max_abs_residual: f64,
    pub pass: bool,
}

/// Evaluates stationarity, primal feasibility and dual sign at a real-valued
/// allocation. Failures are reported, not raised.
pub fn check_kkt(
    alpha: f64,
    allocation: &ContinuousAllocation,
    realization: &ChannelRealization,
    ber_th: &BerTargets,
    tol: f64,
) -> KktReport {
    let mut report = KktReport {
        indices: Vec::new(),
        lambda: Vec::new(),
        stationarity_p: Vec::new(),
        stationarity_b: Vec::new(),
        primal: Vec::new(),
        max_abs_residual: 0.0,
        pass: true,
    };
    for (i, &on) in allocation.active.iter().enumerate() {
        if !on {
            continue;
        }
        let (b, p, c, t) = (
            allocation.bits[i],
            allocation.powers[i],
            realization.cnr()[i],
            ber_th.get(i),
        );
        let lambda = constraint_multiplier(alpha, b, c, t);
        let (d_p, d_b) = lagrangian_gradient(alpha, lambda, b, p, c);
        let (_, e) = ber_exp(c, p, b);
        report.indices.push(i);
        report.lambda.push(lambda);
        report.stationarity_p.push(d_p / alpha);
        report.stationarity_b.push(d_b / alpha);
        report.primal.push((0.2 * e - t) / t);
    }
    report.max_abs_residual = report
        .stationarity_p
        .iter()
        .chain(&report.stationarity_b)
        .chain(&report.primal)
        .fold(0.0, |m: f64, r| m.max(r.abs()));
    report.pass = report.max_abs_residual < tol && report.lambda.iter().all(|&l| l >= 0.0);
    report
}

/// Central-difference versus analytic gradient of the Lagrangian at `(b, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDifferenceCheck {
    pub numeric: (f64, f64),
    pub analytic: (f64, f64),
}

impl FiniteDifferenceCheck {
    /// Largest absolute difference between the two gradients.
    pub fn error(&self) -> f64 {
        (self.numeric.0 - self.analytic.0)
            .abs()
            .max((self.numeric.1 - self.analytic.1).abs())
    }
}

/// Central differences of the Lagrangian with relative step `h`, holding the
/// multiplier at [`constraint_multiplier`] of the candidate point.
pub fn finite_difference_stationarity(
    alpha: f64,
    b: f64,
    p: f64,
    c: f64,
    ber_th: f64,
    h: f64,
) -> FiniteDifferenceCheck {
    let lambda = constraint_multiplier(alpha, b, c, ber_th);
    let l = |bb: f64, pp: f64| lagrangian(alpha, lambda, bb, pp, c, ber_th);
    let hp = if p != 0.0 { h * p.abs() } else { h };
    let hb = h * b.abs();
    let d_p = (l(b, p + hp) - l(b, p - hp)) / (2.0 * hp);
    let d_b = (l(b + hb, p) - l(b - hb, p)) / (2.0 * hb);
    FiniteDifferenceCheck {
        numeric: (d_p, d_b),
        analytic: lagrangian_gradient(alpha, lambda, b, p, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{
        allocate_unconstrained, cnr_threshold, continuous_allocation, continuous_bits,
        continuous_power, LoadingConfig,
    };
    use approx::assert_relative_eq;

    const T: f64 = 1e-4;

    #[test]
    fn multiplier_example() {
        let c = 13.171;
        let b = 2.0;
        let p = crate::allocator::power_for_bits(2, c, T).unwrap();
        assert_relative_eq!(
            multiplier_at(0.5, b, p, c),
            0.5 * 3.0 / (1.6 * c * T),
            max_relative = 1e-12
        );
        assert_relative_eq!(constraint_multiplier(0.5, b, c, T), 711.77, epsilon = 0.1);
        assert_relative_eq!(
            constraint_multiplier(0.25, b, c, T) * 2.0,
            constraint_multiplier(0.5, b, c, T),
            max_relative = 1e-15
        );
        assert!(constraint_multiplier(0.5, b, 1e-9, T) > 0.0);
    }

    #[test]
    fn exact_solution_passes() {
        let r = ChannelRealization::from_cnr(vec![0.5, 20.0, 100.0, 1e4, 7.0]).unwrap();
        let bt = BerTargets::Uniform(T);
        let a = continuous_allocation(0.5, &r, &bt).unwrap();
        let rep = check_kkt(0.5, &a, &r, &bt, 1e-9);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.indices, vec![1, 2, 3]);
        let m = multipliers(0.5, &a, &r);
        assert!(m[0].is_none() && m[4].is_none());
        for (k, &i) in rep.indices.iter().enumerate() {
            assert_relative_eq!(m[i].unwrap(), rep.lambda[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn perturbed_power_fails() {
        let r = ChannelRealization::from_cnr(vec![100.0]).unwrap();
        let bt = BerTargets::Uniform(T);
        let mut a = continuous_allocation(0.5, &r, &bt).unwrap();
        a.powers[0] *= 1.01;
        let rep = check_kkt(0.5, &a, &r, &bt, 1e-9);
        assert!(!rep.pass);
        assert!(rep.stationarity_p[0].abs() > 1e-9);
    }

    #[test]
    fn rounded_solution_fails() {
        let r = ChannelRealization::from_cnr(vec![100.0]).unwrap();
        let bt = BerTargets::Uniform(T);
        let cfg = LoadingConfig::new(0.5, bt.clone()).unwrap();
        let d = allocate_unconstrained(0.5, &r, &cfg).unwrap();
        let a = ContinuousAllocation {
            alpha: 0.5,
            bits: d.bits().iter().map(|&b| b as f64).collect(),
            powers: d.powers().to_vec(),
            active: d.bits().iter().map(|&b| b > 0).collect(),
        };
        let rep = check_kkt(0.5, &a, &r, &bt, 1e-9);
        assert!(!rep.pass);
        assert!(rep.primal[0].abs() < 1e-12);
    }

    #[test]
    fn finite_differences_at_solution() {
        let (alpha, c) = (0.5, 100.0);
        let b = continuous_bits(alpha, c, T).unwrap();
        let p = continuous_power(alpha, c, T).unwrap();
        let fd = finite_difference_stationarity(alpha, b, p, c, T, 1e-6);
        assert!(
            fd.numeric.0.abs() < 1e-6 && fd.numeric.1.abs() < 1e-6,
            "{fd:?}"
        );

        let off = finite_difference_stationarity(alpha, 2.0 * b, p, c, T, 1e-6);
        assert!(off.numeric.1.abs() > fd.numeric.1.abs());
        assert_eq!(off.numeric.1.signum(), off.analytic.1.signum());
    }

    #[test]
    fn central_differences_are_second_order() {
        let c = 4.0 * cnr_threshold(0.4, T);
        let (b, p) = (3.3, 0.9);
        let e1 = finite_difference_stationarity(0.4, b, p, c, T, 1e-3).error();
        let e2 = finite_difference_stationarity(0.4, b, p, c, T, 5e-4).error();
        let ratio = e1 / e2;
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }
}
