//! Closed-form ensemble averages of the unconstrained allocation under Rayleigh fading.
//!
//! With `C_i ~ Exp(rate)` and `z_i = rate * C_th,i`, averaging the real-valued
//! loads and powers over the region `C_i >= C_th,i` gives
//!
//! ```text
//! E{b_i} = (1 / log 2) [log 4 e^{-z_i} - Ei(-z_i) / ln 10]          (log = log10)
//! E{P_i} = (1 - alpha)/(alpha ln 2) [e^{-z_i} + (z_i / 4) Ei(-z_i)]
//! ```
//!
//! The mixed log bases of the throughput expression reduce to
//! `2 e^{-z} + E1(z) / ln 2`.

use crate::allocator::{cnr_threshold, power_saturation, BerTargets};
use crate::error::{invalid, Result};
use crate::expint::exp_integral_neg;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticParams {
    alpha: f64,
    ber_th: BerTargets,
    rate: f64,
    n: usize,
}

impl AnalyticParams {
    /// `alpha` is the weight in the frame the closed forms use (power scale already folded in).
    pub fn new(alpha: f64, ber_th: BerTargets, rate: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(rate > 0.0) {
            return Err(invalid(format!("rate must be positive, got {rate}")));
        }
        if n == 0 {
            return Err(invalid("subcarrier count must be at least 1"));
        }
        ber_th.check_len(n)?;
        for i in 0..n {
            let t = ber_th.get(i);
            if !(t > 0.0 && t < 0.2) {
                return Err(invalid(format!("BER threshold out of range: {t}")));
            }
            if matches!(ber_th, BerTargets::Uniform(_)) {
                break;
            }
        }
        Ok(Self {
            alpha,
            ber_th,
            rate,
            n,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `rate * C_th,i` for each subcarrier.
    fn normalized_thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.rate * cnr_threshold(self.alpha, self.ber_th.get(i)))
    }
}

/// `Ei(-z)` with the `z -> inf` limit taken as `0`.
fn ei_neg(z: f64) -> f64 {
    if z > 700.0 {
        0.0
    } else {
        exp_integral_neg(z).expect("z > 0")
    }
}

/// Average throughput in bits per multicarrier symbol.
pub fn avg_throughput(params: &AnalyticParams) -> f64 {
    let log10_2 = std::f64::consts::LOG10_2;
    let log10_4 = 4f64.log10();
    params
        .normalized_thresholds()
        .map(|z| (log10_4 * (-z).exp() - ei_neg(z) / std::f64::consts::LN_10) / log10_2)
        .sum()
}

/// Average total transmit power in mW.
pub fn avg_power(params: &AnalyticParams) -> f64 {
    let sat = power_saturation(params.alpha);
    params
        .normalized_thresholds()
        .map(|z| sat * ((-z).exp() + z / 4.0 * ei_neg(z)))
        .sum()
}
