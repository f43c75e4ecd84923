//! Joint bit and power loading with a weighted throughput/power objective.
//!
//! Each subcarrier solves
//!
//! ```text
//! minimize  alpha * P_i - (1 - alpha) * b_i
//! s.t.      0.2 * exp(-1.6 * C_i * P_i / (2^b_i - 1)) <= BER_th,i
//! ```
//!
//! in closed form. With the BER constraint active, stationarity gives
//! `P_i = (1 - alpha) / (alpha ln 2) * (1 - 2^-b_i)` and
//! `b_i* = log2(K C_i)`, where `K = (1 - alpha) / (alpha ln 2) * 1.6 / (-ln(5 BER_th,i))`.
//! Subcarriers whose `b_i*` would fall below 2 bits are nulled. The real-valued
//! solution is rounded, the power is recomputed from the BER target, and if the
//! total exceeds the power budget the weight `alpha` is raised by bisection.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid, LoadingError, Result};

/// BER of the QAM approximation at zero transmit power.
pub const BER_CEILING: f64 = 0.2;
const BER_EXPONENT: f64 = 1.6;
/// Smallest non-zero load; 4-QAM.
pub const MIN_ACTIVE_BITS: u32 = 2;

/// Target bit error rates, either one value for all subcarriers or one per subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BerTargets {
    Uniform(f64),
    PerSubcarrier(Vec<f64>),
}

impl BerTargets {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            BerTargets::Uniform(t) => *t,
            BerTargets::PerSubcarrier(v) => v[i],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            BerTargets::Uniform(t) => *t,
            BerTargets::PerSubcarrier(v) => v.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |t: f64| {
            if t > 0.0 && t < BER_CEILING {
                Ok(())
            } else {
                Err(invalid(format!(
                    "BER threshold must lie in (0, {BER_CEILING}), got {t}"
                )))
            }
        };
        match self {
            BerTargets::Uniform(t) => check(*t),
            BerTargets::PerSubcarrier(v) => {
                if v.is_empty() {
                    return Err(invalid("per-subcarrier BER thresholds are empty"));
                }
                v.iter().try_for_each(|t| check(*t))
            }
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        match self {
            BerTargets::PerSubcarrier(v) if v.len() != n => Err(invalid(format!(
                "{} BER thresholds for {} subcarriers",
                v.len(),
                n
            ))),
            _ => Ok(()),
        }
    }
}

/// Validated loading parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingConfig {
    alpha0: f64,
    ber_th: BerTargets,
    p_th: Option<f64>,
    epsilon: f64,
    power_scale: f64,
    alpha_tol: f64,
}

impl LoadingConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-9;
    pub const DEFAULT_ALPHA_TOL: f64 = 1e-6;

    /// Unconstrained configuration with unit power scale and default tolerances.
    pub fn new(alpha0: f64, ber_th: BerTargets) -> Result<Self> {
        check_alpha(alpha0)?;
        ber_th.validate()?;
        Ok(Self {
            alpha0,
            ber_th,
            p_th: None,
            epsilon: Self::DEFAULT_EPSILON,
            power_scale: 1.0,
            alpha_tol: Self::DEFAULT_ALPHA_TOL,
        })
    }

    /// Total power budget in mW; `None` leaves the budget unconstrained.
    pub fn with_power_budget(mut self, p_th: Option<f64>) -> Result<Self> {
        if let Some(p) = p_th {
            if !(p > 0.0) {
                return Err(invalid(format!("power budget must be positive, got {p}")));
            }
        }
        self.p_th = p_th;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_power_scale(mut self, power_scale: f64) -> Result<Self> {
        if !(power_scale > 0.0 && power_scale.is_finite()) {
            return Err(invalid(format!(
                "power scale must be positive, got {power_scale}"
            )));
        }
        self.power_scale = power_scale;
        Ok(self)
    }

    pub fn with_alpha_tol(mut self, alpha_tol: f64) -> Result<Self> {
        if !(alpha_tol > 0.0) {
            return Err(invalid(format!(
                "alpha tolerance must be positive, got {alpha_tol}"
            )));
        }
        self.alpha_tol = alpha_tol;
        Ok(self)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn ber_th(&self) -> &BerTargets {
        &self.ber_th
    }

    pub fn p_th(&self) -> Option<f64> {
        self.p_th
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn power_scale(&self) -> f64 {
        self.power_scale
    }

    pub fn alpha_tol(&self) -> f64 {
        self.alpha_tol
    }

    /// Weight that folds the power scale into the closed forms:
    /// `alpha s P - (1 - alpha) b` is proportional to `a P - (1 - a) b` with
    /// `a = alpha s / (alpha s + 1 - alpha)`.
    pub fn effective_alpha(&self, alpha: f64) -> f64 {
        let s = self.power_scale;
        if s == 1.0 {
            alpha
        } else {
            alpha * s / (alpha * s + (1.0 - alpha))
        }
    }

    /// Upper bound on bisection steps, `ceil(log2((1 - alpha0) / alpha_tol))`.
    pub fn bisection_bound(&self) -> u32 {
        let ratio = (1.0 - self.alpha0) / self.alpha_tol;
        if ratio <= 1.0 {
            0
        } else {
            ratio.log2().ceil() as u32
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `-ln(5 BER_th)`, positive for every admissible threshold.
#[inline]
pub(crate) fn ber_margin(ber_th: f64) -> f64 {
    -(5.0 * ber_th).ln()
}

/// Power ceiling `(1 - alpha) / (alpha ln 2)` approached as `b -> inf`.
#[inline]
pub fn power_saturation(alpha: f64) -> f64 {
    (1.0 - alpha) / (alpha * std::f64::consts::LN_2)
}

/// Approximate M-QAM bit error rate `0.2 exp(-1.6 P C / (2^b - 1))`.
pub fn ber(power: f64, bits: f64, cnr: f64) -> Result<f64> {
    if !(bits > 0.0) {
        return Err(invalid(format!(
            "BER is undefined for {bits} bits per symbol"
        )));
    }
    if !(power >= 0.0) || !(cnr >= 0.0) {
        return Err(invalid(format!(
            "power and cnr must be non-negative, got {power} and {cnr}"
        )));
    }
    Ok(BER_CEILING * (-BER_EXPONENT * power * cnr / (bits.exp2() - 1.0)).exp())
}

/// Power (mW) at which `bits` bits meet `ber_th` exactly on a subcarrier with ratio `cnr`.
pub fn power_for_bits(bits: u32, cnr: f64, ber_th: f64) -> Result<f64> {
    if bits < MIN_ACTIVE_BITS {
        return Err(invalid(format!(
            "active subcarriers carry at least {MIN_ACTIVE_BITS} bits, got {bits}"
        )));
    }
    power_for_real_bits(bits as f64, cnr, ber_th)
}

/// Real-valued version of [`power_for_bits`].
pub fn power_for_real_bits(bits: f64, cnr: f64, ber_th: f64) -> Result<f64> {
    if !(ber_th > 0.0 && ber_th < BER_CEILING) {
        return Err(invalid(format!("BER threshold out of range: {ber_th}")));
    }
    if !(bits > 0.0) {
        return Err(invalid(format!("bits must be positive, got {bits}")));
    }
    if !(cnr > 0.0) {
        return Err(LoadingError::Infeasible(format!(
            "no finite power reaches BER {ber_th} with cnr {cnr}"
        )));
    }
    Ok(required_power(bits, cnr, ber_th))
}

#[inline]
fn required_power(bits: f64, cnr: f64, ber_th: f64) -> f64 {
    (bits.exp2() - 1.0) * ber_margin(ber_th) / (BER_EXPONENT * cnr)
}

/// Activation threshold `C_th = (4 / 1.6) (alpha ln 2 / (1 - alpha)) (-ln(5 BER_th))`.
pub fn cnr_threshold(alpha: f64, ber_th: f64) -> f64 {
    4.0 / BER_EXPONENT * (alpha * std::f64::consts::LN_2 / (1.0 - alpha)) * ber_margin(ber_th)
}

/// `K` such that `b* = log2(K C)`.
#[inline]
fn bits_gain(alpha: f64, ber_th: f64) -> f64 {
    power_saturation(alpha) * BER_EXPONENT / ber_margin(ber_th)
}

fn check_active(alpha: f64, cnr: f64, ber_th: f64) -> Result<()> {
    check_alpha(alpha)?;
    let threshold = cnr_threshold(alpha, ber_th);
    if cnr >= threshold && cnr > 0.0 {
        Ok(())
    } else {
        Err(LoadingError::BelowThreshold { cnr, threshold })
    }
}

/// Real-valued optimal load `log2[(1 - alpha)/(alpha ln 2) * 1.6 C / (-ln(5 BER_th))]`.
///
/// Fails with [`LoadingError::BelowThreshold`] when `cnr < cnr_threshold(alpha, ber_th)`.
pub fn continuous_bits(alpha: f64, cnr: f64, ber_th: f64) -> Result<f64> {
    check_active(alpha, cnr, ber_th)?;
    Ok((bits_gain(alpha, ber_th) * cnr).log2())
}

/// Real-valued optimal power, `(1 - alpha)/(alpha ln 2) * (1 - 1/(K C))`.
pub fn continuous_power(alpha: f64, cnr: f64, ber_th: f64) -> Result<f64> {
    check_active(alpha, cnr, ber_th)?;
    Ok(power_saturation(alpha) * (1.0 - 1.0 / (bits_gain(alpha, ber_th) * cnr)))
}

/// Stationary power as a function of the load: `(1 - alpha)/(alpha ln 2) * (1 - 2^-b)`.
pub fn relation_power_of_bits(alpha: f64, bits: f64) -> f64 {
    power_saturation(alpha) * (1.0 - (-bits).exp2())
}

/// Sum of bits and power over an allocation.
pub trait Loading {
    fn total_bits(&self) -> f64;
    fn total_power(&self) -> f64;
}

/// Weighted objective `alpha s sum(P) - (1 - alpha) sum(b)`; lower is better.
pub fn scalarize<L: Loading + ?Sized>(alpha: f64, allocation: &L, power_scale: f64) -> f64 {
    alpha * power_scale * allocation.total_power() - (1.0 - alpha) * allocation.total_bits()
}

/// Real-valued (pre-rounding) solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousAllocation {
    pub alpha: f64,
    pub bits: Vec<f64>,
    pub powers: Vec<f64>,
    pub active: Vec<bool>,
}

impl Loading for ContinuousAllocation {
    fn total_bits(&self) -> f64 {
        self.bits.iter().sum()
    }

    fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Closed-form solution at weight `alpha` (already in the power-scaled frame),
/// with sub-threshold subcarriers nulled.
pub fn continuous_allocation(
    alpha: f64,
    realization: &ChannelRealization,
    ber_th: &BerTargets,
) -> Result<ContinuousAllocation> {
    check_alpha(alpha)?;
    ber_th.check_len(realization.len())?;
    let n = realization.len();
    let mut out = ContinuousAllocation {
        alpha,
        bits: vec![0.0; n],
        powers: vec![0.0; n],
        active: vec![false; n],
    };
    for (i, &c) in realization.cnr().iter().enumerate() {
        let t = ber_th.get(i);
        if let (Ok(b), Ok(p)) = (continuous_bits(alpha, c, t), continuous_power(alpha, c, t)) {
            out.bits[i] = b;
            out.powers[i] = p;
            out.active[i] = true;
        }
    }
    Ok(out)
}

/// Integer loads with powers set by BER equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAllocation {
    bits: Vec<u32>,
    powers: Vec<f64>,
    alpha_used: Option<f64>,
    total_bits: u64,
    total_power: f64,
    objective: Option<f64>,
}

impl DiscreteAllocation {
    /// Assembles an allocation and its totals. When `weight` is given as
    /// `(alpha, power_scale)`, the objective is evaluated at that weight.
    pub(crate) fn assemble(bits: Vec<u32>, powers: Vec<f64>, weight: Option<(f64, f64)>) -> Self {
        debug_assert_eq!(bits.len(), powers.len());
        let total_bits = bits.iter().map(|&b| b as u64).sum();
        let total_power = powers.iter().sum();
        let mut out = Self {
            bits,
            powers,
            alpha_used: None,
            total_bits,
            total_power,
            objective: None,
        };
        if let Some((alpha, scale)) = weight {
            out.alpha_used = Some(alpha);
            out.objective = Some(scalarize(alpha, &out, scale));
        }
        out
    }

    pub(crate) fn nulled(n: usize, weight: Option<(f64, f64)>) -> Self {
        Self::assemble(vec![0; n], vec![0.0; n], weight)
    }

    pub fn bits(&self) -> &[u32] {
        &self.bits
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Weight the allocation was computed with; `None` for baselines without a weight.
    pub fn alpha_used(&self) -> Option<f64> {
        self.alpha_used
    }

    pub fn total_bits_u64(&self) -> u64 {
        self.total_bits
    }

    /// Objective at `alpha_used` in the caller's power scale.
    pub fn objective(&self) -> Option<f64> {
        self.objective
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b > 0).count()
    }

    /// Achieved BER on each active subcarrier, as `(index, ber)`.
    pub fn achieved_ber<'a>(
        &'a self,
        realization: &'a ChannelRealization,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.bits
            .iter()
            .zip(&self.powers)
            .zip(realization.cnr())
            .enumerate()
            .filter(|(_, ((b, _), _))| **b > 0)
            .map(|(i, ((&b, &p), &c))| {
                let v = ber(p, b as f64, c).expect("active subcarriers have b >= 2");
                (i, v)
            })
    }
}

impl Loading for DiscreteAllocation {
    fn total_bits(&self) -> f64 {
        self.total_bits as f64
    }

    fn total_power(&self) -> f64 {
        self.total_power
    }
}

/// Rounds the closed-form solution at weight `alpha` and recomputes powers
/// from the BER targets. Ignores the power budget.
pub fn allocate_unconstrained(
    alpha: f64,
    realization: &ChannelRealization,
    config: &LoadingConfig,
) -> Result<DiscreteAllocation> {
    check_alpha(alpha)?;
    let ber_th = config.ber_th();
    ber_th.check_len(realization.len())?;
    let a = config.effective_alpha(alpha);
    let n = realization.len();
    let mut bits = vec![0u32; n];
    let mut powers = vec![0.0; n];
    for (i, &c) in realization.cnr().iter().enumerate() {
        let t = ber_th.get(i);
        if c > 0.0 && c >= cnr_threshold(a, t) {
            let b = (bits_gain(a, t) * c)
                .log2()
                .round()
                .max(MIN_ACTIVE_BITS as f64);
            bits[i] = b as u32;
            powers[i] = required_power(b, c, t);
        }
    }
    Ok(DiscreteAllocation::assemble(
        bits,
        powers,
        Some((alpha, config.power_scale())),
    ))
}

/// Bookkeeping from [`allocate_traced`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BisectionTrace {
    /// Whether the initial weight violated the budget.
    pub active: bool,
    /// Bisection midpoints evaluated.
    pub iterations: u32,
    /// Calls to [`allocate_unconstrained`], including the initial one.
    pub evaluations: u32,
    /// `ceil(log2((1 - alpha0) / alpha_tol))`.
    pub bound: u32,
    /// Stopped because a feasible total came within epsilon of the budget.
    pub hit_epsilon: bool,
}

/// Allocation under the total power budget. See [`allocate_traced`].
pub fn allocate(
    realization: &ChannelRealization,
    config: &LoadingConfig,
) -> Result<DiscreteAllocation> {
    allocate_traced(realization, config).map(|(a, _)| a)
}

/// Allocates at `alpha0` and, when that exceeds the budget, bisects `alpha` on
/// `[alpha0, 1)`.
///
/// The loop stops once a feasible allocation lands within `epsilon` below the
/// budget or the bracket is narrower than `alpha_tol`. The rounded total power is
/// a step function of `alpha`, so the returned allocation is the feasible
/// iterate with the largest total power (smallest `alpha` on ties), not a
/// certified minimal weight. When no midpoint is feasible every subcarrier is
/// nulled and `alpha_used` is the upper end of the bracket.
pub fn allocate_traced(
    realization: &ChannelRealization,
    config: &LoadingConfig,
) -> Result<(DiscreteAllocation, BisectionTrace)> {
    let initial = allocate_unconstrained(config.alpha0(), realization, config)?;
    let mut trace = BisectionTrace {
        evaluations: 1,
        bound: config.bisection_bound(),
        ..Default::default()
    };
    let Some(p_th) = config.p_th() else {
        return Ok((initial, trace));
    };
    if initial.total_power <= p_th {
        return Ok((initial, trace));
    }
    trace.active = true;

    let (mut lo, mut hi) = (config.alpha0(), 1.0_f64);
    let mut best: Option<DiscreteAllocation> = None;
    while trace.iterations < trace.bound && hi - lo >= config.alpha_tol() {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let candidate = allocate_unconstrained(mid, realization, config)?;
        trace.iterations += 1;
        trace.evaluations += 1;
        if candidate.total_power <= p_th {
            hi = mid;
            let close = p_th - candidate.total_power <= config.epsilon();
            let better = best
                .as_ref()
                .is_none_or(|b| candidate.total_power >= b.total_power);
            if better {
                best = Some(candidate);
            }
            if close {
                trace.hit_epsilon = true;
                break;
            }
        } else {
            lo = mid;
        }
    }
    let out = best.unwrap_or_else(|| {
        DiscreteAllocation::nulled(realization.len(), Some((hi, config.power_scale())))
    });
    Ok((out, trace))
}
