//! Comparison allocators.
//!
//! [`exhaustive_search`] is the discrete optimality oracle: it enumerates every
//! bit vector over `{0, 2, ..., b_max}` and keeps the best feasible one under the
//! same weighted objective and power budget as the proposed allocator.
//!
//! The other three are reconstructions of the literature comparators, built only
//! from their one-line descriptions. They are not ports of the original
//! algorithms and are labeled as such wherever results are written out:
//!
//! * [`uniform_power_bit_loading`]: equal power on every subcarrier, as many bits as the BER target allows.
//! * [`equal_bit_power_loading`]: the same load on every subcarrier, minimum power for the BER target.
//! * [`greedy_margin_adaptive`]: Hughes-Hartogs style greedy loading to a bit target.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::allocator::{
    ber_margin, power_for_bits, BerTargets, DiscreteAllocation, LoadingConfig, MIN_ACTIVE_BITS,
};
use crate::channel::ChannelRealization;
use crate::error::{invalid, LoadingError, Result};

/// Enumeration is refused above this many candidate bit vectors.
pub const MAX_CANDIDATES: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveConfig {
    b_max: u32,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        Self { b_max: 8 }
    }
}

impl ExhaustiveConfig {
    pub fn new(b_max: u32) -> Result<Self> {
        if b_max < MIN_ACTIVE_BITS {
            return Err(invalid(format!("b_max must be at least 2, got {b_max}")));
        }
        Ok(Self { b_max })
    }

    pub fn b_max(&self) -> u32 {
        self.b_max
    }

    /// `{0} ∪ {2, ..., b_max}` in ascending order.
    pub fn alphabet(&self) -> Vec<u32> {
        std::iter::once(0)
            .chain(MIN_ACTIVE_BITS..=self.b_max)
            .collect()
    }

    pub fn candidate_count(&self, n: usize) -> f64 {
        (self.alphabet().len() as f64).powi(n as i32)
    }
}

struct Search<'a> {
    /// `costs[i][k]`: power of alphabet entry `k` on subcarrier `i`, `None` when unreachable.
    costs: Vec<Vec<Option<f64>>>,
    alphabet: &'a [u32],
    p_th: f64,
    alpha: f64,
    scale: f64,
    current: Vec<u32>,
    best: Option<(f64, f64, Vec<u32>)>,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, power: f64, bits: u64) {
        if i == self.costs.len() {
            let objective = self.alpha * self.scale * power - (1.0 - self.alpha) * bits as f64;
            let better = match &self.best {
                None => true,
                // Depth-first order is lexicographic, so equal keys keep the earlier vector.
                Some((o, p, _)) => match objective.total_cmp(o) {
                    Ordering::Less => true,
                    Ordering::Equal => power < *p,
                    Ordering::Greater => false,
                },
            };
            if better {
                self.best = Some((objective, power, self.current.clone()));
            }
            return;
        }
        for k in 0..self.alphabet.len() {
            let Some(p) = self.costs[i][k] else { continue };
            let total = power + p;
            // Costs grow with the load, so later entries are infeasible too.
            if total > self.p_th {
                break;
            }
            self.current[i] = self.alphabet[k];
            self.visit(i + 1, total, bits + self.alphabet[k] as u64);
        }
        self.current[i] = 0;
    }
}

/// Globally optimal discrete allocation at weight `alpha0` under the power budget.
///
/// Ties on the objective go to the lower total power, then to the
/// lexicographically smallest bit vector.
pub fn exhaustive_search(
    realization: &ChannelRealization,
    config: &LoadingConfig,
    ex: &ExhaustiveConfig,
) -> Result<DiscreteAllocation> {
    let n = realization.len();
    config.ber_th().check_len(n)?;
    let candidates = ex.candidate_count(n);
    if candidates > MAX_CANDIDATES {
        return Err(LoadingError::InstanceTooLarge {
            candidates,
            limit: MAX_CANDIDATES,
        });
    }
    let alphabet = ex.alphabet();
    let costs = realization
        .cnr()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            alphabet
                .iter()
                .map(|&b| match b {
                    0 => Some(0.0),
                    _ => power_for_bits(b, c, config.ber_th().get(i)).ok(),
                })
                .collect()
        })
        .collect();
    let mut search = Search {
        costs,
        alphabet: &alphabet,
        p_th: config.p_th().unwrap_or(f64::INFINITY),
        alpha: config.alpha0(),
        scale: config.power_scale(),
        current: vec![0; n],
        best: None,
    };
    search.visit(0, 0.0, 0);
    let (_, _, bits) = search.best.expect("the all-zero vector is always feasible");
    let powers = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => 0.0,
            _ => power_for_bits(b, realization.cnr()[i], config.ber_th().get(i))
                .expect("reachable by construction"),
        })
        .collect();
    Ok(DiscreteAllocation::assemble(
        bits,
        powers,
        Some((config.alpha0(), config.power_scale())),
    ))
}

/// Uniform power `p_budget / N` per subcarrier with the largest load that meets the BER
/// target (reconstruction). Subcarriers that cannot carry 2 bits are switched off, so
/// the spent power can be below the budget.
pub fn uniform_power_bit_loading(
    realization: &ChannelRealization,
    p_budget: f64,
    ber_th: &BerTargets,
) -> Result<DiscreteAllocation> {
    if !(p_budget >= 0.0) || !p_budget.is_finite() {
        return Err(invalid(format!(
            "power budget must be non-negative, got {p_budget}"
        )));
    }
    let n = realization.len();
    ber_th.check_len(n)?;
    let per = p_budget / n as f64;
    let mut bits = vec![0u32; n];
    let mut powers = vec![0.0; n];
    for (i, &c) in realization.cnr().iter().enumerate() {
        if per == 0.0 || c == 0.0 {
            continue;
        }
        let t = ber_th.get(i);
        let x = 1.6 * per * c / ber_margin(t);
        let mut b = (1.0 + x).log2().floor().max(0.0) as u32;
        // Snap up when the next load is met to rounding precision.
        if power_for_bits((b + 1).max(MIN_ACTIVE_BITS), c, t)? <= per * (1.0 + 1e-12) {
            b = (b + 1).max(MIN_ACTIVE_BITS);
        }
        if b >= MIN_ACTIVE_BITS {
            bits[i] = b;
            powers[i] = per;
        }
    }
    Ok(DiscreteAllocation::assemble(bits, powers, None))
}

/// The same load `total_bits_target / N` on every subcarrier at minimum power
/// (reconstruction of the equal-bit comparator).
pub fn equal_bit_power_loading(
    realization: &ChannelRealization,
    total_bits_target: u64,
    ber_th: &BerTargets,
) -> Result<DiscreteAllocation> {
    let n = realization.len();
    ber_th.check_len(n)?;
    if !total_bits_target.is_multiple_of(n as u64) {
        return Err(invalid(format!(
            "{total_bits_target} bits do not split evenly over {n} subcarriers"
        )));
    }
    let b = (total_bits_target / n as u64) as u32;
    if b == 0 {
        return Ok(DiscreteAllocation::nulled(n, None));
    }
    if b < MIN_ACTIVE_BITS {
        return Err(invalid(
            "equal-bit loading needs at least 2 bits per subcarrier",
        ));
    }
    let powers = realization
        .cnr()
        .iter()
        .enumerate()
        .map(|(i, &c)| power_for_bits(b, c, ber_th.get(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteAllocation::assemble(vec![b; n], powers, None))
}

#[derive(Debug, PartialEq)]
struct Increment {
    per_bit: f64,
    index: usize,
}

impl Eq for Increment {}

impl Ord for Increment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.per_bit
            .total_cmp(&other.per_bit)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Increment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy loading to exactly `total_bits_target` bits (reconstruction).
///
/// Each step grants the increment with the lowest power per bit: switching a
/// subcarrier on costs the 2-bit power, spread over both bits; `b -> b + 1`
/// costs the power difference. If a single bit remains and the cheapest move is
/// a switch-on, the cheaper of two repairs is taken: one more bit on an active
/// subcarrier, or the switch-on paired with removing the most expensive bit
/// from a subcarrier above 2 bits.
pub fn greedy_margin_adaptive(
    realization: &ChannelRealization,
    total_bits_target: u64,
    ber_th: &BerTargets,
) -> Result<DiscreteAllocation> {
    let n = realization.len();
    ber_th.check_len(n)?;
    if total_bits_target == 0 {
        return Ok(DiscreteAllocation::nulled(n, None));
    }
    if total_bits_target == 1 {
        return Err(LoadingError::Infeasible(
            "a single bit cannot be loaded with a 2-bit minimum".into(),
        ));
    }
    let cnr = realization.cnr();
    if cnr.iter().all(|&c| c == 0.0) {
        return Err(LoadingError::Infeasible(
            "every subcarrier is in a deep fade".into(),
        ));
    }

    let mut bits = vec![0u32; n];
    let step_cost = |i: usize, b: u32| -> Result<f64> {
        let t = ber_th.get(i);
        Ok(match b {
            0 => power_for_bits(MIN_ACTIVE_BITS, cnr[i], t)? / MIN_ACTIVE_BITS as f64,
            _ => power_for_bits(b + 1, cnr[i], t)? - power_for_bits(b, cnr[i], t)?,
        })
    };
    let mut heap = BinaryHeap::with_capacity(n);
    for (i, &c) in cnr.iter().enumerate() {
        if c > 0.0 {
            heap.push(Reverse(Increment {
                per_bit: step_cost(i, 0)?,
                index: i,
            }));
        }
    }

    let mut remaining = total_bits_target;
    while remaining > 0 {
        let Reverse(top) = heap.pop().expect("active subcarriers always offer a step");
        let i = top.index;
        if bits[i] == 0 && remaining == 1 {
            let single = bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b > 0)
                .map(|(j, &b)| Ok((j, step_cost(j, b)?)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("at least one subcarrier is active once a bit is left");
            let swap = bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b > MIN_ACTIVE_BITS)
                .map(|(j, &b)| Ok((j, step_cost(j, b - 1)?)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            let switch_on = top.per_bit * MIN_ACTIVE_BITS as f64;
            match swap {
                Some((j, saving)) if switch_on - saving < single.1 => {
                    bits[i] = MIN_ACTIVE_BITS;
                    bits[j] -= 1;
                }
                _ => bits[single.0] += 1,
            }
            break;
        }
        let step = if bits[i] == 0 { MIN_ACTIVE_BITS } else { 1 };
        bits[i] += step;
        remaining -= step as u64;
        heap.push(Reverse(Increment {
            per_bit: step_cost(i, bits[i])?,
            index: i,
        }));
    }

    let powers = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => Ok(0.0),
            _ => power_for_bits(b, cnr[i], ber_th.get(i)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteAllocation::assemble(bits, powers, None))
}
