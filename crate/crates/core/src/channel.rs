//! Rayleigh-fading multicarrier channels.
//!
//! Under Rayleigh fading the channel amplitude `|H_i|` is Rayleigh distributed,
//! so the power gain `|H_i|^2` is exponential with mean `E{|H_i|^2}`. The
//! channel-to-noise ratio `C_i = |H_i|^2 / sigma_n^2` is then exponential with
//! rate `sigma_n^2 / E{|H_i|^2}`.
//!
//! Realizations are drawn from a ChaCha stream keyed only by the seed, so a
//! realization is a pure function of `(n, model, noise_variance, seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Result};

/// Per-subcarrier channel state for one multicarrier symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gain_sq: Vec<f64>,
    noise_variance: f64,
    cnr: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from channel power gains `|H_i|^2` and the noise variance in mW.
    pub fn from_gains(gain_sq: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if gain_sq.is_empty() {
            return Err(invalid("a realization needs at least one subcarrier"));
        }
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(invalid(format!(
                "noise variance must be positive and finite, got {noise_variance}"
            )));
        }
        if let Some(g) = gain_sq.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(invalid(format!(
                "channel power gains must be finite and non-negative, got {g}"
            )));
        }
        let cnr = gain_sq.iter().map(|g| g / noise_variance).collect();
        Ok(Self {
            gain_sq,
            noise_variance,
            cnr,
        })
    }

    /// Convenience constructor with unit noise variance, so `cnr == gain_sq`.
    pub fn from_cnr(cnr: Vec<f64>) -> Result<Self> {
        Self::from_gains(cnr, 1.0)
    }

    pub fn gain_sq(&self) -> &[f64] {
        &self.gain_sq
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Channel-to-noise ratios `C_i` in 1/mW.
    pub fn cnr(&self) -> &[f64] {
        &self.cnr
    }

    pub fn len(&self) -> usize {
        self.cnr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cnr.is_empty()
    }

    /// Same channel gains observed at a different noise level.
    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        Self::from_gains(self.gain_sq.clone(), noise_variance)
    }
}

/// Rayleigh fading with a given average channel power gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    mean_gain: f64,
}

impl Default for FadingModel {
    fn default() -> Self {
        Self { mean_gain: 1.0 }
    }
}

impl FadingModel {
    pub fn new(mean_gain: f64) -> Result<Self> {
        if !(mean_gain > 0.0 && mean_gain.is_finite()) {
            return Err(invalid(format!(
                "mean channel gain must be positive, got {mean_gain}"
            )));
        }
        Ok(Self { mean_gain })
    }

    pub fn mean_gain(&self) -> f64 {
        self.mean_gain
    }

    /// Rate of the exponential distribution of `C_i` at the given noise variance (mW).
    pub fn rate(&self, noise_variance: f64) -> f64 {
        noise_variance / self.mean_gain
    }

    /// Mean channel-to-noise ratio `1 / rate`.
    pub fn mean_cnr(&self, noise_variance: f64) -> f64 {
        self.mean_gain / noise_variance
    }

    /// Noise variance that yields the requested mean CNR, given in dB.
    pub fn noise_variance_for_mean_cnr_db(&self, mean_cnr_db: f64) -> f64 {
        self.mean_gain / 10f64.powf(mean_cnr_db / 10.0)
    }
}

/// Draws `n` i.i.d. Rayleigh-faded subcarriers.
pub fn generate_rayleigh(
    n: usize,
    model: FadingModel,
    noise_variance: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    if n == 0 {
        return Err(invalid("subcarrier count must be at least 1"));
    }
    if !(noise_variance > 0.0) {
        return Err(invalid(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gain_sq = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            model.mean_gain * e
        })
        .collect();
    ChannelRealization::from_gains(gain_sq, noise_variance)
}

/// Derives the seed of realization `index` from a base seed (splitmix64 finalizer).
///
/// The mapping depends only on `(base, index)`, so realizations can be produced in
/// any order or on any thread.
pub fn realization_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Average SNR reported when no power is transmitted at all.
pub const SNR_BELOW_FLOOR_DB: f64 = f64::NEG_INFINITY;

/// Sum of the instantaneous received SNR `P_i * C_i` over the subcarriers of one realization.
pub fn received_snr_sum(powers: &[f64], realization: &ChannelRealization) -> f64 {
    powers
        .iter()
        .zip(realization.cnr())
        .map(|(p, c)| p * c)
        .sum()
}

/// `10 log10` of the mean instantaneous SNR `P_i C_i` over all subcarriers and
/// realizations. Nulled subcarriers contribute zero; an all-zero input yields
/// [`SNR_BELOW_FLOOR_DB`].
pub fn average_snr_db<A: AsRef<[f64]>>(
    powers: &[A],
    realizations: &[ChannelRealization],
) -> Result<f64> {
    if powers.is_empty() || realizations.is_empty() {
        return Err(invalid("average SNR needs at least one realization"));
    }
    if powers.len() != realizations.len() {
        return Err(invalid(format!(
            "{} allocations for {} realizations",
            powers.len(),
            realizations.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, r) in powers.iter().zip(realizations) {
        let p = p.as_ref();
        if p.len() != r.len() {
            return Err(invalid(format!(
                "allocation has {} subcarriers, realization has {}",
                p.len(),
                r.len()
            )));
        }
        sum += received_snr_sum(p, r);
        count += r.len();
    }
    Ok(snr_db_from_mean(sum / count as f64))
}

pub(crate) fn snr_db_from_mean(mean: f64) -> f64 {
    if mean > 0.0 {
        10.0 * mean.log10()
    } else {
        SNR_BELOW_FLOOR_DB
    }
}
