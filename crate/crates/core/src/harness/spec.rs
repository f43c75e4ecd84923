use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::emit::OutputFormat;
use crate::allocator::{BerTargets, LoadingConfig};
use crate::baselines::ExhaustiveConfig;
use crate::channel::FadingModel;
use crate::error::{LoadingError, Result};

/// Allocators a sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Rounded allocation with bisection on the weight.
    Proposed,
    /// Real-valued closed-form solution at the initial weight, budget ignored.
    Continuous,
    /// Discrete optimum by enumeration (small N only).
    Exhaustive,
    UniformPower,
    EqualBit,
    Greedy,
}

impl Algorithm {
    /// Name written to result files. Reconstructed comparators carry a `_recon` suffix.
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Continuous => "continuous",
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::UniformPower => "uniform_power_recon",
            Algorithm::EqualBit => "equal_bit_recon",
            Algorithm::Greedy => "greedy_recon",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = LoadingError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "proposed" => Algorithm::Proposed,
            "continuous" => Algorithm::Continuous,
            "exhaustive" => Algorithm::Exhaustive,
            "uniform_power" | "uniform_power_recon" => Algorithm::UniformPower,
            "equal_bit" | "equal_bit_recon" => Algorithm::EqualBit,
            "greedy" | "greedy_recon" => Algorithm::Greedy,
            other => {
                return Err(LoadingError::Config(format!("unknown algorithm `{other}`")));
            }
        })
    }
}

/// What the `snr_db` column measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrAxis {
    /// Mean of the instantaneous received SNR `P_i C_i` over subcarriers and realizations.
    #[default]
    Received,
    /// Nominal mean channel-to-noise ratio of the sweep point.
    MeanCnr,
}

impl FromStr for SnrAxis {
    type Err = LoadingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "received" => Ok(SnrAxis::Received),
            "mean-cnr" | "mean_cnr" => Ok(SnrAxis::MeanCnr),
            other => Err(LoadingError::Config(format!("unknown SNR axis `{other}`"))),
        }
    }
}

/// Loading parameters before validation; one BER target for every subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingSettings {
    pub alpha0: f64,
    pub ber_th: f64,
    /// Total power budget in mW, `None` for unconstrained.
    pub p_th: Option<f64>,
    pub epsilon: f64,
    pub power_scale: f64,
    pub alpha_tol: f64,
}

impl Default for LoadingSettings {
    fn default() -> Self {
        Self {
            alpha0: 0.5,
            ber_th: 1e-4,
            p_th: None,
            epsilon: LoadingConfig::DEFAULT_EPSILON,
            power_scale: 1.0,
            alpha_tol: LoadingConfig::DEFAULT_ALPHA_TOL,
        }
    }
}

impl LoadingSettings {
    pub fn to_config(&self) -> Result<LoadingConfig> {
        LoadingConfig::new(self.alpha0, BerTargets::Uniform(self.ber_th))
            .and_then(|c| c.with_power_budget(self.p_th))
            .and_then(|c| c.with_epsilon(self.epsilon))
            .and_then(|c| c.with_power_scale(self.power_scale))
            .and_then(|c| c.with_alpha_tol(self.alpha_tol))
            .map_err(|e| LoadingError::Config(e.to_string()))
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub n_subcarriers: usize,
    pub n_realizations: usize,
    pub seed: u64,
    /// Mean channel-to-noise ratios of the sweep, in dB.
    pub snr_grid: Vec<f64>,
    pub mean_gain: f64,
    pub loading: LoadingSettings,
    pub algorithms: Vec<Algorithm>,
    pub b_max: u32,
    pub snr_axis: SnrAxis,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n_subcarriers: 128,
            n_realizations: 10_000,
            seed: 1,
            snr_grid: linspace(0.0, 40.0, 10),
            mean_gain: 1.0,
            loading: LoadingSettings::default(),
            algorithms: vec![Algorithm::Proposed, Algorithm::Continuous],
            b_max: 8,
            snr_axis: SnrAxis::default(),
            output_path: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentSpec {
    /// Realization count of the `--fast` profile.
    pub const FAST_REALIZATIONS: usize = 100;
    /// Largest N the exhaustive oracle is allowed to run at.
    pub const EXHAUSTIVE_MAX_SUBCARRIERS: usize = 8;

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(LoadingError::Config(m));
        if self.n_subcarriers == 0 {
            return fail("at least one subcarrier is required".into());
        }
        if self.n_realizations == 0 {
            return fail("at least one realization is required".into());
        }
        if self.snr_grid.is_empty() {
            return fail("the SNR grid is empty".into());
        }
        if let Some(x) = self.snr_grid.iter().find(|x| !x.is_finite()) {
            return fail(format!("SNR grid point {x} is not finite"));
        }
        if self.algorithms.is_empty() {
            return fail("no algorithm selected".into());
        }
        if self.algorithms.contains(&Algorithm::Exhaustive)
            && self.n_subcarriers > Self::EXHAUSTIVE_MAX_SUBCARRIERS
        {
            return fail(format!(
                "exhaustive search needs at most {} subcarriers, got {}",
                Self::EXHAUSTIVE_MAX_SUBCARRIERS,
                self.n_subcarriers
            ));
        }
        self.fading()?;
        self.exhaustive()?;
        self.loading.to_config().map(|_| ())
    }

    pub fn fading(&self) -> Result<FadingModel> {
        FadingModel::new(self.mean_gain).map_err(|e| LoadingError::Config(e.to_string()))
    }

    pub fn exhaustive(&self) -> Result<ExhaustiveConfig> {
        ExhaustiveConfig::new(self.b_max).map_err(|e| LoadingError::Config(e.to_string()))
    }
}
