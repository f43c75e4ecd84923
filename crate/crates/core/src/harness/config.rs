//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! subcarriers = 128
//! realizations = 10000
//! power_budget = none
//! snr_grid = 0:40:10
//! algorithms = proposed, continuous
//! ```
//!
//! Keys mirror the command-line flags with `-` replaced by `_`. File values are
//! applied over the defaults and command-line values over the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::emit::OutputFormat;
use super::spec::{linspace, Algorithm, ExperimentSpec, SnrAxis};
use crate::error::{LoadingError, Result};

/// Optional settings layered onto an [`ExperimentSpec`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub subcarriers: Option<usize>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub ber_th: Option<f64>,
    /// `Some(None)` clears the budget.
    pub power_budget: Option<Option<f64>>,
    pub epsilon: Option<f64>,
    pub power_scale: Option<f64>,
    pub alpha_tol: Option<f64>,
    pub snr_grid: Option<Vec<f64>>,
    pub mean_gain: Option<f64>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub b_max: Option<u32>,
    pub snr_axis: Option<SnrAxis>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub fast: Option<bool>,
}

impl Overrides {
    /// Writes every present field into `spec`. `fast` only sets the realization
    /// count when no explicit count is given in the same layer.
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if self.fast == Some(true) {
            spec.n_realizations = ExperimentSpec::FAST_REALIZATIONS;
        }
        macro_rules! set {
            ($field:ident => $($target:tt)+) => {
                if let Some(v) = &self.$field {
                    spec.$($target)+ = v.clone();
                }
            };
        }
        set!(subcarriers => n_subcarriers);
        set!(realizations => n_realizations);
        set!(seed => seed);
        set!(alpha => loading.alpha0);
        set!(ber_th => loading.ber_th);
        set!(power_budget => loading.p_th);
        set!(epsilon => loading.epsilon);
        set!(power_scale => loading.power_scale);
        set!(alpha_tol => loading.alpha_tol);
        set!(snr_grid => snr_grid);
        set!(mean_gain => mean_gain);
        set!(algorithms => algorithms);
        set!(b_max => b_max);
        set!(snr_axis => snr_axis);
        set!(format => format);
        if let Some(p) = &self.output {
            spec.output_path = Some(p.clone());
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| LoadingError::Config(format!("`{key}`: cannot parse `{v}`")))
}

/// `none` (or `inf`) for an unconstrained budget, otherwise a power in mW.
pub fn parse_power_budget(v: &str) -> Result<Option<f64>> {
    match v.trim().to_ascii_lowercase().as_str() {
        "none" | "inf" | "unconstrained" => Ok(None),
        s => parse_num::<f64>("power-budget", s).map(Some),
    }
}

/// Either `start:stop:count` or a comma-separated list, in dB.
pub fn parse_snr_grid(v: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(LoadingError::Config(format!(
                "SNR grid `{v}` is not start:stop:count"
            )));
        }
        let start = parse_num("snr-grid", parts[0])?;
        let stop = parse_num("snr-grid", parts[1])?;
        let count = parse_num("snr-grid", parts[2])?;
        Ok(linspace(start, stop, count))
    } else {
        v.split(',').map(|x| parse_num("snr-grid", x)).collect()
    }
}

pub fn parse_algorithms(v: &str) -> Result<Vec<Algorithm>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(LoadingError::Config(format!(
            "`{key}`: expected a boolean, got `{other}`"
        ))),
    }
}

/// Parses the text of a configuration file.
pub fn parse_config_str(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(LoadingError::Config(format!(
                "line {}: expected `key = value`",
                lineno + 1
            )));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim().trim_matches('"');
        match key.as_str() {
            "subcarriers" | "n_subcarriers" => o.subcarriers = Some(parse_num(&key, value)?),
            "realizations" | "n_realizations" => o.realizations = Some(parse_num(&key, value)?),
            "seed" => o.seed = Some(parse_num(&key, value)?),
            "alpha" | "alpha0" => o.alpha = Some(parse_num(&key, value)?),
            "ber_th" => o.ber_th = Some(parse_num(&key, value)?),
            "power_budget" | "p_th" => o.power_budget = Some(parse_power_budget(value)?),
            "epsilon" => o.epsilon = Some(parse_num(&key, value)?),
            "power_scale" => o.power_scale = Some(parse_num(&key, value)?),
            "alpha_tol" => o.alpha_tol = Some(parse_num(&key, value)?),
            "snr_grid" => o.snr_grid = Some(parse_snr_grid(value)?),
            "mean_gain" => o.mean_gain = Some(parse_num(&key, value)?),
            "algorithms" => o.algorithms = Some(parse_algorithms(value)?),
            "b_max" => o.b_max = Some(parse_num(&key, value)?),
            "snr_axis" => o.snr_axis = Some(value.parse()?),
            "output" | "output_path" => o.output = Some(PathBuf::from(value)),
            "format" => o.format = Some(value.parse()?),
            "fast" => o.fast = Some(parse_bool(&key, value)?),
            other => {
                return Err(LoadingError::Config(format!(
                    "line {}: unknown key `{other}`",
                    lineno + 1
                )));
            }
        }
    }
    Ok(o)
}

pub fn load_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}
