use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::ExperimentSpec;
use crate::allocator::{allocate, scalarize, Loading};
use crate::baselines::exhaustive_search;
use crate::channel::{generate_rayleigh, realization_seed};
use crate::error::{LoadingError, Result};

/// Slack allowed when checking that the oracle objective lower-bounds the proposed one.
const BOUND_SLACK: f64 = 1e-9;

/// Proposed allocator against the exhaustive oracle on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub mean_cnr_db: f64,
    pub realization: usize,
    pub proposed_objective: f64,
    pub oracle_objective: f64,
    pub relative_gap: f64,
    pub proposed_bits: u64,
    pub oracle_bits: u64,
    pub proposed_power: f64,
    pub oracle_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub mean_gap: f64,
    pub max_gap: f64,
    /// Rows where the oracle objective exceeded the proposed one.
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStudy {
    pub rows: Vec<GapRow>,
    pub summary: GapSummary,
}

/// `(proposed - oracle) / |oracle|`, zero when both objectives vanish.
pub fn relative_gap(proposed: f64, oracle: f64) -> f64 {
    if oracle == 0.0 {
        if proposed == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (proposed - oracle) / oracle.abs()
    }
}

/// Compares the proposed allocator with the exhaustive oracle on every
/// realization and grid point of `spec`. Both objectives are weighted at
/// `alpha0`, so the oracle value is a lower bound on the proposed one whenever
/// the proposed loads stay within the oracle's `b_max`.
pub fn run_gap_study(spec: &ExperimentSpec) -> Result<GapStudy> {
    spec.validate()?;
    if spec.n_subcarriers > ExperimentSpec::EXHAUSTIVE_MAX_SUBCARRIERS {
        return Err(LoadingError::Config(format!(
            "the gap study needs at most {} subcarriers, got {}",
            ExperimentSpec::EXHAUSTIVE_MAX_SUBCARRIERS,
            spec.n_subcarriers
        )));
    }
    let config = spec.loading.to_config()?;
    let ex = spec.exhaustive()?;
    let model = spec.fading()?;
    let mut rows = Vec::with_capacity(spec.snr_grid.len() * spec.n_realizations);
    for &db in &spec.snr_grid {
        let nv = model.noise_variance_for_mean_cnr_db(db);
        let batch = (0..spec.n_realizations)
            .into_par_iter()
            .map(|k| {
                let seed = realization_seed(spec.seed, k as u64);
                let r = generate_rayleigh(spec.n_subcarriers, model, nv, seed)?;
                let proposed = allocate(&r, &config)?;
                let oracle = exhaustive_search(&r, &config, &ex)?;
                let p = scalarize(config.alpha0(), &proposed, config.power_scale());
                let o = scalarize(config.alpha0(), &oracle, config.power_scale());
                Ok(GapRow {
                    mean_cnr_db: db,
                    realization: k,
                    proposed_objective: p,
                    oracle_objective: o,
                    relative_gap: relative_gap(p, o),
                    proposed_bits: proposed.total_bits_u64(),
                    oracle_bits: oracle.total_bits_u64(),
                    proposed_power: proposed.total_power(),
                    oracle_power: oracle.total_power(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(batch);
    }
    let summary = GapSummary {
        mean_gap: rows.iter().map(|r| r.relative_gap).sum::<f64>() / rows.len() as f64,
        max_gap: rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max),
        bound_violations: rows
            .iter()
            .filter(|r| r.oracle_objective > r.proposed_objective + BOUND_SLACK)
            .count(),
    };
    Ok(GapStudy { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_gap_cases() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert_eq!(relative_gap(-9.0, -10.0), 0.1);
        assert!(relative_gap(1.0, 0.0).is_infinite());
    }

    #[test]
    fn oracle_bounds_proposed() {
        let mut spec = ExperimentSpec {
            n_subcarriers: 3,
            n_realizations: 30,
            seed: 5,
            snr_grid: vec![20.0, 35.0],
            ..Default::default()
        };
        spec.loading.p_th = Some(0.01);
        let study = run_gap_study(&spec).unwrap();
        assert_eq!(study.rows.len(), 60);
        assert_eq!(study.summary.bound_violations, 0);
        assert!(study.rows.iter().all(|r| r.relative_gap >= -1e-12));
    }

    #[test]
    fn rejects_large_instances() {
        let spec = ExperimentSpec {
            n_subcarriers: 9,
            ..Default::default()
        };
        assert!(matches!(run_gap_study(&spec), Err(LoadingError::Config(_))));
    }

    #[test]
    fn single_subcarrier_gap_is_the_rounding_loss() {
        use crate::allocator::{power_for_bits, Loading};
        let mut spec = ExperimentSpec {
            n_subcarriers: 1,
            n_realizations: 40,
            seed: 3,
            snr_grid: vec![25.0],
            ..Default::default()
        };
        spec.loading.p_th = Some(0.005);
        let study = run_gap_study(&spec).unwrap();
        let model = spec.fading().unwrap();
        let nv = model.noise_variance_for_mean_cnr_db(25.0);
        for row in &study.rows {
            let r = generate_rayleigh(1, model, nv, realization_seed(3, row.realization as u64))
                .unwrap();
            let c = r.cnr()[0];
            let scan = std::iter::once(0.0)
                .chain((2..=8).filter_map(|b| {
                    let p = power_for_bits(b, c, 1e-4).ok()?;
                    (p <= 0.005).then_some(0.5 * p - 0.5 * b as f64)
                }))
                .fold(f64::INFINITY, f64::min);
            assert!((row.oracle_objective - scan).abs() < 1e-12);
            let proposed = allocate(&r, &spec.loading.to_config().unwrap()).unwrap();
            assert!(
                (row.proposed_objective
                    - (0.5 * proposed.total_power() - 0.5 * proposed.total_bits()))
                .abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn unconstrained_rounding_often_lands_on_the_optimum() {
        let spec = ExperimentSpec {
            n_subcarriers: 2,
            n_realizations: 50,
            seed: 8,
            snr_grid: vec![15.0],
            b_max: 16,
            ..Default::default()
        };
        let study = run_gap_study(&spec).unwrap();
        assert_eq!(study.summary.bound_violations, 0);
        let exact = study
            .rows
            .iter()
            .filter(|r| r.relative_gap.abs() < 1e-12)
            .count();
        assert!(exact * 2 > study.rows.len());
    }
}
