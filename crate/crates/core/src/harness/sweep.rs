use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{Algorithm, ExperimentSpec, SnrAxis};
use crate::allocator::{
    allocate_traced, ber, continuous_allocation, DiscreteAllocation, Loading, LoadingConfig,
    MIN_ACTIVE_BITS,
};
use crate::analytic::{avg_power, avg_throughput, AnalyticParams};
use crate::baselines::{
    equal_bit_power_loading, exhaustive_search, greedy_margin_adaptive, uniform_power_bit_loading,
    ExhaustiveConfig,
};
use crate::channel::{
    generate_rayleigh, realization_seed, received_snr_sum, snr_db_from_mean, ChannelRealization,
    FadingModel,
};
use crate::error::Result;

/// One row of a sweep: averages over all realizations at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub algorithm: String,
    /// Below-floor (no power transmitted) is written as an empty cell / `null`.
    #[serde(with = "finite_or_empty")]
    pub snr_db: f64,
    #[serde(rename = "avg_throughput_bits")]
    pub avg_throughput: f64,
    #[serde(rename = "avg_power_mw")]
    pub avg_power: f64,
    pub avg_ber: f64,
    pub alpha_used_mean: Option<f64>,
    #[serde(rename = "analytic_throughput_bits")]
    pub analytic_throughput: Option<f64>,
    #[serde(rename = "analytic_power_mw")]
    pub analytic_power: Option<f64>,
}

mod finite_or_empty {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Per-point bisection statistics of the proposed allocator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTrace {
    pub mean_cnr_db: f64,
    pub bisection_runs: usize,
    pub max_iterations: u32,
    pub max_evaluations: u32,
    pub budget_violations: usize,
}

/// Totals of one algorithm on one realization.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    bits: f64,
    power: f64,
    snr_sum: f64,
    ber_sum: f64,
    ber_count: usize,
    alpha: Option<f64>,
}

impl Tally {
    fn discrete(a: &DiscreteAllocation, r: &ChannelRealization) -> Self {
        let (ber_sum, ber_count) = a
            .achieved_ber(r)
            .fold((0.0, 0), |(s, k), (_, b)| (s + b, k + 1));
        Self {
            bits: a.total_bits(),
            power: a.total_power(),
            snr_sum: received_snr_sum(a.powers(), r),
            ber_sum,
            ber_count,
            alpha: a.alpha_used(),
        }
    }
}

struct RealizationOutcome {
    tallies: Vec<Tally>,
    bisection_active: bool,
    iterations: u32,
    evaluations: u32,
    over_budget: bool,
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    config: LoadingConfig,
    exhaustive: ExhaustiveConfig,
    model: FadingModel,
}

impl Context<'_> {
    fn run_one(&self, noise_variance: f64, index: usize) -> Result<RealizationOutcome> {
        let n = self.spec.n_subcarriers;
        let r = generate_rayleigh(
            n,
            self.model,
            noise_variance,
            realization_seed(self.spec.seed, index as u64),
        )?;
        let ber_th = self.config.ber_th();
        let (proposed, trace) = allocate_traced(&r, &self.config)?;
        let over_budget = self
            .config
            .p_th()
            .is_some_and(|p| proposed.total_power() > p);
        let mut tallies = Vec::with_capacity(self.spec.algorithms.len());
        for alg in &self.spec.algorithms {
            let tally = match alg {
                Algorithm::Proposed => Tally::discrete(&proposed, &r),
                Algorithm::Continuous => {
                    let alpha = self.config.effective_alpha(self.config.alpha0());
                    let c = continuous_allocation(alpha, &r, ber_th)?;
                    let mut t = Tally {
                        bits: c.total_bits(),
                        power: c.total_power(),
                        snr_sum: received_snr_sum(&c.powers, &r),
                        alpha: Some(self.config.alpha0()),
                        ..Default::default()
                    };
                    for i in (0..n).filter(|&i| c.active[i]) {
                        t.ber_sum += ber(c.powers[i], c.bits[i], r.cnr()[i])?;
                        t.ber_count += 1;
                    }
                    t
                }
                Algorithm::Exhaustive => {
                    Tally::discrete(&exhaustive_search(&r, &self.config, &self.exhaustive)?, &r)
                }
                Algorithm::UniformPower => Tally::discrete(
                    &uniform_power_bit_loading(&r, proposed.total_power(), ber_th)?,
                    &r,
                ),
                Algorithm::EqualBit => {
                    let per = (proposed.total_bits() / n as f64).round() as u64;
                    let per = per.max(MIN_ACTIVE_BITS as u64);
                    Tally::discrete(&equal_bit_power_loading(&r, per * n as u64, ber_th)?, &r)
                }
                Algorithm::Greedy => Tally::discrete(
                    &greedy_margin_adaptive(&r, proposed.total_bits_u64(), ber_th)?,
                    &r,
                ),
            };
            tallies.push(tally);
        }
        Ok(RealizationOutcome {
            tallies,
            bisection_active: trace.active,
            iterations: trace.iterations,
            evaluations: trace.evaluations,
            over_budget,
        })
    }
}

fn analytic_params(config: &LoadingConfig, rate: f64, n: usize) -> Result<AnalyticParams> {
    AnalyticParams::new(
        config.effective_alpha(config.alpha0()),
        config.ber_th().clone(),
        rate,
        n,
    )
}

/// Runs every algorithm of `spec` over every sweep point.
///
/// Realizations share seeds across sweep points, so consecutive points see the
/// same fading draws at a different noise level. Per-realization results are
/// reduced in index order, making the output independent of the thread count.
///
/// The uniform-power comparator receives the proposed allocator's total power
/// of the same realization, the greedy comparator its total bits, and the
/// equal-bit comparator its mean load per subcarrier rounded to an integer of
/// at least 2. Closed-form columns are attached to the proposed and continuous
/// rows whenever no realization at that point needed bisection.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    run_sweep_traced(spec).map(|(r, _)| r)
}

pub fn run_sweep_traced(spec: &ExperimentSpec) -> Result<(Vec<SweepRecord>, Vec<SweepTrace>)> {
    spec.validate()?;
    let ctx = Context {
        spec,
        config: spec.loading.to_config()?,
        exhaustive: spec.exhaustive()?,
        model: spec.fading()?,
    };
    let n = spec.n_subcarriers;
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for &mean_cnr_db in &spec.snr_grid {
        let nv = ctx.model.noise_variance_for_mean_cnr_db(mean_cnr_db);
        let outcomes = (0..spec.n_realizations)
            .into_par_iter()
            .map(|k| ctx.run_one(nv, k))
            .collect::<Result<Vec<_>>>()?;

        let mut trace = SweepTrace {
            mean_cnr_db,
            ..Default::default()
        };
        for o in &outcomes {
            trace.bisection_runs += o.bisection_active as usize;
            trace.max_iterations = trace.max_iterations.max(o.iterations);
            trace.max_evaluations = trace.max_evaluations.max(o.evaluations);
            trace.budget_violations += o.over_budget as usize;
        }
        let analytic = if trace.bisection_runs == 0 {
            let p = analytic_params(&ctx.config, ctx.model.rate(nv), n)?;
            Some((avg_throughput(&p), avg_power(&p)))
        } else {
            None
        };

        let trials = spec.n_realizations as f64;
        for (j, alg) in spec.algorithms.iter().enumerate() {
            let mut sum = Tally::default();
            let mut alpha_sum = 0.0;
            let mut has_alpha = false;
            for o in &outcomes {
                let t = &o.tallies[j];
                sum.bits += t.bits;
                sum.power += t.power;
                sum.snr_sum += t.snr_sum;
                sum.ber_sum += t.ber_sum;
                sum.ber_count += t.ber_count;
                if let Some(a) = t.alpha {
                    alpha_sum += a;
                    has_alpha = true;
                }
            }
            let snr_db = match spec.snr_axis {
                SnrAxis::Received => snr_db_from_mean(sum.snr_sum / (trials * n as f64)),
                SnrAxis::MeanCnr => mean_cnr_db,
            };
            let attach = matches!(alg, Algorithm::Proposed | Algorithm::Continuous);
            records.push(SweepRecord {
                algorithm: alg.label().to_string(),
                snr_db,
                avg_throughput: sum.bits / trials,
                avg_power: sum.power / trials,
                avg_ber: if sum.ber_count > 0 {
                    sum.ber_sum / sum.ber_count as f64
                } else {
                    0.0
                },
                alpha_used_mean: has_alpha.then(|| alpha_sum / trials),
                analytic_throughput: analytic.filter(|_| attach).map(|a| a.0),
                analytic_power: analytic.filter(|_| attach).map(|a| a.1),
            });
        }
        traces.push(trace);
    }
    Ok((records, traces))
}

/// Closed-form averages over the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub mean_cnr_db: f64,
    pub analytic_throughput_bits: f64,
    pub analytic_power_mw: f64,
}

pub fn analytic_table(spec: &ExperimentSpec) -> Result<Vec<AnalyticRow>> {
    spec.validate()?;
    let config = spec.loading.to_config()?;
    let model = spec.fading()?;
    spec.snr_grid
        .iter()
        .map(|&db| {
            let rate = model.rate(model.noise_variance_for_mean_cnr_db(db));
            let p = analytic_params(&config, rate, spec.n_subcarriers)?;
            Ok(AnalyticRow {
                mean_cnr_db: db,
                analytic_throughput_bits: avg_throughput(&p),
                analytic_power_mw: avg_power(&p),
            })
        })
        .collect()
}
