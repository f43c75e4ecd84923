//! Independent oracles for the closed forms and property tests of the allocator.

use approx::assert_relative_eq;
use proptest::prelude::*;

use multiload::allocator::{
    allocate, allocate_traced, allocate_unconstrained, ber, cnr_threshold, continuous_allocation,
    continuous_bits, continuous_power, power_for_bits, scalarize, BerTargets, Loading,
    LoadingConfig,
};
use multiload::analytic::{avg_power, avg_throughput, AnalyticParams};
use multiload::baselines::{exhaustive_search, greedy_margin_adaptive, ExhaustiveConfig};
use multiload::channel::ChannelRealization;
use multiload::expint::{e1, exp_integral_neg};
use multiload::kkt::check_kkt;

/// Composite Gauss-Legendre (5 points) on `[a, b]` with `n` panels.
fn gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * h;
            X.iter()
                .zip(W)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// `E{g(C)}` over `C ~ Exp(rate)` restricted to `C >= c0`, by substituting `C = c0 + u / rate`.
fn expectation_above<F: Fn(f64) -> f64>(g: F, rate: f64, c0: f64) -> f64 {
    let scale = (-rate * c0).exp();
    scale * gauss(|u| g(c0 + u / rate) * (-u).exp(), 0.0, 60.0, 4000)
}

/// `E1(z) = e^{-z} sum_{n>=1} z^n H_n / n! - gamma - ln z` with all series terms positive.
fn e1_positive_series(z: f64) -> f64 {
    let gamma = 0.577_215_664_901_532_9;
    let (mut term, mut harmonic, mut sum) = (1.0, 0.0, 0.0);
    for n in 1..400 {
        term *= z / n as f64;
        harmonic += 1.0 / n as f64;
        sum += term * harmonic;
        if term * harmonic < 1e-18 * sum {
            break;
        }
    }
    (-z).exp() * sum - gamma - z.ln()
}

#[test]
fn e1_matches_positive_series_and_quadrature() {
    for &z in &[1e-5, 1e-3, 0.05, 0.3, 0.9, 1.0, 1.5, 2.5] {
        assert_relative_eq!(e1(z), e1_positive_series(z), max_relative = 1e-13);
    }
    for &z in &[1.0f64, 3.0, 10.0, 40.0] {
        // E1(z) = e^{-z} \int_0^inf e^{-u} / (z + u) du
        let quad = (-z).exp() * gauss(|u| (-u).exp() / (z + u), 0.0, 60.0, 4000);
        assert_relative_eq!(e1(z), quad, max_relative = 1e-12);
    }
    assert_relative_eq!(
        exp_integral_neg(1.0).unwrap(),
        -0.219_383_934_395_520_3,
        max_relative = 1e-14
    );
}

#[test]
fn closed_form_averages_match_direct_integration() {
    for &(alpha, t, rate) in &[
        (0.5, 1e-4, 0.01),
        (0.5, 1e-4, 0.2),
        (0.3, 1e-6, 0.05),
        (0.8, 1e-3, 0.001),
    ] {
        let c0 = cnr_threshold(alpha, t);
        let bits = expectation_above(|c| continuous_bits(alpha, c, t).unwrap(), rate, c0);
        let power = expectation_above(|c| continuous_power(alpha, c, t).unwrap(), rate, c0);
        let p = AnalyticParams::new(alpha, BerTargets::Uniform(t), rate, 3).unwrap();
        assert_relative_eq!(avg_throughput(&p), 3.0 * bits, max_relative = 1e-10);
        assert_relative_eq!(avg_power(&p), 3.0 * power, max_relative = 1e-10);
    }
}

#[test]
fn per_subcarrier_targets_sum_individual_averages() {
    let targets = vec![1e-3, 1e-5, 1e-7];
    let mixed =
        AnalyticParams::new(0.4, BerTargets::PerSubcarrier(targets.clone()), 0.02, 3).unwrap();
    let singles: f64 = targets
        .iter()
        .map(|&t| {
            avg_throughput(&AnalyticParams::new(0.4, BerTargets::Uniform(t), 0.02, 1).unwrap())
        })
        .sum();
    assert_relative_eq!(avg_throughput(&mixed), singles, max_relative = 1e-14);
}

fn cnr_vec(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..6.0, n)
        .prop_map(|v| v.into_iter().map(|e| 10f64.powf(e)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn discrete_loads_are_zero_or_at_least_two(c in cnr_vec(1..=64), alpha in 0.02f64..0.98, lt in -8.0f64..-2.0) {
        let t = 10f64.powf(lt);
        let r = ChannelRealization::from_cnr(c).unwrap();
        let config = LoadingConfig::new(alpha, BerTargets::Uniform(t)).unwrap();
        let a = allocate_unconstrained(alpha, &r, &config).unwrap();
        for (i, (&b, &p)) in a.bits().iter().zip(a.powers()).enumerate() {
            prop_assert!(b == 0 || b >= 2);
            prop_assert_eq!(b == 0, p == 0.0);
            if b > 0 {
                let got = ber(p, b as f64, r.cnr()[i]).unwrap();
                prop_assert!(((got - t) / t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_is_never_exceeded(c in cnr_vec(1..=64), alpha in 0.05f64..0.95, budget in 1e-3f64..50.0) {
        let r = ChannelRealization::from_cnr(c).unwrap();
        let config = LoadingConfig::new(alpha, BerTargets::Uniform(1e-4)).unwrap()
            .with_power_budget(Some(budget)).unwrap();
        let (a, trace) = allocate_traced(&r, &config).unwrap();
        prop_assert!(a.total_power() <= budget);
        prop_assert!(trace.iterations <= trace.bound);
        let used = a.alpha_used().unwrap();
        prop_assert!(used >= alpha && used <= 1.0);
        if !trace.active {
            prop_assert_eq!(used, alpha);
        }
    }

    #[test]
    fn throughput_is_monotone_in_cnr(c in cnr_vec(1..=32), factor in 1.0f64..10.0, alpha in 0.05f64..0.95) {
        let bt = BerTargets::Uniform(1e-4);
        let r = ChannelRealization::from_cnr(c.clone()).unwrap();
        let s = ChannelRealization::from_cnr(c.iter().map(|x| x * factor).collect()).unwrap();
        let lo = continuous_allocation(alpha, &r, &bt).unwrap();
        let hi = continuous_allocation(alpha, &s, &bt).unwrap();
        prop_assert!(hi.total_bits() >= lo.total_bits());
        prop_assert!(hi.total_power() >= lo.total_power() - 1e-12);
    }

    #[test]
    fn continuous_solution_satisfies_kkt(c in cnr_vec(1..=32), alpha in 0.02f64..0.98, lt in -8.0f64..-2.0) {
        let bt = BerTargets::Uniform(10f64.powf(lt));
        let r = ChannelRealization::from_cnr(c).unwrap();
        let a = continuous_allocation(alpha, &r, &bt).unwrap();
        let report = check_kkt(alpha, &a, &r, &bt, 1e-9);
        prop_assert!(report.pass, "{:?}", report);
    }

    #[test]
    fn continuous_objective_bounds_discrete(c in cnr_vec(1..=32), alpha in 0.05f64..0.95) {
        let bt = BerTargets::Uniform(1e-4);
        let r = ChannelRealization::from_cnr(c).unwrap();
        let config = LoadingConfig::new(alpha, bt.clone()).unwrap();
        let cont = continuous_allocation(alpha, &r, &bt).unwrap();
        let disc = allocate(&r, &config).unwrap();
        prop_assert!(scalarize(alpha, &cont, 1.0) <= scalarize(alpha, &disc, 1.0) + 1e-9);
    }

    #[test]
    fn exhaustive_is_no_worse_than_proposed(c in cnr_vec(1..=4), budget in 1e-3f64..10.0) {
        let r = ChannelRealization::from_cnr(c).unwrap();
        let config = LoadingConfig::new(0.5, BerTargets::Uniform(1e-4)).unwrap()
            .with_power_budget(Some(budget)).unwrap();
        let ex = ExhaustiveConfig::new(12).unwrap();
        let oracle = exhaustive_search(&r, &config, &ex).unwrap();
        let proposed = allocate(&r, &config).unwrap();
        prop_assert!(oracle.total_power() <= budget);
        if proposed.bits().iter().all(|&b| b <= 12) {
            prop_assert!(scalarize(0.5, &oracle, 1.0) <= scalarize(0.5, &proposed, 1.0) + 1e-9);
        }
    }

    #[test]
    fn greedy_hits_target_and_respects_minimum(c in cnr_vec(1..=16), target in 2u64..120) {
        let r = ChannelRealization::from_cnr(c).unwrap();
        let g = greedy_margin_adaptive(&r, target, &BerTargets::Uniform(1e-4)).unwrap();
        prop_assert_eq!(g.total_bits_u64(), target);
        for (i, &b) in g.bits().iter().enumerate() {
            prop_assert!(b == 0 || b >= 2);
            if b > 0 {
                let p = power_for_bits(b, r.cnr()[i], 1e-4).unwrap();
                prop_assert!((g.powers()[i] - p).abs() <= 1e-12 * p);
            }
        }
    }
}
