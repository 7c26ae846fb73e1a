//! Structural invariants checked on randomized inputs: quadrature identities,
//! posterior normalization facts, premium symmetries, and conservation of
//! redistributed money.

use proptest::prelude::*;
use riskscale::quadrature::integrate_theta;
use riskscale::redistribution::{self, AssignmentRule, ClaimModel};
use riskscale::{
    bayes, catalog, diagnostics, DensityFamily, FunctionHandle, Interval, LocationFamily,
    OrganismAssignment, PopulationConfig, PremiumRule, QuadratureConfig, SubsetOmega,
};

fn poly(coeffs: &[f64]) -> FunctionHandle {
    FunctionHandle::new("polynomial", coeffs).unwrap()
}

fn full(lo: f64, hi: f64) -> SubsetOmega {
    SubsetOmega::full(Interval::new(lo, hi).unwrap())
}

/// Up-to-quartic polynomial with bounded coefficients.
fn arb_coeffs() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, 1..=5)
}

/// A strictly increasing pair inside [-6, 6] with non-trivial width.
fn arb_interval() -> impl Strategy<Value = (f64, f64)> {
    (-6.0f64..5.0).prop_flat_map(|lo| (Just(lo), (lo + 0.5)..6.0))
}

/// One to three disjoint intervals inside [-6, 6].
fn arb_subset() -> impl Strategy<Value = SubsetOmega> {
    proptest::collection::vec(0.05f64..0.95, 2..=6).prop_map(|cuts| {
        let mut edges: Vec<f64> = cuts.iter().map(|c| -6.0 + 12.0 * c).collect();
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|b, a| (*b - *a).abs() < 0.2);
        let mut intervals = Vec::new();
        // Pair consecutive edges into intervals, skipping every other gap.
        let mut i = 0;
        while i + 1 < edges.len() {
            intervals.push(Interval::new(edges[i], edges[i + 1]).unwrap());
            i += 2;
        }
        if intervals.is_empty() {
            intervals.push(Interval::new(-1.0, 1.0).unwrap());
        }
        SubsetOmega::new(intervals).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Integration is linear in the integrand.
    #[test]
    fn quadrature_is_linear(c1 in arb_coeffs(), c2 in arb_coeffs(),
                            alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
                            (lo, hi) in arb_interval()) {
        let cfg = QuadratureConfig::default();
        let p1 = poly(&c1);
        let p2 = poly(&c2);
        let omega = full(lo, hi);
        let a = integrate_theta(|t| p1.value(t), &omega, &cfg).unwrap();
        let b = integrate_theta(|t| p2.value(t), &omega, &cfg).unwrap();
        let combined = integrate_theta(
            |t| Ok(alpha * p1.value(t)? + beta * p2.value(t)?),
            &omega,
            &cfg,
        )
        .unwrap();
        let expect = alpha * a + beta * b;
        prop_assert!((combined - expect).abs() <= 1e-10 * expect.abs().max(1.0));
    }

    /// Splitting the region splits the integral.
    #[test]
    fn quadrature_is_additive_over_splits(coeffs in arb_coeffs(),
                                          (lo, hi) in arb_interval(),
                                          frac in 0.1f64..0.9) {
        let cfg = QuadratureConfig::default();
        let p = poly(&coeffs);
        let mid = lo + frac * (hi - lo);
        let whole = integrate_theta(|t| p.value(t), &full(lo, hi), &cfg).unwrap();
        let left = integrate_theta(|t| p.value(t), &full(lo, mid), &cfg).unwrap();
        let right = integrate_theta(|t| p.value(t), &full(mid, hi), &cfg).unwrap();
        prop_assert!((whole - (left + right)).abs() <= 1e-10 * whole.abs().max(1.0));
    }

    /// Polynomials integrate to their antiderivative difference exactly
    /// (Gauss-Legendre is exact far beyond quartics).
    #[test]
    fn quadrature_matches_antiderivatives(coeffs in arb_coeffs(), (lo, hi) in arb_interval()) {
        let cfg = QuadratureConfig::default();
        let p = poly(&coeffs);
        let got = integrate_theta(|t| p.value(t), &full(lo, hi), &cfg).unwrap();
        let anti = |t: f64| -> f64 {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * t.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum()
        };
        let expect = anti(hi) - anti(lo);
        prop_assert!((got - expect).abs() <= 1e-10 * expect.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Restriction mass is additive over disjoint parameter regions.
    #[test]
    fn sigma_mass_is_additive(omega in arb_subset(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let scn = catalog::scen_gaussian_sum();
        let cfg = QuadratureConfig::default();
        let whole = bayes::sigma_mass(&scn, &omega, x, y, &cfg).unwrap();
        let parts: f64 = omega
            .intervals()
            .iter()
            .map(|iv| {
                bayes::sigma_mass(&scn, &SubsetOmega::full(*iv), x, y, &cfg).unwrap()
            })
            .sum();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.abs().max(1e-30));
    }

    /// A criterion-free mean prices every restriction at the same constant.
    #[test]
    fn isotropic_premium_ignores_criteria_and_restriction(
        omega in arb_subset(), x in -4.0f64..4.0, y in -4.0f64..4.0
    ) {
        let scn = catalog::scen_isotropic();
        let cfg = QuadratureConfig::default();
        let premium = bayes::posterior_expectation(&scn, &omega, x, y, &cfg).unwrap();
        prop_assert!((premium - 0.7).abs() <= 1e-9);
    }

    /// Conjugate oracle: on the gaussian sum scenario with full support, the
    /// premium is (x + y) / 3 wherever the posterior center is far enough
    /// from the parameter truncation edge.
    #[test]
    fn full_support_premium_matches_conjugate_line(x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let scn = catalog::scen_gaussian_sum();
        let cfg = QuadratureConfig::default();
        let premium =
            bayes::posterior_expectation(&scn, &scn.full_support(), x, y, &cfg).unwrap();
        // Posterior sd is 1/sqrt(3); |x+y|/3 <= 8/3 keeps the mass 9+ sd
        // inside [-6, 6], so truncation effects sit below 1e-9.
        prop_assert!((premium - (x + y) / 3.0).abs() <= 1e-7);
    }

    /// Location families are symmetric around their center.
    #[test]
    fn location_densities_are_even_around_theta(theta in -2.0f64..2.0, dx in 0.0f64..3.0) {
        for fam in [LocationFamily::Gaussian, LocationFamily::Cauchy] {
            let family =
                DensityFamily::named_location(fam, 1.0, Interval::new(-6.0, 6.0).unwrap())
                    .unwrap();
            let above = family.density(theta + dx, theta).unwrap();
            let below = family.density(theta - dx, theta).unwrap();
            prop_assert!((above - below).abs() <= 1e-12 * above.max(1e-300));
        }
    }

    /// Swapping x and y leaves the premium alone whenever the scenario is
    /// fully symmetric in the two criteria.
    #[test]
    fn symmetric_scenario_premium_commutes(omega in arb_subset(),
                                           x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let scn = catalog::scen_gaussian_sum();
        let cfg = QuadratureConfig::default();
        let one = bayes::posterior_expectation(&scn, &omega, x, y, &cfg).unwrap();
        let two = bayes::posterior_expectation(&scn, &omega, y, x, &cfg).unwrap();
        prop_assert!((one - two).abs() <= 1e-9 * one.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The two evaluation orders of the premium-difference functional agree
    /// on scenarios where it does not vanish.
    #[test]
    fn f_evaluation_orders_agree(seed in 0u64..1000, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let scn = catalog::scen_cauchy_sum();
        let cfg = QuadratureConfig::default();
        let omega = diagnostics::sample_subsets(scn.prior.support(), 1, seed)
            .pop()
            .unwrap();
        let direct = diagnostics::f_direct(&scn, &omega, x, y, &cfg).unwrap();
        let factored = diagnostics::f_factorized(&scn, &omega, x, y, &cfg).unwrap();
        let tol = 1e-9 * direct.abs().max(factored.abs()).max(1e-3);
        prop_assert!((direct - factored).abs() <= tol.max(1e-12));
    }

    /// Money is conserved organism by organism, whatever the partition and
    /// claim model.
    #[test]
    fn redistribution_conserves_money(seed in 0u64..500, k in 1usize..6, n in 50usize..220) {
        let scn = catalog::scen_isotropic();
        let cfg = QuadratureConfig::default();
        let pop_cfg = PopulationConfig {
            n_individuals: n,
            rng_seed: seed,
            claim_model: ClaimModel::GammaNoise { cv: 0.5 },
            exact_conditional_sampling: false,
        };
        let assignment = OrganismAssignment::new(k, AssignmentRule::Random).unwrap();
        let outcome =
            redistribution::simulate(&scn, &pop_cfg, &assignment, &PremiumRule::Flat, &cfg)
                .unwrap();
        prop_assert_eq!(
            outcome.organisms.iter().map(|o| o.members).sum::<usize>(),
            n
        );
        let collected: f64 = outcome.organisms.iter().map(|o| o.collected).sum();
        prop_assert_eq!(collected.to_bits(), outcome.total_collected.to_bits());
        let imbalance: f64 = outcome.organisms.iter().map(|o| o.imbalance).sum();
        prop_assert_eq!(imbalance.to_bits(), outcome.total_imbalance.to_bits());
        prop_assert!(
            (outcome.total_imbalance
                - (outcome.total_collected - outcome.total_expected_cost))
                .abs()
                <= 1e-9 * outcome.total_collected.abs().max(1.0)
        );
    }
}

/// Posterior density integrates to one over its own restriction.
#[test]
fn posterior_density_normalizes_on_restrictions() {
    let scn = catalog::scen_gaussian_sum();
    let cfg = QuadratureConfig::default();
    for (omega, x, y) in [
        (full(-6.0, 6.0), 1.0, 2.0),
        (full(0.0, 6.0), 0.0, 0.0),
        (
            SubsetOmega::new(vec![
                Interval::new(-4.0, -1.0).unwrap(),
                Interval::new(0.5, 2.5).unwrap(),
            ])
            .unwrap(),
            -1.0,
            0.5,
        ),
    ] {
        let total = integrate_theta(
            |t| bayes::posterior_density(&scn, &omega, t, x, y, &cfg),
            &omega,
            &cfg,
        )
        .unwrap();
        assert!(
            (total - 1.0).abs() <= 1e-8,
            "posterior mass {total} on {omega:?}"
        );
    }
}

/// Individual draws depend only on (seed, index): growing the population
/// leaves the existing individuals untouched.
#[test]
fn population_draws_are_prefix_stable() {
    let scn = catalog::scen_gaussian_sum();
    let small = PopulationConfig::new(100, 42, ClaimModel::DeterministicMean).unwrap();
    let large = PopulationConfig::new(300, 42, ClaimModel::DeterministicMean).unwrap();
    let a = redistribution::sample_population(&scn, &small).unwrap();
    let b = redistribution::sample_population(&scn, &large).unwrap();
    for (i, j) in a.iter().zip(b.iter()) {
        assert_eq!(i.theta.to_bits(), j.theta.to_bits());
        assert_eq!(i.x.to_bits(), j.x.to_bits());
        assert_eq!(i.y.to_bits(), j.y.to_bits());
        assert_eq!(i.claim.to_bits(), j.claim.to_bits());
    }
}

/// The cached 64-node conditional sampler tracks the exact per-individual
/// sampler closely enough for desk-scale statistics.
#[test]
fn cached_conditioning_tracks_exact_sampling() {
    let scn = catalog::scen_gaussian_sum();
    let mut cached_cfg = PopulationConfig::new(4000, 17, ClaimModel::DeterministicMean).unwrap();
    let mut exact_cfg = cached_cfg;
    cached_cfg.exact_conditional_sampling = false;
    exact_cfg.exact_conditional_sampling = true;
    let cached = redistribution::sample_population(&scn, &cached_cfg).unwrap();
    let exact = redistribution::sample_population(&scn, &exact_cfg).unwrap();
    let mean = |v: &[riskscale::redistribution::Individual], f: fn(&riskscale::redistribution::Individual) -> f64| {
        v.iter().map(f).sum::<f64>() / v.len() as f64
    };
    // Same thetas (same draws), conditionals differ only by node rounding.
    for (c, e) in cached.iter().zip(exact.iter()) {
        assert_eq!(c.theta.to_bits(), e.theta.to_bits());
        // Nearest-node conditioning moves the center by at most half a node
        // step (12 / 63 over the support), so individual draws stay close.
        assert!((c.x - e.x).abs() <= 0.25, "x {} vs exact {}", c.x, e.x);
        assert!((c.y - e.y).abs() <= 0.25);
    }
    assert!((mean(&cached, |i| i.x) - mean(&exact, |i| i.x)).abs() <= 0.02);
    assert!((mean(&cached, |i| i.y) - mean(&exact, |i| i.y)).abs() <= 0.02);
}
