//! Deterministic Gauss–Legendre quadrature over parameter subsets.
//!
//! This is the single integration authority for the crate: posterior masses,
//! normalizers, diagnostic functionals and CDF tabulations all route through
//! it. The rule is fixed-order Gauss–Legendre per interval with an optional
//! refinement loop that doubles the node count until two successive estimates
//! agree to a relative tolerance, or a doubling budget is exhausted.
//!
//! Node/weight tables are computed once per order by Newton iteration on the
//! Legendre recurrence and kept in a process-wide cache that is safe for
//! concurrent readers. All summation is sequential in node order, so results
//! are bit-identical regardless of thread count.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::model::{DensityFamily, Interval, SubsetOmega};

/// Optional refinement loop settings.
#[derive(Debug, Clone, Copy)]
pub struct Refinement {
    /// Relative agreement required between successive estimates. The scale of
    /// the comparison is `max(|new|, |old|, 1)`, so near-zero integrals are
    /// judged absolutely.
    pub rel_tol: f64,
    /// How many times the node count may be doubled before giving up.
    pub max_doublings: u32,
}

impl Default for Refinement {
    fn default() -> Self {
        Refinement {
            rel_tol: 1e-10,
            max_doublings: 4,
        }
    }
}

/// Quadrature settings shared by every integral in a computation.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Gauss–Legendre order applied to each interval of the region.
    pub nodes_per_interval: usize,
    /// `None` runs a single fixed-order pass with no convergence check.
    pub refinement: Option<Refinement>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes_per_interval: 64,
            refinement: Some(Refinement::default()),
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        if self.nodes_per_interval == 0 {
            return Err(Error::Invalid(
                "quadrature requires at least one node per interval".into(),
            ));
        }
        if let Some(r) = self.refinement {
            if !(r.rel_tol > 0.0) || !r.rel_tol.is_finite() {
                return Err(Error::Invalid(format!(
                    "refinement tolerance must be a positive finite number, got {}",
                    r.rel_tol
                )));
            }
        }
        Ok(())
    }
}

/// Nodes and weights of the order-`n` Gauss–Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn rule_cache() -> &'static RwLock<HashMap<usize, Arc<GaussLegendreRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendreRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Legendre polynomial P_n and its derivative at `x`, by the three-term
/// recurrence. Returns `(P_n(x), P_n'(x))`.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0; // P_0
    let mut p = x; // P_1
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Fetch (building and caching on first use) the order-`n` rule.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendreRule> {
    if let Some(rule) = rule_cache().read().expect("rule cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_rule(n));
    let mut guard = rule_cache().write().expect("rule cache poisoned");
    Arc::clone(guard.entry(n).or_insert(rule))
}

fn build_rule(n: usize) -> GaussLegendreRule {
    assert!(n >= 1, "rule order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive-side root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-15 {
                let (_, d2) = legendre_and_derivative(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // The middle node of an odd rule is exactly zero.
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre_and_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    GaussLegendreRule { nodes, weights }
}

/// A borrowed integrand; evaluation may fail (e.g. a density raising a domain
/// error), and failures abort the whole integral.
pub type Integrand<'a> = &'a dyn Fn(f64) -> Result<f64>;

fn estimate_many(fs: &[Integrand<'_>], intervals: &[Interval], order: usize) -> Result<Vec<f64>> {
    let rule = gauss_legendre(order);
    let mut totals = vec![0.0f64; fs.len()];
    for iv in intervals {
        let mid = 0.5 * (iv.lo + iv.hi);
        let half = 0.5 * (iv.hi - iv.lo);
        for (&xi, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            let t = mid + half * xi;
            for (k, f) in fs.iter().enumerate() {
                let v = f(t)?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand { at: t });
                }
                totals[k] += w * half * v;
            }
        }
    }
    Ok(totals)
}

/// Integrate several integrands over the same region with a shared node set.
///
/// All integrands are evaluated on identical nodes at every refinement level,
/// and refinement stops only once *every* component has settled. Components
/// that are algebraically dependent (say, the four factors of a product
/// identity) therefore cancel to rounding rather than to quadrature error.
pub fn integrate_many(
    fs: &[Integrand<'_>],
    region: &SubsetOmega,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    integrate_many_intervals(fs, region.intervals(), cfg)
}

fn converged(old: &[f64], new: &[f64], rel_tol: f64) -> (bool, f64) {
    let mut ok = true;
    let mut worst = 0.0f64;
    for (&a, &b) in old.iter().zip(new.iter()) {
        let scale = a.abs().max(b.abs()).max(1.0);
        let change = (a - b).abs() / scale;
        worst = worst.max(change);
        if change > rel_tol {
            ok = false;
        }
    }
    (ok, worst)
}

pub(crate) fn integrate_many_intervals(
    fs: &[Integrand<'_>],
    intervals: &[Interval],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let base = cfg.nodes_per_interval;
    match cfg.refinement {
        None => estimate_many(fs, intervals, base),
        Some(refine) => {
            let mut prev = estimate_many(fs, intervals, base)?;
            let mut order = base;
            let mut last_change = f64::INFINITY;
            for _ in 0..refine.max_doublings {
                order *= 2;
                let next = estimate_many(fs, intervals, order)?;
                let (ok, worst) = converged(&prev, &next, refine.rel_tol);
                last_change = worst;
                if ok {
                    return Ok(next);
                }
                prev = next;
            }
            Err(Error::NoConvergence {
                last_change,
                rel_tol: refine.rel_tol,
            })
        }
    }
}

/// Integrate a single integrand over a parameter subset.
pub fn integrate_theta(
    f: impl Fn(f64) -> Result<f64>,
    region: &SubsetOmega,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let fs: [Integrand<'_>; 1] = [&f];
    Ok(integrate_many(&fs, region, cfg)?[0])
}

/// Integrate a single integrand over one closed interval.
pub fn integrate_interval(
    f: impl Fn(f64) -> Result<f64>,
    interval: Interval,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let fs: [Integrand<'_>; 1] = [&f];
    Ok(integrate_many_intervals(&fs, &[interval], cfg)?[0])
}

/// Normalizer alpha(theta) of an exponential-family density: the reciprocal
/// of the carrier-weighted Laplace integral of the natural parameter against
/// the statistic, taken over the family's declared support.
///
/// Only meaningful for the exponential-family kind; other kinds are rejected.
/// The integral is shifted into log space before exponentiation so steep
/// natural parameters cannot overflow.
pub fn normalize_family(
    family: &DensityFamily,
    theta: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok((-expfam_log_partition(family, theta, cfg)?).exp())
}

/// ln of the partition integral of an exponential-family density, so that
/// `alpha(theta) = exp(-log_partition)`. Numeric log-normalizers memoize this
/// value per theta.
pub(crate) fn expfam_log_partition(
    family: &DensityFamily,
    theta: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.validate()?;
    let (carrier, statistic, natural, support) = match family {
        DensityFamily::ExponentialFamily {
            carrier,
            statistic,
            natural_param,
            support,
            ..
        } => (carrier, statistic, natural_param, *support),
        _ => {
            return Err(Error::Invalid(
                "normalize_family applies only to exponential-family densities".into(),
            ))
        }
    };
    let c_theta = natural.value(theta)?;
    let log_kernel = |x: f64| -> Result<f64> {
        let r = carrier.value(x)?;
        if !(r > 0.0) {
            return Err(Error::Evaluation(format!(
                "carrier is non-positive at x = {x}; exponential-family kernel undefined"
            )));
        }
        Ok(r.ln() + c_theta * statistic.value(x)?)
    };
    // Probe for the kernel maximum so the shifted integrand stays O(1).
    let shift = probe_max(&log_kernel, &[support], 32)?;
    let scaled = integrate_interval(|x| Ok((log_kernel(x)? - shift).exp()), support, cfg)?;
    if !(scaled > 0.0) {
        return Err(Error::Evaluation(format!(
            "exponential-family normalizer integral vanished at theta = {theta}"
        )));
    }
    Ok(shift + scaled.ln())
}

/// Maximum of `f` over an evenly spaced probe grid on each interval
/// (endpoints included). Used to pick log-space shifts.
pub(crate) fn probe_max(
    f: &dyn Fn(f64) -> Result<f64>,
    intervals: &[Interval],
    points_per_interval: usize,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for iv in intervals {
        let n = points_per_interval.max(2);
        for i in 0..n {
            let t = iv.lo + (iv.hi - iv.lo) * (i as f64) / ((n - 1) as f64);
            let v = f(t)?;
            if v > best {
                best = v;
            }
        }
    }
    if best.is_nan() {
        return Err(Error::Evaluation(
            "probe for log-space shift produced NaN".into(),
        ));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, SubsetOmega};
    use crate::registry::FunctionHandle;
    use approx::assert_relative_eq;

    fn full(lo: f64, hi: f64) -> SubsetOmega {
        SubsetOmega::new(vec![Interval::new(lo, hi).unwrap()]).unwrap()
    }

    #[test]
    fn low_order_rules_match_known_tables() {
        let r1 = gauss_legendre(1);
        assert_relative_eq!(r1.nodes[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r1.weights[0], 2.0, epsilon = 1e-15);

        let r2 = gauss_legendre(2);
        let x = 1.0 / 3.0f64.sqrt();
        assert_relative_eq!(r2.nodes[0], -x, epsilon = 1e-15);
        assert_relative_eq!(r2.nodes[1], x, epsilon = 1e-15);
        assert_relative_eq!(r2.weights[0], 1.0, epsilon = 1e-15);

        let r3 = gauss_legendre(3);
        assert_relative_eq!(r3.nodes[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r3.weights[1], 8.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(r3.weights[0], 5.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [4usize, 17, 64, 128] {
            let rule = gauss_legendre(n);
            let total: f64 = rule.weights.iter().sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn monomial_square_is_exact_with_two_nodes() {
        let cfg = QuadratureConfig {
            nodes_per_interval: 2,
            refinement: Some(Refinement::default()),
        };
        let v = integrate_interval(|t| Ok(t * t), Interval::new(0.0, 1.0).unwrap(), &cfg).unwrap();
        assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rule_is_exact_for_degree_two_n_minus_one() {
        // Order 5 must integrate a degree-9 polynomial exactly.
        let cfg = QuadratureConfig {
            nodes_per_interval: 5,
            refinement: None,
        };
        let f = |t: f64| Ok(3.0 * t.powi(9) - 2.0 * t.powi(7) + t.powi(4) - t + 0.5);
        let got = integrate_interval(f, Interval::new(-1.0, 2.0).unwrap(), &cfg).unwrap();
        // Antiderivative: 0.3 t^10 - 0.25 t^8 + 0.2 t^5 - 0.5 t^2 + 0.5 t.
        let anti = |t: f64| 0.3 * t.powi(10) - 0.25 * t.powi(8) + 0.2 * t.powi(5) - 0.5 * t * t + 0.5 * t;
        assert_relative_eq!(got, anti(2.0) - anti(-1.0), epsilon = 1e-12);
    }

    #[test]
    fn standard_normal_mass_on_six_sigma_box() {
        let pdf = FunctionHandle::new("gaussian_location", &[0.0, 1.0]).unwrap();
        let cfg = QuadratureConfig::default();
        let v = integrate_theta(|t| pdf.value(t), &full(-6.0, 6.0), &cfg).unwrap();
        let expected = statrs::function::erf::erf(6.0 / 2.0f64.sqrt());
        assert_relative_eq!(v, expected, epsilon = 1e-9);
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_moment_of_standard_normal() {
        // Completing the square: integral of N(0,1) pdf times e^t over
        // [-6, 6] equals e^{1/2} times the N(1,1) mass of that interval.
        let pdf = FunctionHandle::new("gaussian_location", &[0.0, 1.0]).unwrap();
        let cfg = QuadratureConfig::default();
        let v = integrate_theta(|t| Ok(pdf.value(t)? * t.exp()), &full(-6.0, 6.0), &cfg).unwrap();
        let phi = |z: f64| 0.5 * (1.0 + statrs::function::erf::erf(z / 2.0f64.sqrt()));
        let expected = 0.5f64.exp() * (phi(5.0) - phi(-7.0));
        assert_relative_eq!(v, expected, epsilon = 1e-10);
    }

    #[test]
    fn union_region_splits_the_integral() {
        let cfg = QuadratureConfig::default();
        let region = SubsetOmega::new(vec![
            Interval::new(-2.0, -0.5).unwrap(),
            Interval::new(1.0, 3.0).unwrap(),
        ])
        .unwrap();
        let f = |t: f64| Ok(t * t * t - t + 2.0);
        let whole = integrate_theta(f, &region, &cfg).unwrap();
        let a = integrate_interval(f, Interval::new(-2.0, -0.5).unwrap(), &cfg).unwrap();
        let b = integrate_interval(f, Interval::new(1.0, 3.0).unwrap(), &cfg).unwrap();
        assert_relative_eq!(whole, a + b, epsilon = 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_reported_with_location() {
        let cfg = QuadratureConfig::default();
        let err = integrate_interval(
            |t| Ok(if t > 0.5 { f64::NAN } else { 1.0 }),
            Interval::new(0.0, 1.0).unwrap(),
            &cfg,
        )
        .unwrap_err();
        match err {
            Error::NonFiniteIntegrand { at } => assert!(at > 0.5),
            other => panic!("expected NonFiniteIntegrand, got {other:?}"),
        }
    }

    #[test]
    fn refinement_failure_is_no_convergence() {
        let cfg = QuadratureConfig {
            nodes_per_interval: 4,
            refinement: Some(Refinement {
                rel_tol: 1e-14,
                max_doublings: 2,
            }),
        };
        // A step at an irrational point keeps successive estimates apart.
        let step = |t: f64| Ok(if t < std::f64::consts::FRAC_1_SQRT_2 { 0.0 } else { 1.0 });
        let err = integrate_interval(step, Interval::new(0.0, 1.0).unwrap(), &cfg).unwrap_err();
        match err {
            Error::NoConvergence { last_change, rel_tol } => {
                assert!(last_change > rel_tol);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn exponential_family_normalizer_matches_closed_form() {
        use crate::model::LogNormalizer;
        // Carrier = standard normal pdf, statistic x, natural parameter theta:
        // the partition integral is e^{theta^2 / 2} up to six-sigma truncation,
        // so alpha(1) must come out as e^{-1/2}.
        let family = DensityFamily::exponential_family(
            FunctionHandle::new("gaussian_location", &[0.0, 1.0]).unwrap(),
            FunctionHandle::new("identity", &[]).unwrap(),
            FunctionHandle::new("identity", &[]).unwrap(),
            LogNormalizer::numeric(),
            Interval::new(-6.0, 6.0).unwrap(),
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        let alpha = normalize_family(&family, 1.0, &cfg).unwrap();
        assert!((alpha - (-0.5f64).exp()).abs() < 1e-6, "alpha = {alpha}");

        // Non-exponential-family kinds are rejected.
        let gaussian = DensityFamily::named_location(
            crate::model::LocationFamily::Gaussian,
            1.0,
            Interval::new(-6.0, 6.0).unwrap(),
        )
        .unwrap();
        assert!(normalize_family(&gaussian, 1.0, &cfg).is_err());
    }

    #[test]
    fn shared_nodes_keep_linear_combinations_exact() {
        let cfg = QuadratureConfig::default();
        let region = full(-1.5, 2.0);
        let u = |t: f64| -> Result<f64> { Ok(t * t - 0.5) };
        let v = |t: f64| -> Result<f64> { Ok((0.3 * t).sin() + 1.0) };
        let combo = |t: f64| -> Result<f64> { Ok(2.5 * u(t)? - 0.75 * v(t)?) };
        let fs: [Integrand<'_>; 3] = [&u, &v, &combo];
        let got = integrate_many(&fs, &region, &cfg).unwrap();
        assert_relative_eq!(got[2], 2.5 * got[0] - 0.75 * got[1], max_relative = 1e-12);
    }
}
