//! Scale diagnostics: score functionals, the F identities, the modulability
//! checker, and the structural-condition scorecard.
//!
//! A scale f is a *sufficient* pricing channel for a scenario when every
//! subset premium depends on the criteria only through f. Two complementary
//! probes are provided:
//!
//! * [`check_modulability`] tests the definition head-on: it samples parameter
//!   subsets and pairs of criteria points on common level sets of f, and
//!   compares the premiums directly.
//! * [`check_theorem_conditions`] evaluates the structural conditions that
//!   characterize sufficiency (semilinear scale, exponential-family criteria
//!   whose statistics match the scale components, affine mean) as numeric
//!   residuals on grids.
//!
//! The bridge between the two views is the functional
//! `F = A B - C D` with `A = ∫ m dσ`, `B = ∫ ψ dσ`, `C = ∫ (m ψ + φ) dσ`,
//! `D = ∫ dσ`, which vanishes identically exactly when the premium's
//! level-set derivative does. It is computed both in this factorized form and
//! as the equivalent tensor double integral, on shared quadrature nodes, so
//! the two must agree to rounding.

use rand::Rng;
use serde::Serialize;

use crate::bayes::{self, MASS_FLOOR};
use crate::error::{Error, Result};
use crate::model::{CriteriaBox, Interval, ScaleFunction, Scenario, SubsetOmega};
use crate::quadrature::{gauss_legendre, probe_max, QuadratureConfig};
use crate::seeding;

/// Below this magnitude a scale partial derivative is treated as vanishing
/// and score ratios are undefined at that criteria point.
pub const PARTIAL_FLOOR: f64 = 1e-12;

/// Level-set pairs must match scale values at least this tightly.
const LEVEL_SET_TOL: f64 = 1e-10;
const BISECTION_STEPS: usize = 40;
const ATTEMPTS_PER_PAIR: usize = 50;

/// RNG stream tags (see [`crate::seeding`]).
const STREAM_SUBSETS: u64 = 0x5b;
const STREAM_PAIRS: u64 = 0x9a;

/// Settings for the samplers and pass thresholds of the two checkers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagnosticsConfig {
    /// Random parameter subsets to draw.
    pub n_subsets: usize,
    /// Level-set pairs evaluated per subset.
    pub n_pairs: usize,
    /// Grid resolution per axis for residual scans.
    pub grid: usize,
    /// Premium discrepancy allowed on a level set before sufficiency fails.
    pub tol_modulable: f64,
    /// Residual allowed per structural condition.
    pub tol_condition: f64,
    /// Seed for subset and pair sampling.
    pub rng_seed: u64,
    /// Quadrature settings for every integral the checkers run.
    #[serde(skip)]
    pub quadrature: QuadratureConfig,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            n_subsets: 50,
            n_pairs: 20,
            grid: 15,
            tol_modulable: 1e-6,
            tol_condition: 1e-5,
            rng_seed: 0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subsets == 0 || self.n_pairs == 0 {
            return Err(Error::Invalid(
                "diagnostics needs at least one subset and one pair".into(),
            ));
        }
        if self.grid < 2 {
            return Err(Error::Invalid(
                "diagnostics grids need at least two points per axis".into(),
            ));
        }
        if !(self.tol_modulable > 0.0) || !(self.tol_condition > 0.0) {
            return Err(Error::Invalid(
                "diagnostics tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A premium discrepancy on a level set: two criteria points with equal scale
/// value whose subset premiums differ.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub omega: SubsetOmega,
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub premium_first: f64,
    pub premium_second: f64,
    pub discrepancy: f64,
}

/// Verdict of the direct level-set premium comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ModulabilitySection {
    pub pass: bool,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub worst: Option<Witness>,
    /// Level-set comparisons that produced a premium pair.
    pub evaluated: usize,
    /// Comparisons skipped because a restriction carried no usable mass.
    pub skipped: usize,
}

/// A representative score-difference value at one criteria point.
#[derive(Debug, Clone, Serialize)]
pub struct PsiSample {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Numeric residuals for the structural sufficiency conditions.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionSection {
    /// max |d^2 f / dx dy|: zero iff the scale splits as a(x) + b(y).
    pub semilinearity_residual: f64,
    /// Largest normalized 2x2 minor of the mixed log-derivative matrix of the
    /// x criterion: zero iff the matrix is rank one, the exponential-family
    /// signature.
    pub expfam_residual_x: f64,
    pub expfam_residual_y: f64,
    /// max |d psi / d theta|: the score difference must not vary with theta.
    pub psi_theta_residual: f64,
    /// max |phi|: normalized mean partials must agree across the two criteria.
    pub phi_residual: f64,
    /// max |phi| plus the worst per-theta variance of (dm/dx)/(df/dx) over
    /// criteria points: zero iff the mean is affine in the scale.
    pub mean_affine_residual: f64,
    pub tolerance: f64,
    pub semilinearity_pass: bool,
    pub expfam_pass: bool,
    pub psi_theta_pass: bool,
    pub phi_pass: bool,
    pub mean_affine_pass: bool,
    pub all_pass: bool,
    /// Representative psi values on a coarse criteria grid (the level-set
    /// slope lambda, which may vary with the criteria point).
    pub psi_lambda: Vec<PsiSample>,
    /// F evaluations on sampled subsets and criteria points.
    pub f_values: Vec<f64>,
    /// Fraction of grid points skipped because a scale partial vanished.
    pub skipped_fraction: f64,
}

/// Combined report; each checker fills its own section.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub modulability: Option<ModulabilitySection>,
    pub conditions: Option<ConditionSection>,
}

/// Scale partials at a criteria point, rejecting vanishing denominators.
fn scale_partials(scn: &Scenario, x: f64, y: f64) -> Result<(f64, f64)> {
    let fx = scn.scale.dx(x, y)?;
    if fx.abs() < PARTIAL_FLOOR {
        return Err(Error::DivergentPartial { axis: 'x', x, y });
    }
    let fy = scn.scale.dy(x, y)?;
    if fy.abs() < PARTIAL_FLOOR {
        return Err(Error::DivergentPartial { axis: 'y', x, y });
    }
    Ok((fx, fy))
}

/// Score difference psi(theta, x, y): the x-criterion score over df/dx minus
/// the y-criterion score over df/dy. For a sufficient scale this is constant
/// in theta at every criteria point.
pub fn psi(scn: &Scenario, theta: f64, x: f64, y: f64) -> Result<f64> {
    let (fx, fy) = scale_partials(scn, x, y)?;
    Ok(scn.family_x.log_density_dx(x, theta)? / fx - scn.family_y.log_density_dx(y, theta)? / fy)
}

/// d psi / d theta, from the closed mixed log-derivatives.
pub fn psi_dtheta(scn: &Scenario, theta: f64, x: f64, y: f64) -> Result<f64> {
    let (fx, fy) = scale_partials(scn, x, y)?;
    Ok(scn.family_x.mixed_log_derivative(x, theta)? / fx
        - scn.family_y.mixed_log_derivative(y, theta)? / fy)
}

/// Mean-gradient mismatch phi(theta, x, y) = (dm/dx)/(df/dx) - (dm/dy)/(df/dy).
pub fn phi(scn: &Scenario, theta: f64, x: f64, y: f64) -> Result<f64> {
    let (fx, fy) = scale_partials(scn, x, y)?;
    Ok(scn.mean.dx(theta, x, y)? / fx - scn.mean.dy(theta, x, y)? / fy)
}

/// Which theta-pointwise term plays the role of the mean-gradient correction
/// in the F integrand.
#[derive(Clone, Copy)]
enum FCorrection {
    /// phi(theta, x, y) — the two-criteria functional.
    MeanMismatch,
    /// (df/dx)^{-1} dm/dx — the single-criterion variant.
    ScoreX,
}

/// Per-node arrays for one quadrature order over a subset: shared by the
/// factorized and tensor evaluations of F.
struct FNodes {
    /// Quadrature weight times the shifted sigma weight, per node.
    wsigma: Vec<f64>,
    mean: Vec<f64>,
    psi: Vec<f64>,
    correction: Vec<f64>,
}

fn build_f_nodes(
    scn: &Scenario,
    intervals: &[Interval],
    order: usize,
    shift: f64,
    x: f64,
    y: f64,
    correction: FCorrection,
) -> Result<FNodes> {
    let (fx, fy) = scale_partials(scn, x, y)?;
    let rule = gauss_legendre(order);
    let mut out = FNodes {
        wsigma: Vec::with_capacity(order * intervals.len()),
        mean: Vec::with_capacity(order * intervals.len()),
        psi: Vec::with_capacity(order * intervals.len()),
        correction: Vec::with_capacity(order * intervals.len()),
    };
    for iv in intervals {
        let mid = 0.5 * (iv.lo + iv.hi);
        let half = 0.5 * (iv.hi - iv.lo);
        for (&xi, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            let t = mid + half * xi;
            let lsw = bayes::log_sigma_weight(scn, t, x, y)?;
            out.wsigma.push(w * half * (lsw - shift).exp());
            out.mean.push(scn.mean.value(t, x, y)?);
            out.psi
                .push(scn.family_x.log_density_dx(x, t)? / fx
                    - scn.family_y.log_density_dx(y, t)? / fy);
            out.correction.push(match correction {
                FCorrection::MeanMismatch => {
                    scn.mean.dx(t, x, y)? / fx - scn.mean.dy(t, x, y)? / fy
                }
                FCorrection::ScoreX => scn.mean.dx(t, x, y)? / fx,
            });
        }
    }
    Ok(out)
}

impl FNodes {
    /// (scaled F, scaled mass): F as A B - C D on this node set.
    fn factorized(&self) -> (f64, f64) {
        let mut a = 0.0f64;
        let mut b = 0.0f64;
        let mut c = 0.0f64;
        let mut d = 0.0f64;
        for i in 0..self.wsigma.len() {
            let ws = self.wsigma[i];
            a += ws * self.mean[i];
            b += ws * self.psi[i];
            c += ws * (self.mean[i] * self.psi[i] + self.correction[i]);
            d += ws;
        }
        (a * b - c * d, d)
    }

    /// (scaled F, scaled mass): the same quantity as the explicit tensor
    /// double sum of m(theta)[psi(theta1) - psi(theta)] - correction(theta).
    fn tensor(&self) -> (f64, f64) {
        let n = self.wsigma.len();
        let mut total = 0.0f64;
        let mut d = 0.0f64;
        for i in 0..n {
            let mut row = 0.0f64;
            for j in 0..n {
                row += self.wsigma[j]
                    * (self.mean[i] * (self.psi[j] - self.psi[i]) - self.correction[i]);
            }
            total += self.wsigma[i] * row;
            d += self.wsigma[i];
        }
        (total, d)
    }
}

/// Shared refinement driver for the F functionals. Both evaluation styles
/// walk the same order ladder and stop on the same scalar criterion, so for
/// a given input they settle on identical node sets.
fn refine_f(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
    correction: FCorrection,
    tensor: bool,
) -> Result<f64> {
    scn.check_subset(omega)?;
    let lsw = |t: f64| bayes::log_sigma_weight(scn, t, x, y);
    let shift = probe_max(&lsw, omega.intervals(), 32)?;
    if !shift.is_finite() {
        return Err(Error::ZeroMass { x, y });
    }
    let eval = |order: usize| -> Result<(f64, f64)> {
        let nodes = build_f_nodes(scn, omega.intervals(), order, shift, x, y, correction)?;
        Ok(if tensor {
            nodes.tensor()
        } else {
            nodes.factorized()
        })
    };
    let check_mass = |mass_scaled: f64| -> Result<()> {
        if !(mass_scaled > 0.0) || mass_scaled.ln() + shift < MASS_FLOOR.ln() {
            return Err(Error::ZeroMass { x, y });
        }
        Ok(())
    };
    // F carries two powers of the sigma weight, hence twice the shift.
    let unscale = (2.0 * shift).exp();

    let base = cfg.nodes_per_interval;
    match cfg.refinement {
        None => {
            let (f, mass) = eval(base)?;
            check_mass(mass)?;
            Ok(f * unscale)
        }
        Some(refine) => {
            let (mut prev, _) = eval(base)?;
            let mut order = base;
            let mut last_change = f64::INFINITY;
            for _ in 0..refine.max_doublings {
                order *= 2;
                let (next, mass) = eval(order)?;
                let scale = next.abs().max(prev.abs()).max(1.0);
                last_change = (next - prev).abs() / scale;
                if last_change <= refine.rel_tol {
                    check_mass(mass)?;
                    return Ok(next * unscale);
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

/// The sufficiency functional F(omega; x, y) in factorized form A B - C D.
pub fn f_factorized(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    refine_f(scn, omega, x, y, cfg, FCorrection::MeanMismatch, false)
}

/// The same functional computed as an explicit double integral over
/// omega x omega, without the factorization.
pub fn f_direct(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    refine_f(scn, omega, x, y, cfg, FCorrection::MeanMismatch, true)
}

/// The single-criterion variant F1, for means that depend on theta and x
/// only: A' B - C' D with A' = ∫ m dσ and
/// C' = ∫ (m psi + (df/dx)^{-1} dm/dx) dσ.
///
/// Rejects means with any y-dependence (checked numerically on a grid).
pub fn f1(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let dy_max = scn
        .mean
        .max_abs_dy(scn.prior.support(), &scn.bounds, 9)?;
    if dy_max > 1e-9 {
        return Err(Error::MeanShape(format!(
            "the single-criterion functional needs a mean free of the second criterion; \
             found |dm/dy| up to {dy_max:.3e}"
        )));
    }
    refine_f(scn, omega, x, y, cfg, FCorrection::ScoreX, false)
}

/// Draw `n` random parameter subsets, each a union of one to three disjoint
/// intervals no shorter than 5% of the support. Deterministic per seed.
pub fn sample_subsets(support: Interval, n: usize, rng_seed: u64) -> Vec<SubsetOmega> {
    let mut rng = seeding::rng_from(rng_seed, STREAM_SUBSETS, 0);
    let min_len = 0.05 * support.length();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pieces = rng.gen_range(1..=3usize);
        let mut subset = None;
        for _ in 0..100 {
            let mut intervals = Vec::with_capacity(pieces);
            for _ in 0..pieces {
                let lo = rng.gen_range(support.lo..support.hi - min_len);
                let len = rng.gen_range(min_len..=support.hi - lo);
                intervals.push(Interval::new(lo, lo + len).expect("lo < hi by construction"));
            }
            if let Ok(s) = SubsetOmega::new(intervals) {
                subset = Some(s);
                break;
            }
        }
        out.push(subset.unwrap_or_else(|| {
            // A single interval can always be placed.
            let lo = rng.gen_range(support.lo..support.hi - min_len);
            let len = rng.gen_range(min_len..=support.hi - lo);
            SubsetOmega::new(vec![Interval::new(lo, lo + len).expect("lo < hi")])
                .expect("single interval is always a valid subset")
        }));
    }
    out
}

/// Draw `n` pairs of criteria points lying on a common level set of the
/// scale: sample the first point and the second x, then bisect the scale in y
/// to match the first point's value. Deterministic per seed.
pub fn level_set_pairs(
    scale: &ScaleFunction,
    bounds: &CriteriaBox,
    n: usize,
    rng_seed: u64,
) -> Result<Vec<((f64, f64), (f64, f64))>> {
    let mut rng = seeding::rng_from(rng_seed, STREAM_PAIRS, 0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut found = None;
        'attempts: for _ in 0..ATTEMPTS_PER_PAIR {
            let x1 = rng.gen_range(bounds.x.lo..=bounds.x.hi);
            let y1 = rng.gen_range(bounds.y.lo..=bounds.y.hi);
            let x2 = rng.gen_range(bounds.x.lo..=bounds.x.hi);
            let target = scale.value(x1, y1)?;

            let mut lo = bounds.y.lo;
            let mut hi = bounds.y.hi;
            let g_lo = scale.value(x2, lo)? - target;
            let g_hi = scale.value(x2, hi)? - target;
            if g_lo == 0.0 {
                hi = lo;
            } else if g_hi == 0.0 {
                lo = hi;
            } else if g_lo.signum() == g_hi.signum() {
                continue 'attempts;
            } else {
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    let g_mid = scale.value(x2, mid)? - target;
                    if g_mid == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if g_mid.signum() == g_lo.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let y2 = 0.5 * (lo + hi);
            if (scale.value(x2, y2)? - target).abs() > LEVEL_SET_TOL {
                continue 'attempts;
            }
            if (x1, y1) == (x2, y2) {
                continue 'attempts;
            }
            found = Some(((x1, y1), (x2, y2)));
            break;
        }
        match found {
            Some(pair) => out.push(pair),
            None => {
                return Err(Error::LevelSetExhausted {
                    found: out.len(),
                    requested: n,
                })
            }
        }
    }
    Ok(out)
}

/// Test sufficiency by definition: premiums must agree on scale level sets
/// for every sampled subset.
pub fn check_modulability(scn: &Scenario, cfg: &DiagnosticsConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let subsets = sample_subsets(scn.prior.support(), cfg.n_subsets, cfg.rng_seed);
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut max_discrepancy = 0.0f64;
    let mut worst: Option<Witness> = None;

    for (index, omega) in subsets.iter().enumerate() {
        let pairs = level_set_pairs(
            &scn.scale,
            &scn.bounds,
            cfg.n_pairs,
            seeding::mixed_seed(cfg.rng_seed, STREAM_PAIRS, index as u64),
        )?;
        for ((x1, y1), (x2, y2)) in pairs {
            let first = bayes::posterior_expectation(scn, omega, x1, y1, &cfg.quadrature);
            let second = bayes::posterior_expectation(scn, omega, x2, y2, &cfg.quadrature);
            match (first, second) {
                (Ok(p1), Ok(p2)) => {
                    evaluated += 1;
                    let discrepancy = (p1 - p2).abs();
                    if discrepancy > max_discrepancy {
                        max_discrepancy = discrepancy;
                        worst = Some(Witness {
                            omega: omega.clone(),
                            first: (x1, y1),
                            second: (x2, y2),
                            premium_first: p1,
                            premium_second: p2,
                            discrepancy,
                        });
                    }
                }
                (Err(Error::ZeroMass { .. }), _) | (_, Err(Error::ZeroMass { .. })) => {
                    skipped += 1;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
    }

    let total = evaluated + skipped;
    if skipped * 2 > total {
        return Err(Error::InsufficientCoverage { skipped, total });
    }
    Ok(DiagnosticsReport {
        modulability: Some(ModulabilitySection {
            pass: max_discrepancy <= cfg.tol_modulable,
            max_discrepancy,
            tolerance: cfg.tol_modulable,
            worst,
            evaluated,
            skipped,
        }),
        conditions: None,
    })
}

/// Largest normalized 2x2 minor of a matrix, zero for matrices that are rank
/// one (or identically zero). Normalization by the largest entry magnitude
/// makes the residual scale-free.
fn rank_one_residual(m: &[Vec<f64>]) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let mut max_entry = 0.0f64;
    for row in m {
        for &v in row {
            max_entry = max_entry.max(v.abs());
        }
    }
    if max_entry == 0.0 {
        return 0.0;
    }
    let mut max_minor = 0.0f64;
    for i in 0..rows {
        for k in i + 1..rows {
            for j in 0..cols {
                for l in j + 1..cols {
                    let minor = m[i][j] * m[k][l] - m[i][l] * m[k][j];
                    max_minor = max_minor.max(minor.abs());
                }
            }
        }
    }
    max_minor / max_entry
}

/// Evaluate the structural sufficiency conditions as grid residuals.
pub fn check_theorem_conditions(
    scn: &Scenario,
    cfg: &DiagnosticsConfig,
) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let g = cfg.grid;
    let thetas = scn.prior.support().points(g);
    let xs = scn.bounds.x.points(g);
    let ys = scn.bounds.y.points(g);

    // Condition: the scale splits additively across the criteria.
    let mut semilinearity_residual = 0.0f64;
    for &x in &xs {
        for &y in &ys {
            semilinearity_residual = semilinearity_residual.max(scn.scale.dxdy(x, y)?.abs());
        }
    }

    // Condition: each criterion density has the exponential-family signature,
    // a rank-one mixed log-derivative surface.
    let mut mx = vec![vec![0.0f64; xs.len()]; thetas.len()];
    let mut my = vec![vec![0.0f64; ys.len()]; thetas.len()];
    for (i, &t) in thetas.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            mx[i][j] = scn.family_x.mixed_log_derivative(x, t)?;
        }
        for (j, &y) in ys.iter().enumerate() {
            my[i][j] = scn.family_y.mixed_log_derivative(y, t)?;
        }
    }
    let expfam_residual_x = rank_one_residual(&mx);
    let expfam_residual_y = rank_one_residual(&my);

    // Conditions over the full (theta, x, y) grid: psi constant in theta,
    // phi vanishing, and the mean affine in the scale (phi plus the spread of
    // the normalized mean slope across criteria points at fixed theta).
    let mut psi_theta_residual = 0.0f64;
    let mut phi_residual = 0.0f64;
    let mut skipped = 0usize;
    let mut total = 0usize;
    let mut worst_slope_variance = 0.0f64;
    for &t in &thetas {
        let mut slope_sum = 0.0f64;
        let mut slope_sq_sum = 0.0f64;
        let mut slope_count = 0usize;
        for &x in &xs {
            for &y in &ys {
                total += 1;
                let (fx, _fy) = match scale_partials(scn, x, y) {
                    Ok(p) => p,
                    Err(Error::DivergentPartial { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                psi_theta_residual = psi_theta_residual.max(psi_dtheta(scn, t, x, y)?.abs());
                phi_residual = phi_residual.max(phi(scn, t, x, y)?.abs());
                let slope = scn.mean.dx(t, x, y)? / fx;
                slope_sum += slope;
                slope_sq_sum += slope * slope;
                slope_count += 1;
            }
        }
        if slope_count > 0 {
            let mean = slope_sum / slope_count as f64;
            let variance = (slope_sq_sum / slope_count as f64 - mean * mean).max(0.0);
            worst_slope_variance = worst_slope_variance.max(variance);
        }
    }
    let mean_affine_residual = phi_residual + worst_slope_variance;
    let skipped_fraction = skipped as f64 / total as f64;

    // Representative psi values at the central theta on a coarse criteria
    // grid: the level-set slope, possibly varying across criteria points.
    let t_mid = scn.prior.support().midpoint();
    let mut psi_lambda = Vec::new();
    for &x in &scn.bounds.x.points(3) {
        for &y in &scn.bounds.y.points(3) {
            match psi(scn, t_mid, x, y) {
                Ok(v) => psi_lambda.push(PsiSample { x, y, psi: v }),
                Err(Error::DivergentPartial { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }

    // F on a few sampled subsets and coarse criteria points, for the record.
    let mut f_values = Vec::new();
    for omega in &sample_subsets(scn.prior.support(), 3, cfg.rng_seed) {
        for &x in &scn.bounds.x.points(3) {
            for &y in &scn.bounds.y.points(3) {
                match f_factorized(scn, omega, x, y, &cfg.quadrature) {
                    Ok(v) => f_values.push(v),
                    Err(Error::DivergentPartial { .. }) | Err(Error::ZeroMass { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let tol = cfg.tol_condition;
    let semilinearity_pass = semilinearity_residual <= tol;
    let expfam_pass = expfam_residual_x <= tol && expfam_residual_y <= tol;
    let psi_theta_pass = psi_theta_residual <= tol;
    let phi_pass = phi_residual <= tol;
    let mean_affine_pass = mean_affine_residual <= tol;
    Ok(DiagnosticsReport {
        modulability: None,
        conditions: Some(ConditionSection {
            semilinearity_residual,
            expfam_residual_x,
            expfam_residual_y,
            psi_theta_residual,
            phi_residual,
            mean_affine_residual,
            tolerance: tol,
            semilinearity_pass,
            expfam_pass,
            psi_theta_pass,
            phi_pass,
            mean_affine_pass,
            all_pass: semilinearity_pass
                && expfam_pass
                && psi_theta_pass
                && phi_pass
                && mean_affine_pass,
            psi_lambda,
            f_values,
            skipped_fraction,
        }),
    })
}
