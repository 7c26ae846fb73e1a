//! Scenario model: the parameter prior, the two criterion densities, the
//! individual mean, the tariff scale, and the criteria box they live on.
//!
//! A scenario describes a pool where each member carries a latent parameter
//! theta with two observable criteria x and y, conditionally independent with
//! densities g(x|theta) and h(y|theta). Premium and diagnostic machinery in
//! the other modules only ever touches the model through the evaluation
//! methods here, all of which are pure and error out (rather than returning
//! NaN) when asked for something undefined.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureConfig};
use crate::registry::{Function2Handle, Function3Handle, FunctionHandle};

/// A closed, finite, non-degenerate interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!(
                "interval bounds must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(Error::Invalid(format!(
                "interval must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    /// `n` evenly spaced points including both endpoints (`n >= 2`).
    pub fn points(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "grid needs at least two points");
        let step = self.length() / (n - 1) as f64;
        (0..n).map(|i| self.lo + step * i as f64).collect()
    }
}

/// A finite union of pairwise disjoint parameter intervals, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetOmega {
    intervals: Vec<Interval>,
}

impl SubsetOmega {
    /// Validates and sorts the intervals; they must be non-empty, finite and
    /// pairwise disjoint (touching endpoints count as overlap).
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Invalid("subset needs at least one interval".into()));
        }
        intervals.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite bounds"));
        for pair in intervals.windows(2) {
            if pair[1].lo <= pair[0].hi {
                return Err(Error::Invalid(format!(
                    "subset intervals overlap: [{}, {}] and [{}, {}]",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(SubsetOmega { intervals })
    }

    /// The whole support as a single interval.
    pub fn full(support: Interval) -> Self {
        SubsetOmega {
            intervals: vec![support],
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn within(&self, support: &Interval) -> bool {
        self.intervals.iter().all(|iv| support.contains_interval(iv))
    }
}

/// The rectangle of criterion values on which premiums, diagnostics and
/// simulations operate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriteriaBox {
    pub x: Interval,
    pub y: Interval,
}

/// Prior density of the latent parameter, renormalized at construction so it
/// integrates to one over its support.
#[derive(Debug, Clone)]
pub struct ThetaPrior {
    density: FunctionHandle,
    support: Interval,
    log_norm: f64,
}

impl ThetaPrior {
    pub fn new(density: FunctionHandle, support: Interval) -> Result<Self> {
        // Reject negative densities on a probe grid before integrating.
        for t in support.points(257) {
            let v = density.value(t)?;
            if v < 0.0 {
                return Err(Error::Invalid(format!(
                    "prior density is negative at theta = {t} (value {v})"
                )));
            }
        }
        let cfg = QuadratureConfig::default();
        let z = quadrature::integrate_interval(|t| density.value(t), support, &cfg)?;
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Invalid(format!(
                "prior density has non-positive total mass {z} on its support"
            )));
        }
        Ok(ThetaPrior {
            density,
            support,
            log_norm: z.ln(),
        })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    /// Normalized prior density. Zero outside the support is the caller's
    /// business: evaluation outside the support is an error.
    pub fn density(&self, theta: f64) -> Result<f64> {
        Ok(self.log_density(theta)?.exp())
    }

    /// ln of the normalized density; `-inf` where the density vanishes.
    pub fn log_density(&self, theta: f64) -> Result<f64> {
        if !self.support.contains(theta) {
            return Err(Error::Evaluation(format!(
                "prior evaluated outside its support at theta = {theta}"
            )));
        }
        let v = self.density.value(theta)?;
        if v < 0.0 {
            return Err(Error::Evaluation(format!(
                "prior density is negative at theta = {theta}"
            )));
        }
        Ok(v.ln() - self.log_norm)
    }
}

/// Location families available as ready-made criterion densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocationFamily {
    Gaussian,
    Cauchy,
}

/// How an exponential-family density obtains its normalizer alpha(theta) =
/// exp(-log_normalizer(theta)).
#[derive(Debug, Clone)]
pub enum LogNormalizer {
    /// Closed form supplied as a registry function of theta.
    Closed(FunctionHandle),
    /// Computed on demand by quadrature over the support and memoized per
    /// theta. The cache is shared across clones and safe for concurrent
    /// readers; entries depend only on theta, so population order and thread
    /// count cannot change results.
    Numeric {
        cache: Arc<RwLock<HashMap<u64, f64>>>,
        quadrature: QuadratureConfig,
    },
}

impl LogNormalizer {
    pub fn numeric() -> Self {
        LogNormalizer::Numeric {
            cache: Arc::new(RwLock::new(HashMap::new())),
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// A conditional criterion density, truncated to a closed support interval.
#[derive(Debug, Clone)]
pub enum DensityFamily {
    /// alpha(theta) * carrier(x) * exp(natural_param(theta) * statistic(x)).
    ExponentialFamily {
        carrier: FunctionHandle,
        statistic: FunctionHandle,
        natural_param: FunctionHandle,
        log_normalizer: LogNormalizer,
        support: Interval,
    },
    /// A location family centred at theta with a fixed positive scale.
    NamedLocation {
        family: LocationFamily,
        scale: f64,
        support: Interval,
    },
    /// Arbitrary log-density l(x, theta) from the bivariate registry.
    Custom {
        log_density: Function2Handle,
        support: Interval,
    },
}

impl DensityFamily {
    pub fn named_location(family: LocationFamily, scale: f64, support: Interval) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Invalid(format!(
                "location-family scale must be a positive finite number, got {scale}"
            )));
        }
        Ok(DensityFamily::NamedLocation {
            family,
            scale,
            support,
        })
    }

    pub fn exponential_family(
        carrier: FunctionHandle,
        statistic: FunctionHandle,
        natural_param: FunctionHandle,
        log_normalizer: LogNormalizer,
        support: Interval,
    ) -> Result<Self> {
        Ok(DensityFamily::ExponentialFamily {
            carrier,
            statistic,
            natural_param,
            log_normalizer,
            support,
        })
    }

    pub fn custom(log_density: Function2Handle, support: Interval) -> Self {
        DensityFamily::Custom {
            log_density,
            support,
        }
    }

    pub fn support(&self) -> Interval {
        match self {
            DensityFamily::ExponentialFamily { support, .. }
            | DensityFamily::NamedLocation { support, .. }
            | DensityFamily::Custom { support, .. } => *support,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DensityFamily::ExponentialFamily { .. } => "exponential_family",
            DensityFamily::NamedLocation { .. } => "named_location",
            DensityFamily::Custom { .. } => "custom",
        }
    }

    fn check_in_support(&self, x: f64, theta: f64) -> Result<()> {
        if !self.support().contains(x) {
            return Err(Error::Evaluation(format!(
                "{} density evaluated outside its support at (x, theta) = ({x}, {theta})",
                self.kind_name()
            )));
        }
        Ok(())
    }

    fn log_partition(&self, theta: f64) -> Result<f64> {
        match self {
            DensityFamily::ExponentialFamily { log_normalizer, .. } => match log_normalizer {
                LogNormalizer::Closed(h) => h.value(theta),
                LogNormalizer::Numeric { cache, quadrature: cfg } => {
                    let key = theta.to_bits();
                    if let Some(&v) = cache.read().expect("normalizer cache poisoned").get(&key) {
                        return Ok(v);
                    }
                    let v = quadrature::expfam_log_partition(self, theta, cfg)?;
                    cache
                        .write()
                        .expect("normalizer cache poisoned")
                        .insert(key, v);
                    Ok(v)
                }
            },
            _ => unreachable!("log_partition is only called for exponential families"),
        }
    }

    /// ln of the conditional density at (x, theta). Fails (never NaN) outside
    /// the support or wherever the density is not strictly positive.
    pub fn log_density(&self, x: f64, theta: f64) -> Result<f64> {
        self.check_in_support(x, theta)?;
        let v = match self {
            DensityFamily::ExponentialFamily {
                carrier,
                statistic,
                natural_param,
                ..
            } => {
                let log_carrier = carrier.log_value(x)?;
                let log_z = self.log_partition(theta)?;
                log_carrier + natural_param.value(theta)? * statistic.value(x)? - log_z
            }
            DensityFamily::NamedLocation { family, scale, .. } => {
                let u = (x - theta) / scale;
                match family {
                    LocationFamily::Gaussian => {
                        -0.5 * u * u - 0.918_938_533_204_672_8 - scale.ln()
                    }
                    LocationFamily::Cauchy => {
                        -(std::f64::consts::PI * scale).ln() - u.mul_add(u, 1.0).ln()
                    }
                }
            }
            DensityFamily::Custom { log_density, .. } => log_density.value(x, theta),
        };
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Evaluation(format!(
                "{} log-density is undefined at (x, theta) = ({x}, {theta})",
                self.kind_name()
            )));
        }
        if v == f64::NEG_INFINITY {
            return Err(Error::Evaluation(format!(
                "{} density vanishes at (x, theta) = ({x}, {theta}); densities must stay positive on their support",
                self.kind_name()
            )));
        }
        Ok(v)
    }

    /// Conditional density value; the exponential of [`log_density`].
    pub fn density(&self, x: f64, theta: f64) -> Result<f64> {
        Ok(self.log_density(x, theta)?.exp())
    }

    /// d/dx ln density — the criterion score used by the scale diagnostics.
    pub fn log_density_dx(&self, x: f64, theta: f64) -> Result<f64> {
        self.check_in_support(x, theta)?;
        let v = match self {
            DensityFamily::ExponentialFamily {
                carrier,
                statistic,
                natural_param,
                ..
            } => carrier.log_derivative(x)? + natural_param.value(theta)? * statistic.d1(x)?,
            DensityFamily::NamedLocation { family, scale, .. } => {
                let u = (x - theta) / scale;
                match family {
                    LocationFamily::Gaussian => -u / scale,
                    LocationFamily::Cauchy => -2.0 * u / (scale * (1.0 + u * u)),
                }
            }
            DensityFamily::Custom { log_density, .. } => log_density.du(x, theta),
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "{} score d/dx is non-finite at (x, theta) = ({x}, {theta})",
                self.kind_name()
            )));
        }
        Ok(v)
    }

    /// d^2/(dtheta dx) ln density. For exponential families this collapses to
    /// natural_param'(theta) * statistic'(x), which is exactly the rank-one
    /// structure the separability diagnostic tests for.
    pub fn mixed_log_derivative(&self, x: f64, theta: f64) -> Result<f64> {
        self.check_in_support(x, theta)?;
        let v = match self {
            DensityFamily::ExponentialFamily {
                statistic,
                natural_param,
                ..
            } => natural_param.d1(theta)? * statistic.d1(x)?,
            DensityFamily::NamedLocation { family, scale, .. } => {
                let u = (x - theta) / scale;
                match family {
                    LocationFamily::Gaussian => 1.0 / (scale * scale),
                    LocationFamily::Cauchy => {
                        let one_plus = 1.0 + u * u;
                        2.0 * (1.0 - u * u) / (scale * scale * one_plus * one_plus)
                    }
                }
            }
            DensityFamily::Custom { log_density, .. } => log_density.dudv(x, theta),
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "{} mixed log-derivative is non-finite at (x, theta) = ({x}, {theta})",
                self.kind_name()
            )));
        }
        Ok(v)
    }
}

/// Expected individual cost m(theta, x, y).
#[derive(Debug, Clone)]
pub enum MeanFunction {
    /// c1(theta) + c2(theta) * (a(x) + b(y)) — affine in the declared
    /// semilinear statistic.
    AffineInScale {
        c1: FunctionHandle,
        c2: FunctionHandle,
        a: FunctionHandle,
        b: FunctionHandle,
    },
    /// Arbitrary trivariate registry function m(theta, x, y).
    Custom(Function3Handle),
}

impl MeanFunction {
    pub fn value(&self, theta: f64, x: f64, y: f64) -> Result<f64> {
        let v = match self {
            MeanFunction::AffineInScale { c1, c2, a, b } => {
                c1.value(theta)? + c2.value(theta)? * (a.value(x)? + b.value(y)?)
            }
            MeanFunction::Custom(m) => m.value(theta, x, y),
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "mean is non-finite at (theta, x, y) = ({theta}, {x}, {y})"
            )));
        }
        Ok(v)
    }

    pub fn dx(&self, theta: f64, x: f64, y: f64) -> Result<f64> {
        match self {
            MeanFunction::AffineInScale { c2, a, .. } => Ok(c2.value(theta)? * a.d1(x)?),
            MeanFunction::Custom(m) => Ok(m.dx(theta, x, y)),
        }
    }

    pub fn dy(&self, theta: f64, x: f64, y: f64) -> Result<f64> {
        match self {
            MeanFunction::AffineInScale { c2, b, .. } => Ok(c2.value(theta)? * b.d1(y)?),
            MeanFunction::Custom(m) => Ok(m.dy(theta, x, y)),
        }
    }

    /// True when the mean does not vary with theta anywhere on the grid:
    /// max over the grid of |m(theta, x, y) - m(theta_0, x, y)| <= tol.
    pub fn is_isotropic(
        &self,
        theta_support: Interval,
        bounds: &CriteriaBox,
        grid: usize,
        tol: f64,
    ) -> Result<bool> {
        let thetas = theta_support.points(grid.max(2));
        let xs = bounds.x.points(grid.max(2));
        let ys = bounds.y.points(grid.max(2));
        let theta0 = thetas[0];
        for &x in &xs {
            for &y in &ys {
                let base = self.value(theta0, x, y)?;
                for &t in &thetas[1..] {
                    if (self.value(t, x, y)? - base).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Largest |dm/dy| over a grid; used to decide whether a mean genuinely
    /// depends on the second criterion.
    pub fn max_abs_dy(
        &self,
        theta_support: Interval,
        bounds: &CriteriaBox,
        grid: usize,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for &t in &theta_support.points(grid.max(2)) {
            for &x in &bounds.x.points(grid.max(2)) {
                for &y in &bounds.y.points(grid.max(2)) {
                    worst = worst.max(self.dy(t, x, y)?.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// The tariff scale s(x, y): what the pricing authority is allowed to see.
#[derive(Debug, Clone)]
pub enum ScaleFunction {
    /// a(x) + b(y).
    Semilinear {
        a: FunctionHandle,
        b: FunctionHandle,
    },
    /// x * y.
    Product,
    /// Arbitrary bivariate registry function f(x, y).
    Custom(Function2Handle),
}

impl ScaleFunction {
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        let v = match self {
            ScaleFunction::Semilinear { a, b } => a.value(x)? + b.value(y)?,
            ScaleFunction::Product => x * y,
            ScaleFunction::Custom(f) => f.value(x, y),
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "scale is non-finite at (x, y) = ({x}, {y})"
            )));
        }
        Ok(v)
    }

    pub fn dx(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            ScaleFunction::Semilinear { a, .. } => a.d1(x),
            ScaleFunction::Product => Ok(y),
            ScaleFunction::Custom(f) => Ok(f.du(x, y)),
        }
    }

    pub fn dy(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            ScaleFunction::Semilinear { b, .. } => b.d1(y),
            ScaleFunction::Product => Ok(x),
            ScaleFunction::Custom(f) => Ok(f.dv(x, y)),
        }
    }

    /// Mixed second partial d^2 s/(dx dy); identically zero exactly when the
    /// scale splits into a(x) + b(y).
    pub fn dxdy(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            ScaleFunction::Semilinear { .. } => Ok(0.0),
            ScaleFunction::Product => Ok(1.0),
            ScaleFunction::Custom(f) => Ok(f.dudv(x, y)),
        }
    }
}

/// A complete pool description, validated at construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub prior: ThetaPrior,
    pub family_x: DensityFamily,
    pub family_y: DensityFamily,
    pub mean: MeanFunction,
    pub scale: ScaleFunction,
    pub bounds: CriteriaBox,
}

impl Scenario {
    pub fn new(
        prior: ThetaPrior,
        family_x: DensityFamily,
        family_y: DensityFamily,
        mean: MeanFunction,
        scale: ScaleFunction,
        bounds: CriteriaBox,
    ) -> Result<Self> {
        if !family_x.support().contains_interval(&bounds.x) {
            return Err(Error::Invalid(format!(
                "criteria box x-range [{}, {}] exceeds the x-family support [{}, {}]",
                bounds.x.lo,
                bounds.x.hi,
                family_x.support().lo,
                family_x.support().hi
            )));
        }
        if !family_y.support().contains_interval(&bounds.y) {
            return Err(Error::Invalid(format!(
                "criteria box y-range [{}, {}] exceeds the y-family support [{}, {}]",
                bounds.y.lo,
                bounds.y.hi,
                family_y.support().lo,
                family_y.support().hi
            )));
        }

        let scn = Scenario {
            prior,
            family_x,
            family_y,
            mean,
            scale,
            bounds,
        };
        scn.smoke_check()?;
        Ok(scn)
    }

    /// Cheap construction-time sweep: the scale must vary on the box, and
    /// densities / mean must evaluate finitely on a coarse grid.
    fn smoke_check(&self) -> Result<()> {
        let xs = self.bounds.x.points(21);
        let ys = self.bounds.y.points(21);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &xs {
            for &y in &ys {
                let v = self.scale.value(x, y)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi - lo <= 1e-9 {
            return Err(Error::Invalid(
                "scale is constant on the criteria box; a tariff scale must discriminate".into(),
            ));
        }

        let thetas = self.prior.support().points(7);
        for &t in &thetas {
            self.prior.log_density(t)?;
            for &x in &self.bounds.x.points(7) {
                self.family_x.log_density(x, t)?;
            }
            for &y in &self.bounds.y.points(7) {
                self.family_y.log_density(y, t)?;
            }
            for &x in &self.bounds.x.points(5) {
                for &y in &self.bounds.y.points(5) {
                    self.mean.value(t, x, y)?;
                    self.mean.dx(t, x, y)?;
                    self.mean.dy(t, x, y)?;
                }
            }
        }
        Ok(())
    }

    /// The whole prior support as a subset.
    pub fn full_support(&self) -> SubsetOmega {
        SubsetOmega::full(self.prior.support())
    }

    /// Validates that a subset lies inside the prior support.
    pub fn check_subset(&self, omega: &SubsetOmega) -> Result<()> {
        if !omega.within(&self.prior.support()) {
            return Err(Error::Invalid(format!(
                "subset leaves the prior support [{}, {}]",
                self.prior.support().lo,
                self.prior.support().hi
            )));
        }
        Ok(())
    }
}
