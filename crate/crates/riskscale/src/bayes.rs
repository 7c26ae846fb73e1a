//! Posterior (credibility) functionals over parameter subsets.
//!
//! For an observed criteria pair (x, y) the joint weight over the latent
//! parameter is sigma(theta) = g(x | theta) h(y | theta) mu(theta). Premiums
//! and diagnostics need three derived quantities, each restricted to a subset
//! omega of the prior support:
//!
//! * the sigma mass  integral of sigma over omega,
//! * the posterior expectation of the mean  E[m(theta, x, y) | omega],
//! * the posterior density of theta on omega.
//!
//! All integrals run through the shared-node quadrature in [`crate::quadrature`]
//! after a log-space shift, so they neither overflow for steep densities nor
//! lose the algebraic relations between numerators and denominators.

use crate::error::{Error, Result};
use crate::model::{Scenario, SubsetOmega};
use crate::quadrature::{self, Integrand, QuadratureConfig};

/// Absolute floor on the sigma mass; below it a restriction is treated as
/// carrying no information and evaluation fails rather than dividing by a
/// denormal denominator.
pub const MASS_FLOOR: f64 = 1e-300;

/// How many evenly spaced probe points per interval feed the log-space shift.
const SHIFT_PROBE_POINTS: usize = 32;

/// ln sigma(theta) = ln g(x | theta) + ln h(y | theta) + ln mu(theta).
pub fn log_sigma_weight(scn: &Scenario, theta: f64, x: f64, y: f64) -> Result<f64> {
    Ok(scn.family_x.log_density(x, theta)?
        + scn.family_y.log_density(y, theta)?
        + scn.prior.log_density(theta)?)
}

/// The joint weight sigma(theta) itself.
pub fn sigma_weight(scn: &Scenario, theta: f64, x: f64, y: f64) -> Result<f64> {
    Ok(log_sigma_weight(scn, theta, x, y)?.exp())
}

/// Shift plus scaled mass over `omega`, shared by every functional here.
/// Returns `(shift, scaled_mass)` with true mass = `scaled_mass * e^shift`,
/// after rejecting restrictions whose mass underflows [`MASS_FLOOR`].
fn shifted_mass(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    scn.check_subset(omega)?;
    let lsw = |t: f64| log_sigma_weight(scn, t, x, y);
    let shift = quadrature::probe_max(&lsw, omega.intervals(), SHIFT_PROBE_POINTS)?;
    if !shift.is_finite() {
        return Err(Error::ZeroMass { x, y });
    }
    let mass_f = |t: f64| Ok((lsw(t)? - shift).exp());
    let scaled = quadrature::integrate_theta(mass_f, omega, cfg)?;
    check_mass(scaled, shift, x, y)?;
    Ok((shift, scaled))
}

fn check_mass(scaled: f64, shift: f64, x: f64, y: f64) -> Result<()> {
    if !(scaled > 0.0) || scaled.ln() + shift < MASS_FLOOR.ln() {
        return Err(Error::ZeroMass { x, y });
    }
    Ok(())
}

/// Total sigma mass of `omega` for the observation (x, y).
pub fn sigma_mass(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (shift, scaled) = shifted_mass(scn, omega, x, y, cfg)?;
    Ok(scaled * shift.exp())
}

/// The subset premium: expectation of the individual mean under the posterior
/// restricted to `omega`,
/// `integral of m sigma over omega / integral of sigma over omega`.
///
/// Numerator and denominator share one node set, so ratios of algebraically
/// related integrands cancel to rounding.
pub fn posterior_expectation(
    scn: &Scenario,
    omega: &SubsetOmega,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    scn.check_subset(omega)?;
    let lsw = |t: f64| log_sigma_weight(scn, t, x, y);
    let shift = quadrature::probe_max(&lsw, omega.intervals(), SHIFT_PROBE_POINTS)?;
    if !shift.is_finite() {
        return Err(Error::ZeroMass { x, y });
    }
    let mass_f = |t: f64| -> Result<f64> { Ok((lsw(t)? - shift).exp()) };
    let mean_f = |t: f64| -> Result<f64> { Ok(scn.mean.value(t, x, y)? * (lsw(t)? - shift).exp()) };
    let fs: [Integrand<'_>; 2] = [&mass_f, &mean_f];
    let got = quadrature::integrate_many(&fs, omega, cfg)?;
    check_mass(got[0], shift, x, y)?;
    Ok(got[1] / got[0])
}

/// Density of the restricted posterior at `theta`. Zero off `omega` (the
/// restriction carries no mass there); elsewhere
/// `sigma(theta) / integral of sigma over omega`.
pub fn posterior_density(
    scn: &Scenario,
    omega: &SubsetOmega,
    theta: f64,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    scn.check_subset(omega)?;
    if !omega.intervals().iter().any(|iv| iv.contains(theta)) {
        return Ok(0.0);
    }
    let (shift, scaled) = shifted_mass(scn, omega, x, y, cfg)?;
    let num = (log_sigma_weight(scn, theta, x, y)? - shift).exp();
    Ok(num / scaled)
}
