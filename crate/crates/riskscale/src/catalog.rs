//! Reference scenarios used across the test suite and shipped as JSON with
//! the command-line tool.
//!
//! The first two differ only in the scale: the sum scale keeps the premium a
//! function of x + y alone, the product scale breaks that. The Cauchy variant
//! leaves the exponential-family class entirely, the isotropic one has a
//! criterion-free mean, and the affine-mean variant exercises non-trivial
//! scale addends and mean coefficients.

use crate::model::{
    CriteriaBox, DensityFamily, Interval, LocationFamily, LogNormalizer, MeanFunction,
    ScaleFunction, Scenario, ThetaPrior,
};
use crate::registry::FunctionHandle;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).expect("catalog intervals are valid")
}

fn handle(form: &str, params: &[f64]) -> FunctionHandle {
    FunctionHandle::new(form, params).expect("catalog function forms are valid")
}

fn standard_prior() -> ThetaPrior {
    ThetaPrior::new(handle("gaussian_location", &[0.0, 1.0]), iv(-6.0, 6.0))
        .expect("standard normal prior is valid")
}

fn gaussian_family() -> DensityFamily {
    DensityFamily::named_location(LocationFamily::Gaussian, 1.0, iv(-6.0, 6.0))
        .expect("unit gaussian family is valid")
}

fn theta_mean() -> MeanFunction {
    MeanFunction::AffineInScale {
        c1: handle("identity", &[]),
        c2: handle("constant", &[0.0]),
        a: handle("identity", &[]),
        b: handle("identity", &[]),
    }
}

fn square_box() -> CriteriaBox {
    CriteriaBox {
        x: iv(-6.0, 6.0),
        y: iv(-6.0, 6.0),
    }
}

/// Standard normal prior, unit gaussian criteria, mean theta, scale x + y.
/// The workhorse: conjugate closed forms pin every pipeline stage.
pub fn scen_gaussian_sum() -> Scenario {
    Scenario::new(
        standard_prior(),
        gaussian_family(),
        gaussian_family(),
        theta_mean(),
        ScaleFunction::Semilinear {
            a: handle("identity", &[]),
            b: handle("identity", &[]),
        },
        square_box(),
    )
    .expect("gaussian sum scenario is valid")
}

/// Same densities and mean, but scale x * y: not semilinear, so premiums
/// are not modulable by the scale.
pub fn scen_gaussian_product() -> Scenario {
    Scenario::new(
        standard_prior(),
        gaussian_family(),
        gaussian_family(),
        theta_mean(),
        ScaleFunction::Product,
        square_box(),
    )
    .expect("gaussian product scenario is valid")
}

/// Cauchy criterion families: heavy tails, outside the exponential-family
/// class, so the density-side conditions fail while the scale stays
/// semilinear.
pub fn scen_cauchy_sum() -> Scenario {
    let cauchy = || {
        DensityFamily::named_location(LocationFamily::Cauchy, 1.0, iv(-6.0, 6.0))
            .expect("unit cauchy family is valid")
    };
    Scenario::new(
        standard_prior(),
        cauchy(),
        cauchy(),
        theta_mean(),
        ScaleFunction::Semilinear {
            a: handle("identity", &[]),
            b: handle("identity", &[]),
        },
        square_box(),
    )
    .expect("cauchy sum scenario is valid")
}

/// Constant mean 0.7 with a product scale: the premium ignores the criteria
/// entirely, so redistribution along any scale level set is trivially fair.
pub fn scen_isotropic() -> Scenario {
    Scenario::new(
        standard_prior(),
        gaussian_family(),
        gaussian_family(),
        MeanFunction::AffineInScale {
            c1: handle("constant", &[0.7]),
            c2: handle("constant", &[0.0]),
            a: handle("identity", &[]),
            b: handle("identity", &[]),
        },
        ScaleFunction::Product,
        square_box(),
    )
    .expect("isotropic scenario is valid")
}

/// Exponential-family y-criterion with statistic 2y, scale x + 2y, and mean
/// theta + theta^2 (x + 2y): affine in the scale with non-constant slope.
pub fn scen_affine_mean() -> Scenario {
    let family_y = DensityFamily::exponential_family(
        handle("gaussian_location", &[0.0, 1.0]),
        handle("linear", &[2.0, 0.0]),
        handle("identity", &[]),
        LogNormalizer::Closed(handle("polynomial", &[0.0, 0.0, 2.0])),
        iv(-10.0, 10.0),
    )
    .expect("affine mean y family is valid");
    Scenario::new(
        standard_prior(),
        gaussian_family(),
        family_y,
        MeanFunction::AffineInScale {
            c1: handle("identity", &[]),
            c2: handle("polynomial", &[0.0, 0.0, 1.0]),
            a: handle("identity", &[]),
            b: handle("linear", &[2.0, 0.0]),
        },
        ScaleFunction::Semilinear {
            a: handle("identity", &[]),
            b: handle("linear", &[2.0, 0.0]),
        },
        CriteriaBox {
            x: iv(-6.0, 6.0),
            y: iv(-10.0, 10.0),
        },
    )
    .expect("affine mean scenario is valid")
}

/// Every catalog scenario with its shipping name.
pub fn all() -> Vec<(&'static str, Scenario)> {
    vec![
        ("scen_gaussian_sum", scen_gaussian_sum()),
        ("scen_gaussian_product", scen_gaussian_product()),
        ("scen_cauchy_sum", scen_cauchy_sum()),
        ("scen_isotropic", scen_isotropic()),
        ("scen_affine_mean", scen_affine_mean()),
    ]
}
