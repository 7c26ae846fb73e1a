//! Credibility premiums on restricted parameter sets, and the diagnostics
//! that decide when a tariff scale can carry them.
//!
//! The model couples a latent risk parameter theta with two observable
//! criteria (x, y) through a prior, two conditional density families, a
//! conditional mean cost m(theta, x, y), and a tariff scale f(x, y). The
//! central question: does the Bayes premium depend on the criteria only
//! through the scale value, uniformly over restrictions of the parameter
//! set? [`diagnostics`] answers it two ways — by direct premium comparison
//! along scale level sets, and through closed-form structural residuals —
//! and [`redistribution`] measures what a scale that fails costs in practice:
//! systematic premium transfers between population segments.
//!
//! Numerical work runs on shared-node Gauss-Legendre quadrature with
//! log-space shifting, so narrow posteriors far in the tails stay stable.
//! Everything seeded is deterministic, including under parallel execution.

pub mod bayes;
pub mod catalog;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod redistribution;
mod seeding;
pub mod registry;

pub use error::{Error, Result};
pub use model::{
    CriteriaBox, DensityFamily, Interval, LocationFamily, LogNormalizer, MeanFunction,
    ScaleFunction, Scenario, SubsetOmega, ThetaPrior,
};
pub use quadrature::{QuadratureConfig, Refinement};
pub use registry::{Function2Handle, Function3Handle, FunctionHandle};

pub use bayes::{posterior_density, posterior_expectation, sigma_mass};
pub use diagnostics::{
    check_modulability, check_theorem_conditions, f1, f_direct, f_factorized, DiagnosticsConfig,
    DiagnosticsReport,
};
pub use redistribution::{
    assign_organisms, fit_scale_table, sample_population, simulate, AssignmentRule, ClaimModel,
    OrganismAssignment, PopulationConfig, PremiumRule, RedistributionOutcome, ScaleTable,
};
