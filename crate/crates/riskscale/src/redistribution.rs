//! Population simulation: organisms sharing a pool under a fixed tariff.
//!
//! A population of individuals (theta, x, y, claim) is drawn from a scenario,
//! partitioned into k "organisms" (districts, insurers), and charged premiums
//! under one of three rules. Each organism's account compares what it
//! collected against what its members actually cost in expectation; the
//! imbalance measures the advantage or penalty the tariff hands that organism.
//!
//! Everything is deterministic per seed: individual draws use counter-based
//! generator derivation (see [`crate::seeding`]), aggregation walks members in
//! index order, and parallelism never reorders results.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::bayes;
use crate::error::{Error, Result};
use crate::model::{Interval, Scenario};
use crate::quadrature::{gauss_legendre, QuadratureConfig};
use crate::seeding;

/// RNG stream tags: individual draws and organism assignment never share
/// generator state.
const STREAM_POPULATION: u64 = 1;
const STREAM_ASSIGNMENT: u64 = 2;

/// Grid size of the inverse-CDF table used for every sampled coordinate.
const CDF_POINTS: usize = 1024;

/// Theta grid resolution for cached conditional-criterion tables.
const CONDITIONAL_NODES: usize = 64;

/// How claim costs relate to the individual mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ClaimModel {
    /// Claim equals m(theta, x, y) exactly; isolates structural distortion
    /// from claim noise.
    DeterministicMean,
    /// Gamma-distributed claim with mean m(theta, x, y) and the given
    /// coefficient of variation; requires a strictly positive mean.
    GammaNoise { cv: f64 },
}

/// Population size, seeding and claim behavior.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PopulationConfig {
    pub n_individuals: usize,
    pub rng_seed: u64,
    pub claim_model: ClaimModel,
    /// Build an inverse-CDF table per individual theta instead of
    /// conditioning on the nearest cached node. Slow; meant for verification
    /// runs of the cached sampler's bias.
    pub exact_conditional_sampling: bool,
}

impl PopulationConfig {
    pub fn new(n_individuals: usize, rng_seed: u64, claim_model: ClaimModel) -> Result<Self> {
        if n_individuals == 0 {
            return Err(Error::Invalid("population needs at least one individual".into()));
        }
        if let ClaimModel::GammaNoise { cv } = claim_model {
            if !(cv > 0.0) || !cv.is_finite() {
                return Err(Error::Invalid(format!(
                    "claim coefficient of variation must be positive and finite, got {cv}"
                )));
            }
        }
        Ok(PopulationConfig {
            n_individuals,
            rng_seed,
            claim_model,
            exact_conditional_sampling: false,
        })
    }
}

/// How the population is split into organisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssignmentRule {
    /// Independent uniform assignment, blind to everything.
    Random,
    /// Equal-count bands of the empirical theta quantiles.
    ThetaStratified,
    /// Equal-count bands of the empirical x quantiles.
    XStratified,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrganismAssignment {
    pub k: usize,
    pub rule: AssignmentRule,
}

impl OrganismAssignment {
    pub fn new(k: usize, rule: AssignmentRule) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("assignment needs at least one organism".into()));
        }
        Ok(OrganismAssignment { k, rule })
    }
}

/// How individual premiums are set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PremiumRule {
    /// Full-information Bayes premium: the posterior mean cost given (x, y)
    /// over the whole parameter support.
    GlobalBayes,
    /// A published tariff: premiums depend on (x, y) only through the scale,
    /// via a binned table fitted on the population itself.
    ScaleTable { bins: usize },
    /// One premium for everyone: the population mean of the Bayes premiums.
    Flat,
}

/// One sampled member of the pool.
#[derive(Debug, Clone, Copy)]
pub struct Individual {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    /// m(theta, x, y): the conditional expected claim cost.
    pub mean_cost: f64,
    pub claim: f64,
}

/// A tabulated CDF on a grid, built by per-panel quadrature, sampled by
/// binary search plus linear interpolation.
struct CdfTable {
    xs: Vec<f64>,
    /// cum[i] = mass of (-inf, xs[i]] within the table range; cum[0] = 0.
    cum: Vec<f64>,
}

impl CdfTable {
    fn build(density: &dyn Fn(f64) -> Result<f64>, range: Interval, points: usize) -> Result<Self> {
        let xs = range.points(points);
        let rule = gauss_legendre(8);
        let mut cum = Vec::with_capacity(points);
        cum.push(0.0);
        let mut running = 0.0f64;
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            let mut mass = 0.0f64;
            for (&xi, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
                let v = density(mid + half * xi)?;
                if !v.is_finite() {
                    return Err(Error::Tabulation(format!(
                        "density is non-finite near {} while tabulating a CDF",
                        mid + half * xi
                    )));
                }
                mass += wt * half * v;
            }
            if mass < 0.0 {
                return Err(Error::Tabulation(format!(
                    "CDF is non-monotone on [{}, {}]: the density integrates negatively there",
                    w[0], w[1]
                )));
            }
            running += mass;
            cum.push(running);
        }
        if !(running > 0.0) {
            return Err(Error::Tabulation(
                "density carries no mass over the tabulated range".into(),
            ));
        }
        Ok(CdfTable { xs, cum })
    }

    /// Inverse CDF at `u` in [0, 1).
    fn sample(&self, u: f64) -> f64 {
        let total = *self.cum.last().expect("non-empty table");
        let target = u.clamp(0.0, 1.0) * total;
        // Find the panel whose cumulative range contains the target.
        let mut lo = 0usize;
        let mut hi = self.cum.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cum[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let span = self.cum[hi] - self.cum[lo];
        if span <= 0.0 {
            return self.xs[lo];
        }
        let frac = (target - self.cum[lo]) / span;
        self.xs[lo] + frac * (self.xs[hi] - self.xs[lo])
    }
}

/// Inverse-CDF sampler for (theta, x, y) triples of a scenario. Criterion
/// draws are truncated to the scenario's criteria box — the operational
/// window every other module works on.
pub struct PopulationSampler {
    theta_table: CdfTable,
    theta_nodes: Vec<f64>,
    x_tables: Vec<CdfTable>,
    y_tables: Vec<CdfTable>,
    exact: bool,
}

impl PopulationSampler {
    pub fn new(scn: &Scenario, exact_conditional_sampling: bool) -> Result<Self> {
        let support = scn.prior.support();
        let theta_table = CdfTable::build(&|t| scn.prior.density(t), support, CDF_POINTS)?;
        let theta_nodes = support.points(CONDITIONAL_NODES);
        let mut x_tables = Vec::with_capacity(CONDITIONAL_NODES);
        let mut y_tables = Vec::with_capacity(CONDITIONAL_NODES);
        if !exact_conditional_sampling {
            for &t in &theta_nodes {
                x_tables.push(CdfTable::build(
                    &|x| scn.family_x.density(x, t),
                    scn.bounds.x,
                    CDF_POINTS,
                )?);
                y_tables.push(CdfTable::build(
                    &|y| scn.family_y.density(y, t),
                    scn.bounds.y,
                    CDF_POINTS,
                )?);
            }
        }
        Ok(PopulationSampler {
            theta_table,
            theta_nodes,
            x_tables,
            y_tables,
            exact: exact_conditional_sampling,
        })
    }

    fn nearest_node(&self, theta: f64) -> usize {
        let lo = self.theta_nodes[0];
        let hi = *self.theta_nodes.last().expect("non-empty grid");
        let step = (hi - lo) / (self.theta_nodes.len() - 1) as f64;
        (((theta - lo) / step).round() as usize).min(self.theta_nodes.len() - 1)
    }

    /// Draw the `index`-th individual's coordinates. The generator is derived
    /// from (seed, index) alone, so any subset of individuals can be drawn in
    /// any order on any thread with identical results.
    pub fn draw(&self, scn: &Scenario, seed: u64, index: u64) -> Result<(f64, f64, f64)> {
        let mut rng = seeding::rng_from(seed, STREAM_POPULATION, index);
        let theta = self.theta_table.sample(rng.gen::<f64>());
        let (x, y) = if self.exact {
            let xt = CdfTable::build(&|x| scn.family_x.density(x, theta), scn.bounds.x, CDF_POINTS)?;
            let yt = CdfTable::build(&|y| scn.family_y.density(y, theta), scn.bounds.y, CDF_POINTS)?;
            (xt.sample(rng.gen::<f64>()), yt.sample(rng.gen::<f64>()))
        } else {
            let node = self.nearest_node(theta);
            (
                self.x_tables[node].sample(rng.gen::<f64>()),
                self.y_tables[node].sample(rng.gen::<f64>()),
            )
        };
        Ok((theta, x, y))
    }
}

fn draw_claim(model: ClaimModel, mean_cost: f64, rng: &mut impl Rng) -> Result<f64> {
    match model {
        ClaimModel::DeterministicMean => Ok(mean_cost),
        ClaimModel::GammaNoise { cv } => {
            if !(mean_cost > 0.0) {
                return Err(Error::Invalid(format!(
                    "gamma claim noise needs a strictly positive mean cost, got {mean_cost}; \
                     use the deterministic claim model for signed means"
                )));
            }
            let shape = 1.0 / (cv * cv);
            let scale = mean_cost * cv * cv;
            let gamma = Gamma::new(shape, scale).map_err(|e| {
                Error::Invalid(format!("gamma claim parameters rejected: {e}"))
            })?;
            Ok(gamma.sample(rng))
        }
    }
}

/// Sample a full population. Individual `j` consumes draws in the order
/// (theta, x, y, claim noise) from its own derived generator.
pub fn sample_population(scn: &Scenario, cfg: &PopulationConfig) -> Result<Vec<Individual>> {
    if cfg.n_individuals == 0 {
        return Err(Error::Invalid("population needs at least one individual".into()));
    }
    if let ClaimModel::GammaNoise { cv } = cfg.claim_model {
        if !(cv > 0.0) || !cv.is_finite() {
            return Err(Error::Invalid(format!(
                "claim coefficient of variation must be positive and finite, got {cv}"
            )));
        }
    }
    let sampler = PopulationSampler::new(scn, cfg.exact_conditional_sampling)?;
    (0..cfg.n_individuals as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = seeding::rng_from(cfg.rng_seed, STREAM_POPULATION, j);
            // Reproduce the sampler's draw order: advance past the coordinate
            // draws so the claim noise uses the fourth draw onward.
            let (theta, x, y) = sampler.draw(scn, cfg.rng_seed, j)?;
            let _ = rng.gen::<f64>();
            let _ = rng.gen::<f64>();
            let _ = rng.gen::<f64>();
            let mean_cost = scn.mean.value(theta, x, y)?;
            let claim = draw_claim(cfg.claim_model, mean_cost, &mut rng)?;
            Ok(Individual {
                theta,
                x,
                y,
                mean_cost,
                claim,
            })
        })
        .collect()
}

/// Organism index per individual, by the assignment rule. Stratified rules
/// split the empirical quantiles into equal-count contiguous bands (sizes
/// differing by at most one).
pub fn assign_organisms(
    population: &[Individual],
    assignment: &OrganismAssignment,
    rng_seed: u64,
) -> Vec<usize> {
    let n = population.len();
    let k = assignment.k;
    match assignment.rule {
        AssignmentRule::Random => (0..n as u64)
            .map(|j| {
                let mut rng = seeding::rng_from(rng_seed, STREAM_ASSIGNMENT, j);
                rng.gen_range(0..k)
            })
            .collect(),
        AssignmentRule::ThetaStratified | AssignmentRule::XStratified => {
            let key = |i: &Individual| match assignment.rule {
                AssignmentRule::ThetaStratified => i.theta,
                _ => i.x,
            };
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                key(&population[a])
                    .partial_cmp(&key(&population[b]))
                    .expect("sampled coordinates are finite")
            });
            let mut out = vec![0usize; n];
            for (rank, &individual) in order.iter().enumerate() {
                // Band boundaries at floor(o * n / k): equal counts up to one.
                out[individual] = (rank * k) / n;
            }
            out
        }
    }
}

/// A published tariff: premium as a step function of the scale value, fitted
/// as the per-bin average Bayes premium of a calibration sample.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleTable {
    pub f_min: f64,
    pub f_max: f64,
    pub premiums: Vec<f64>,
}

impl ScaleTable {
    pub fn bins(&self) -> usize {
        self.premiums.len()
    }

    fn bin_index(&self, f: f64) -> usize {
        if self.f_max <= self.f_min {
            return 0;
        }
        let width = (self.f_max - self.f_min) / self.premiums.len() as f64;
        (((f - self.f_min) / width).floor() as isize)
            .clamp(0, self.premiums.len() as isize - 1) as usize
    }

    /// Tariff lookup; scale values outside the fitted range clamp to the
    /// nearest edge bin.
    pub fn premium(&self, f: f64) -> f64 {
        self.premiums[self.bin_index(f)]
    }

    pub fn bin_center(&self, bin: usize) -> f64 {
        let width = (self.f_max - self.f_min) / self.premiums.len() as f64;
        self.f_min + (bin as f64 + 0.5) * width
    }
}

/// Fit a tariff table: equal-width bins over the observed scale range of the
/// calibration sample, each charging the mean Bayes premium of its members.
/// Empty bins inherit the nearest non-empty bin (ties resolve left).
pub fn fit_scale_table(
    scn: &Scenario,
    calibration: &[Individual],
    bins: usize,
    cfg: &QuadratureConfig,
) -> Result<ScaleTable> {
    if bins == 0 {
        return Err(Error::Invalid("a tariff table needs at least one bin".into()));
    }
    if calibration.is_empty() {
        return Err(Error::Invalid("a tariff table needs a non-empty calibration sample".into()));
    }
    let omega = scn.full_support();
    let pairs: Vec<(f64, f64)> = calibration
        .par_iter()
        .map(|ind| {
            let f = scn.scale.value(ind.x, ind.y)?;
            let premium = bayes::posterior_expectation(scn, &omega, ind.x, ind.y, cfg)?;
            Ok((f, premium))
        })
        .collect::<Result<_>>()?;

    let f_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let f_max = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut sums = vec![0.0f64; bins];
    let mut counts = vec![0usize; bins];
    let width = if f_max > f_min {
        (f_max - f_min) / bins as f64
    } else {
        0.0
    };
    for &(f, premium) in &pairs {
        let b = if width > 0.0 {
            (((f - f_min) / width).floor() as isize).clamp(0, bins as isize - 1) as usize
        } else {
            0
        };
        sums[b] += premium;
        counts[b] += 1;
    }
    let mut premiums = vec![f64::NAN; bins];
    for b in 0..bins {
        if counts[b] > 0 {
            premiums[b] = sums[b] / counts[b] as f64;
        }
    }
    // Fill empty bins from the nearest populated one; ties resolve left.
    let filled: Vec<usize> = (0..bins).filter(|&b| counts[b] > 0).collect();
    for b in 0..bins {
        if counts[b] == 0 {
            let nearest = filled
                .iter()
                .copied()
                .min_by_key(|&s| {
                    let d = s.abs_diff(b);
                    (d, s) // smaller index wins a distance tie
                })
                .expect("at least one bin is populated");
            premiums[b] = premiums[nearest];
        }
    }
    Ok(ScaleTable {
        f_min,
        f_max,
        premiums,
    })
}

/// One organism's account after a simulation round.
#[derive(Debug, Clone, Serialize)]
pub struct OrganismAccount {
    pub id: usize,
    pub members: usize,
    /// Total premiums charged to members.
    pub collected: f64,
    /// Sum of member conditional mean costs m(theta, x, y).
    pub expected_cost: f64,
    /// Sum of member sampled claims.
    pub realized_cost: f64,
    /// collected - expected_cost: the structural advantage (+) or penalty (-)
    /// the tariff hands this organism.
    pub imbalance: f64,
    /// Sum of |premium| over members: the organism's premium volume.
    pub premium_volume: f64,
    /// imbalance normalized by premium volume. Equal to imbalance / collected
    /// whenever premiums are non-negative, and still well-defined when signed
    /// premiums make the collected total cancel toward zero.
    pub relative_imbalance: f64,
}

/// Full result of a redistribution round.
#[derive(Debug, Clone, Serialize)]
pub struct RedistributionOutcome {
    pub organisms: Vec<OrganismAccount>,
    pub total_collected: f64,
    pub total_expected_cost: f64,
    pub total_realized_cost: f64,
    /// total_collected - total_expected_cost; equals the sum of the
    /// per-organism imbalances exactly.
    pub total_imbalance: f64,
    /// max |relative_imbalance| over organisms.
    pub distortion_index: f64,
}

impl RedistributionOutcome {
    /// Per-organism accounts as CSV, ordered by organism id.
    pub fn csv_table(&self) -> String {
        let mut out = String::from(
            "organism_id,members,collected,expected_cost,realized_cost,imbalance,relative_imbalance\n",
        );
        for o in &self.organisms {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                o.id, o.members, o.collected, o.expected_cost, o.realized_cost, o.imbalance,
                o.relative_imbalance
            ));
        }
        out
    }
}

/// Premium per individual under a rule.
fn compute_premiums(
    scn: &Scenario,
    population: &[Individual],
    rule: &PremiumRule,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let omega = scn.full_support();
    let bayes_premiums = || -> Result<Vec<f64>> {
        population
            .par_iter()
            .map(|ind| bayes::posterior_expectation(scn, &omega, ind.x, ind.y, cfg))
            .collect()
    };
    match rule {
        PremiumRule::GlobalBayes => bayes_premiums(),
        PremiumRule::Flat => {
            let all = bayes_premiums()?;
            let mean = all.iter().sum::<f64>() / all.len() as f64;
            Ok(vec![mean; population.len()])
        }
        PremiumRule::ScaleTable { bins } => {
            let table = fit_scale_table(scn, population, *bins, cfg)?;
            population
                .par_iter()
                .map(|ind| Ok(table.premium(scn.scale.value(ind.x, ind.y)?)))
                .collect()
        }
    }
}

/// Run one redistribution round: sample, assign, charge, and account.
pub fn simulate(
    scn: &Scenario,
    pop_cfg: &PopulationConfig,
    assignment: &OrganismAssignment,
    rule: &PremiumRule,
    cfg: &QuadratureConfig,
) -> Result<RedistributionOutcome> {
    if assignment.k == 0 {
        return Err(Error::Invalid("assignment needs at least one organism".into()));
    }
    let population = sample_population(scn, pop_cfg)?;
    let organisms = assign_organisms(&population, assignment, pop_cfg.rng_seed);
    let premiums = compute_premiums(scn, &population, rule, cfg)?;

    let k = assignment.k;
    let mut members = vec![0usize; k];
    let mut collected = vec![0.0f64; k];
    let mut expected = vec![0.0f64; k];
    let mut realized = vec![0.0f64; k];
    let mut volume = vec![0.0f64; k];
    for (j, ind) in population.iter().enumerate() {
        let o = organisms[j];
        members[o] += 1;
        collected[o] += premiums[j];
        expected[o] += ind.mean_cost;
        realized[o] += ind.claim;
        volume[o] += premiums[j].abs();
    }

    let mut accounts = Vec::with_capacity(k);
    let mut distortion_index = 0.0f64;
    for id in 0..k {
        let imbalance = collected[id] - expected[id];
        let relative_imbalance = if volume[id] > 0.0 {
            imbalance / volume[id]
        } else if imbalance == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(imbalance)
        };
        distortion_index = distortion_index.max(relative_imbalance.abs());
        accounts.push(OrganismAccount {
            id,
            members: members[id],
            collected: collected[id],
            expected_cost: expected[id],
            realized_cost: realized[id],
            imbalance,
            premium_volume: volume[id],
            relative_imbalance,
        });
    }
    let total_collected: f64 = accounts.iter().map(|o| o.collected).sum();
    let total_expected_cost: f64 = accounts.iter().map(|o| o.expected_cost).sum();
    let total_realized_cost: f64 = accounts.iter().map(|o| o.realized_cost).sum();
    let total_imbalance: f64 = accounts.iter().map(|o| o.imbalance).sum();
    Ok(RedistributionOutcome {
        organisms: accounts,
        total_collected,
        total_expected_cost,
        total_realized_cost,
        total_imbalance,
        distortion_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        CriteriaBox, DensityFamily, LocationFamily, MeanFunction, ScaleFunction, ThetaPrior,
    };
    use crate::registry::FunctionHandle;
    use approx::assert_abs_diff_eq;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn identity() -> FunctionHandle {
        FunctionHandle::new("identity", &[]).unwrap()
    }

    fn constant(v: f64) -> FunctionHandle {
        FunctionHandle::new("constant", &[v]).unwrap()
    }

    fn gaussian_sum_pool() -> Scenario {
        let fam = || DensityFamily::named_location(LocationFamily::Gaussian, 1.0, iv(-6.0, 6.0)).unwrap();
        Scenario::new(
            ThetaPrior::new(
                FunctionHandle::new("gaussian_location", &[0.0, 1.0]).unwrap(),
                iv(-6.0, 6.0),
            )
            .unwrap(),
            fam(),
            fam(),
            MeanFunction::AffineInScale {
                c1: identity(),
                c2: constant(0.0),
                a: identity(),
                b: identity(),
            },
            ScaleFunction::Semilinear {
                a: identity(),
                b: identity(),
            },
            CriteriaBox {
                x: iv(-6.0, 6.0),
                y: iv(-6.0, 6.0),
            },
        )
        .unwrap()
    }

    /// Constant positive mean, so gamma claim noise is admissible.
    fn positive_mean_pool() -> Scenario {
        let fam = || DensityFamily::named_location(LocationFamily::Gaussian, 1.0, iv(-6.0, 6.0)).unwrap();
        Scenario::new(
            ThetaPrior::new(
                FunctionHandle::new("gaussian_location", &[0.0, 1.0]).unwrap(),
                iv(-6.0, 6.0),
            )
            .unwrap(),
            fam(),
            fam(),
            MeanFunction::AffineInScale {
                c1: constant(0.7),
                c2: constant(0.0),
                a: identity(),
                b: identity(),
            },
            ScaleFunction::Semilinear {
                a: identity(),
                b: identity(),
            },
            CriteriaBox {
                x: iv(-6.0, 6.0),
                y: iv(-6.0, 6.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn sampled_parameters_match_the_prior_mean() {
        let scn = gaussian_sum_pool();
        let cfg = PopulationConfig::new(10_000, 11, ClaimModel::DeterministicMean).unwrap();
        let pop = sample_population(&scn, &cfg).unwrap();
        assert_eq!(pop.len(), 10_000);
        let mean_theta = pop.iter().map(|i| i.theta).sum::<f64>() / pop.len() as f64;
        assert!(mean_theta.abs() <= 0.03, "sample mean {mean_theta}");
        // Criteria center on theta, so their means track it too.
        let mean_x = pop.iter().map(|i| i.x).sum::<f64>() / pop.len() as f64;
        assert!(mean_x.abs() <= 0.05, "criterion mean {mean_x}");
    }

    #[test]
    fn population_is_deterministic_and_claims_follow_the_model() {
        let scn = gaussian_sum_pool();
        let cfg = PopulationConfig::new(500, 3, ClaimModel::DeterministicMean).unwrap();
        let a = sample_population(&scn, &cfg).unwrap();
        let b = sample_population(&scn, &cfg).unwrap();
        for (i, j) in a.iter().zip(b.iter()) {
            assert_eq!(i.theta.to_bits(), j.theta.to_bits());
            assert_eq!(i.x.to_bits(), j.x.to_bits());
            assert_eq!(i.y.to_bits(), j.y.to_bits());
            assert_eq!(i.claim.to_bits(), j.claim.to_bits());
            assert_eq!(i.claim.to_bits(), i.mean_cost.to_bits());
        }
        let other_seed = PopulationConfig::new(500, 4, ClaimModel::DeterministicMean).unwrap();
        let c = sample_population(&scn, &other_seed).unwrap();
        assert!(a.iter().zip(c.iter()).any(|(i, j)| i.theta != j.theta));
    }

    #[test]
    fn gamma_noise_changes_claims_but_not_expected_cost() {
        let scn = positive_mean_pool();
        let det = PopulationConfig::new(400, 5, ClaimModel::DeterministicMean).unwrap();
        let noisy = PopulationConfig::new(400, 5, ClaimModel::GammaNoise { cv: 0.4 }).unwrap();
        let a = sample_population(&scn, &det).unwrap();
        let b = sample_population(&scn, &noisy).unwrap();
        let mut any_noise = false;
        for (i, j) in a.iter().zip(b.iter()) {
            assert_eq!(i.theta.to_bits(), j.theta.to_bits());
            assert_eq!(i.mean_cost.to_bits(), j.mean_cost.to_bits());
            assert!(j.claim > 0.0);
            any_noise |= i.claim != j.claim;
        }
        assert!(any_noise);
        // Sample mean of the noisy claims stays near the shared mean cost.
        let mean_claim = b.iter().map(|i| i.claim).sum::<f64>() / b.len() as f64;
        assert_abs_diff_eq!(mean_claim, 0.7, epsilon = 0.05);
    }

    #[test]
    fn gamma_noise_rejects_nonpositive_means() {
        let scn = gaussian_sum_pool(); // m = theta takes negative values
        let cfg = PopulationConfig::new(200, 1, ClaimModel::GammaNoise { cv: 0.3 }).unwrap();
        assert!(matches!(
            sample_population(&scn, &cfg),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn stratified_assignment_builds_contiguous_equal_bands() {
        let scn = gaussian_sum_pool();
        let cfg = PopulationConfig::new(1001, 9, ClaimModel::DeterministicMean).unwrap();
        let pop = sample_population(&scn, &cfg).unwrap();
        let assignment = OrganismAssignment::new(4, AssignmentRule::ThetaStratified).unwrap();
        let orgs = assign_organisms(&pop, &assignment, cfg.rng_seed);
        let mut counts = vec![0usize; 4];
        let mut max_theta = vec![f64::NEG_INFINITY; 4];
        let mut min_theta = vec![f64::INFINITY; 4];
        for (j, &o) in orgs.iter().enumerate() {
            counts[o] += 1;
            max_theta[o] = max_theta[o].max(pop[j].theta);
            min_theta[o] = min_theta[o].min(pop[j].theta);
        }
        assert_eq!(counts.iter().sum::<usize>(), 1001);
        assert!(counts.iter().all(|&c| c == 250 || c == 251), "{counts:?}");
        for w in 0..3 {
            assert!(max_theta[w] <= min_theta[w + 1]);
        }
    }

    #[test]
    fn accounts_conserve_totals_exactly() {
        let scn = gaussian_sum_pool();
        let pop_cfg = PopulationConfig::new(2_000, 7, ClaimModel::DeterministicMean).unwrap();
        let assignment = OrganismAssignment::new(3, AssignmentRule::Random).unwrap();
        let quad = QuadratureConfig::default();
        let outcome = simulate(&scn, &pop_cfg, &assignment, &PremiumRule::GlobalBayes, &quad).unwrap();

        assert_eq!(outcome.organisms.iter().map(|o| o.members).sum::<usize>(), 2_000);
        let collected: f64 = outcome.organisms.iter().map(|o| o.collected).sum();
        assert_eq!(collected.to_bits(), outcome.total_collected.to_bits());
        let imbalance: f64 = outcome.organisms.iter().map(|o| o.imbalance).sum();
        assert_eq!(imbalance.to_bits(), outcome.total_imbalance.to_bits());
        // Deterministic claims: realized cost is expected cost, bit for bit.
        for o in &outcome.organisms {
            assert_eq!(o.realized_cost.to_bits(), o.expected_cost.to_bits());
        }
        let rerun = simulate(&scn, &pop_cfg, &assignment, &PremiumRule::GlobalBayes, &quad).unwrap();
        assert_eq!(
            outcome.total_collected.to_bits(),
            rerun.total_collected.to_bits()
        );
    }

    #[test]
    fn flat_rule_charges_everyone_the_same() {
        let scn = positive_mean_pool();
        let pop_cfg = PopulationConfig::new(300, 2, ClaimModel::DeterministicMean).unwrap();
        let assignment = OrganismAssignment::new(2, AssignmentRule::Random).unwrap();
        let quad = QuadratureConfig::default();
        let outcome = simulate(&scn, &pop_cfg, &assignment, &PremiumRule::Flat, &quad).unwrap();
        // Constant mean 0.7: the Bayes premium and hence the flat premium is 0.7.
        let per_member = outcome.total_collected / 300.0;
        assert_abs_diff_eq!(per_member, 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(outcome.total_imbalance, 0.0, epsilon = 1e-9 * 300.0);
    }

    #[test]
    fn fitted_tariff_tracks_the_conjugate_premium_line() {
        let scn = gaussian_sum_pool();
        let pop_cfg = PopulationConfig::new(10_000, 13, ClaimModel::DeterministicMean).unwrap();
        let pop = sample_population(&scn, &pop_cfg).unwrap();
        let quad = QuadratureConfig::default();
        let table = fit_scale_table(&scn, &pop, 20, &quad).unwrap();
        assert_eq!(table.bins(), 20);

        // The Bayes premium is f/3, so each bin's premium must sit near its
        // center over 3, and the tariff must be monotone.
        let bin = {
            let width = (table.f_max - table.f_min) / 20.0;
            (((3.0 - table.f_min) / width).floor() as usize).min(19)
        };
        let center = table.bin_center(bin);
        assert!(
            (table.premium(3.0) - center / 3.0).abs() <= 0.02,
            "premium {} vs center/3 {}",
            table.premium(3.0),
            center / 3.0
        );
        assert!((table.premium(3.0) - 1.0).abs() <= 0.02 + (table.f_max - table.f_min) / (20.0 * 6.0));
        for w in table.premiums.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "tariff not monotone: {:?}", table.premiums);
        }
        // Lookups clamp outside the fitted range.
        assert_eq!(table.premium(table.f_min - 10.0), table.premiums[0]);
        assert_eq!(table.premium(table.f_max + 10.0), table.premiums[19]);

        // One bin collapses the tariff to the calibration mean premium.
        let flat = fit_scale_table(&scn, &pop, 1, &quad).unwrap();
        let premiums: Vec<f64> = pop
            .iter()
            .map(|i| bayes::posterior_expectation(&scn, &scn.full_support(), i.x, i.y, &quad).unwrap())
            .collect();
        let mean = premiums.iter().sum::<f64>() / premiums.len() as f64;
        assert_abs_diff_eq!(flat.premiums[0], mean, epsilon = 1e-12);
    }

    #[test]
    fn csv_table_lists_organisms_in_id_order() {
        let scn = positive_mean_pool();
        let pop_cfg = PopulationConfig::new(120, 21, ClaimModel::DeterministicMean).unwrap();
        let assignment = OrganismAssignment::new(3, AssignmentRule::XStratified).unwrap();
        let quad = QuadratureConfig::default();
        let outcome = simulate(&scn, &pop_cfg, &assignment, &PremiumRule::GlobalBayes, &quad).unwrap();
        let csv = outcome.csv_table();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "organism_id,members,collected,expected_cost,realized_cost,imbalance,relative_imbalance"
        );
        for (i, line) in lines.enumerate() {
            assert!(line.starts_with(&format!("{i},")), "row {i}: {line}");
        }
    }
}
