//! Command implementations. Each returns the process exit code: 0 for
//! success (and positive verdicts), 2 for "ran fine, verdict negative",
//! while errors bubble up as `Err` and become exit code 1 without writing
//! any report file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use riskscale::redistribution::{self, AssignmentRule, ClaimModel};
use riskscale::{
    bayes, diagnostics, DiagnosticsConfig, Interval, OrganismAssignment, PopulationConfig,
    PremiumRule, QuadratureConfig, SubsetOmega,
};

use crate::schema::load_scenario;

fn scenario_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn write_report(out_dir: &Path, name: &str, report: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("failed to create output directory `{}`", out_dir.display()))?;
    let file = out_dir.join(name);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&file, text)
        .with_context(|| format!("failed to write report `{}`", file.display()))?;
    Ok(())
}

/// Settings shared by the two diagnostics commands.
pub struct DiagnosticsFlags {
    pub seed: u64,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub subsets: Option<usize>,
    pub pairs: Option<usize>,
}

impl DiagnosticsFlags {
    fn config(&self, modulable_tol: bool) -> DiagnosticsConfig {
        let mut cfg = DiagnosticsConfig {
            rng_seed: self.seed,
            ..DiagnosticsConfig::default()
        };
        if let Some(tol) = self.tol {
            if modulable_tol {
                cfg.tol_modulable = tol;
            } else {
                cfg.tol_condition = tol;
            }
        }
        if let Some(grid) = self.grid {
            cfg.grid = grid;
        }
        if let Some(subsets) = self.subsets {
            cfg.n_subsets = subsets;
        }
        if let Some(pairs) = self.pairs {
            cfg.n_pairs = pairs;
        }
        cfg
    }
}

/// Compare premiums along scale level sets; exit 0 when the scale is
/// sufficient, 2 when a discrepancy witness is found.
pub fn cmd_check(scenario: &Path, out_dir: &Path, flags: &DiagnosticsFlags) -> Result<i32> {
    let (_, scn) = load_scenario(scenario)?;
    let cfg = flags.config(true);
    let report = diagnostics::check_modulability(&scn, &cfg)?;
    let section = report.modulability.as_ref().expect("section filled");
    write_report(
        out_dir,
        "check_report.json",
        &json!({
            "format": 1,
            "scenario": scenario_stem(scenario),
            "modulability": section,
        }),
    )?;
    if section.pass {
        println!(
            "scale holds the premiums: max discrepancy {:.3e} over {} comparisons",
            section.max_discrepancy, section.evaluated
        );
        Ok(0)
    } else {
        println!(
            "scale fails: premium discrepancy {:.6} on a shared level set",
            section.max_discrepancy
        );
        Ok(2)
    }
}

/// Score the structural conditions; exit 0 only when all residuals pass.
pub fn cmd_verify(scenario: &Path, out_dir: &Path, flags: &DiagnosticsFlags) -> Result<i32> {
    let (_, scn) = load_scenario(scenario)?;
    let cfg = flags.config(false);
    let report = diagnostics::check_theorem_conditions(&scn, &cfg)?;
    let section = report.conditions.as_ref().expect("section filled");
    write_report(
        out_dir,
        "verify_report.json",
        &json!({
            "format": 1,
            "scenario": scenario_stem(scenario),
            "conditions": section,
        }),
    )?;
    println!(
        "residuals: semilinearity {:.3e}, expfam {:.3e}/{:.3e}, psi_theta {:.3e}, phi {:.3e}, mean_affine {:.3e}",
        section.semilinearity_residual,
        section.expfam_residual_x,
        section.expfam_residual_y,
        section.psi_theta_residual,
        section.phi_residual,
        section.mean_affine_residual,
    );
    Ok(if section.all_pass { 0 } else { 2 })
}

/// Flags of the simulate command after string-level validation.
pub struct SimulateFlags {
    pub n: usize,
    pub k: usize,
    pub assignment: String,
    pub premium: String,
    pub bins: Option<usize>,
    pub seed: u64,
    pub claims: String,
    pub cv: Option<f64>,
}

impl SimulateFlags {
    fn assignment_rule(&self) -> Result<AssignmentRule> {
        Ok(match self.assignment.as_str() {
            "random" => AssignmentRule::Random,
            "theta_stratified" => AssignmentRule::ThetaStratified,
            "x_stratified" => AssignmentRule::XStratified,
            other => bail!(
                "flag --assignment: unknown rule `{other}`, expected `random`, `theta_stratified` or `x_stratified`"
            ),
        })
    }

    fn premium_rule(&self) -> Result<PremiumRule> {
        match self.premium.as_str() {
            "global_bayes" | "flat" => {
                if self.bins.is_some() {
                    bail!("flag --bins: only applies to --premium scale_table");
                }
                Ok(if self.premium == "flat" {
                    PremiumRule::Flat
                } else {
                    PremiumRule::GlobalBayes
                })
            }
            "scale_table" => {
                let bins = self
                    .bins
                    .ok_or_else(|| anyhow::anyhow!("flag --bins: required with --premium scale_table"))?;
                Ok(PremiumRule::ScaleTable { bins })
            }
            other => bail!(
                "flag --premium: unknown rule `{other}`, expected `global_bayes`, `scale_table` or `flat`"
            ),
        }
    }

    fn claim_model(&self) -> Result<ClaimModel> {
        match self.claims.as_str() {
            "deterministic" => {
                if self.cv.is_some() {
                    bail!("flag --cv: only applies to --claims gamma");
                }
                Ok(ClaimModel::DeterministicMean)
            }
            "gamma" => {
                let cv = self
                    .cv
                    .ok_or_else(|| anyhow::anyhow!("flag --cv: required with --claims gamma"))?;
                Ok(ClaimModel::GammaNoise { cv })
            }
            other => bail!("flag --claims: unknown model `{other}`, expected `deterministic` or `gamma`"),
        }
    }
}

/// Run one redistribution round and write the outcome as JSON plus a
/// per-organism CSV table.
pub fn cmd_simulate(scenario: &Path, out_dir: &Path, flags: &SimulateFlags) -> Result<i32> {
    let (_, scn) = load_scenario(scenario)?;
    let rule = flags.premium_rule()?;
    let assignment = OrganismAssignment::new(flags.k, flags.assignment_rule()?)?;
    let pop_cfg = PopulationConfig::new(flags.n, flags.seed, flags.claim_model()?)?;
    let quad = QuadratureConfig::default();
    let outcome = redistribution::simulate(&scn, &pop_cfg, &assignment, &rule, &quad)?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("failed to create output directory `{}`", out_dir.display()))?;
    let csv_path = out_dir.join("organisms.csv");
    std::fs::write(&csv_path, outcome.csv_table())
        .with_context(|| format!("failed to write `{}`", csv_path.display()))?;
    write_report(
        out_dir,
        "simulation.json",
        &json!({
            "format": 1,
            "scenario": scenario_stem(scenario),
            "outcome": outcome,
        }),
    )?;
    println!(
        "{} organisms, distortion index {:.6}",
        outcome.organisms.len(),
        outcome.distortion_index
    );
    Ok(0)
}

/// Parse "lo:hi[,lo:hi...]" into a parameter restriction.
pub fn parse_omega(text: &str) -> Result<SubsetOmega> {
    let mut intervals = Vec::new();
    for piece in text.split(',') {
        let (lo, hi) = piece
            .split_once(':')
            .ok_or_else(|| anyhow::anyhow!("flag --omega: `{piece}` is not of the form lo:hi"))?;
        let lo: f64 = lo
            .trim()
            .parse()
            .with_context(|| format!("flag --omega: bad number `{lo}`"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .with_context(|| format!("flag --omega: bad number `{hi}`"))?;
        intervals.push(Interval::new(lo, hi).context("flag --omega")?);
    }
    SubsetOmega::new(intervals).context("flag --omega")
}

/// Print the restricted Bayes premium at one criteria point.
pub fn cmd_premium(scenario: &Path, x: f64, y: f64, omega: Option<&str>) -> Result<i32> {
    let (_, scn) = load_scenario(scenario)?;
    let omega = match omega {
        Some(text) => {
            let parsed = parse_omega(text)?;
            scn.check_subset(&parsed)
                .context("flag --omega: outside the parameter support")?;
            parsed
        }
        None => scn.full_support(),
    };
    let premium =
        bayes::posterior_expectation(&scn, &omega, x, y, &QuadratureConfig::default())?;
    // Twelve significant digits.
    println!("{premium:.11e}");
    Ok(0)
}
