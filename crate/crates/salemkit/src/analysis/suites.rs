use num::{BigInt, BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::fourier::{increment_concentration, NetSpec};
use super::mass::{
    center_schedule, frostman_fit, heavy_core_certificate, inverse_scale_radii, lower_mass_check, salem_support_points,
    support_radius_sq,
};
use super::report::ExperimentReport;
use super::resonance::{bohr_points, energy_series, resonance_check};
use super::sharpness::{
    conv_sharpness_geometric, conv_sharpness_nongeometric, restriction_experiment_geometric,
    restriction_experiment_nongeometric,
};
use super::sparsity::sparsity_certificate;
use crate::constructions::{
    build, Built, ConstructionParams, FactorizedMeasure, RestrictionGeoBundle, RestrictionNongeoBundle, SalemMeasure,
};
use crate::measures::difference_set;
use crate::samplers::BlockKind;
use crate::{Error, Result};

/// Bohr-set constant and window defaults shared by the suites.
pub const BOHR_C: f64 = 0.95;
pub const ENERGY_C: f64 = 0.5;
pub const ENERGY_GRID: usize = 10_000;

fn salem_suite(s: &SalemMeasure) -> Result<Vec<ExperimentReport>> {
    let n = s.family.len();
    let alpha = s.alpha.to_f64();
    let centers = center_schedule(&s.family[n - 1], 1000, s.seed);
    let radii = inverse_scale_radii(&s.scales, n);
    let frostman = frostman_fit(&s.family, alpha, &centers, &radii, s.frostman)?;
    let points = salem_support_points(s, 100, s.seed)?;
    let lower = lower_mass_check(&s.family, &s.scales, &points, &support_radius_sq(&s.scales), alpha, &[0.0, 0.05])?;
    let increments = increment_concentration(
        &[s.family.clone()],
        &s.scales,
        &s.t,
        alpha / 2.0,
        &[8.0],
        &NetSpec::standard(s.scales.r(), s.scales.d()),
    )?;
    Ok(vec![frostman, lower, increments])
}

/// Sparsity of the combined offspring sets and the difference-set count `#(E_n - E_n) ≤ ∏ 2^d M̃_k^d`.
pub fn factorization_report(fm: &FactorizedMeasure) -> Result<Vec<ExperimentReport>> {
    let d = fm.scales.d();
    let mut report = ExperimentReport::new("factorization", json!({ "levels": fm.levels }), Some(fm.seed));
    report.tolerance("exact", 0.0);
    let holds = fm.factorization_holds()?;
    report.verdict("convolution_identity", holds, "exact", "convolve(μ̃_n, μ̄_n) = μ_n at every level");
    let mut bound = BigInt::from(1);
    let mut diff_ok = true;
    for (k, lv) in fm.levels.iter().enumerate() {
        bound *= BigInt::from(2 * lv.m_tilde).pow(d as u32);
        let count = difference_set(fm.grid_family[k].points()).len();
        diff_ok &= BigInt::from(count) <= bound;
        report.push("difference_set", k + 1, count as f64).push("difference_bound", k + 1, bound.to_f64().unwrap_or(f64::INFINITY));
    }
    report.verdict("difference_count", diff_ok, "exact", "#(E_n - E_n) ≤ ∏ 2^d M̃_k^d");
    let kinds: Vec<Vec<BlockKind>> = fm.levels.iter().map(|lv| vec![BlockKind::Plain { q: lv.q }]).collect();
    let sparsity = sparsity_certificate(&fm.combined_assignment, &kinds);
    Ok(vec![report, sparsity])
}

/// Resonance floors at certified Bohr points for every level, and the energy identities of `μ̃`.
pub fn restriction_geo_suite(b: &RestrictionGeoBundle) -> Result<Vec<ExperimentReport>> {
    let d = b.scales.d();
    let theta = 2f64.powi(-(d as i32) - 2);
    let mut resonance = ExperimentReport::new("resonance_levels", json!({ "c": BOHR_C, "theta": theta }), Some(b.seed));
    resonance.tolerance("exact", 0.0).tolerance("closed_form_rel", 1e-9);
    resonance.verdict("identities", b.identities_hold(), "exact", "M = A M̃ M̄ L q̄, Q̄ = L q̄, Q̃ = M̄ Q̄");
    for n in 1..=b.levels.len() {
        let bohr = bohr_points(b, n, BOHR_C, theta, 5, 4096, b.seed ^ n as u64)?;
        resonance.push("bohr_points", n, bohr.points.len() as f64).push("bohr_m", n, bohr.m as f64);
        if bohr.points.is_empty() {
            continue;
        }
        let r = resonance_check(b, n, &bohr.points)?;
        resonance.absorb(&format!("level{n}"), &r);
    }
    let energy = energy_series(&b.grid_family, &b.grid_scales, ENERGY_C, ENERGY_GRID)?;
    Ok(vec![resonance, energy])
}

fn restriction_nongeo_suite(b: &RestrictionNongeoBundle) -> Result<Vec<ExperimentReport>> {
    let mut report = ExperimentReport::new("restriction_nongeo_structure", json!({}), Some(b.seed));
    report.tolerance("exact", 0.0);
    let probs = b.nu.iter().all(|v| v.is_probability());
    report.verdict("nu_probability", probs, "exact", "every ν_n is a probability measure");
    let total: BigRational = b.weights.iter().cloned().sum();
    report.verdict("weights_normalized", total == BigRational::from_integer(1.into()), "exact", format!("Σ w_n = {total}"));
    let mut disjoint = true;
    for i in 0..b.nu.len() {
        for j in i + 1..b.nu.len() {
            disjoint &= b.nu[i].points().iter().all(|p| b.nu[j].points().binary_search(p).is_err());
        }
    }
    report.verdict("disjoint_supports", disjoint, "exact", "supp ν_i ∩ supp ν_j = ∅");
    Ok(vec![report])
}

/// The verification suite matching the construction.
pub fn verify_suite(built: &Built) -> Result<Vec<ExperimentReport>> {
    match built {
        Built::Salem(s) => salem_suite(s),
        Built::HeavyCore(h) => Ok(vec![heavy_core_certificate(h)?]),
        Built::Geo(fm) => factorization_report(fm),
        Built::RestrictionGeo(b) => restriction_geo_suite(b),
        Built::RestrictionNongeo(b) => restriction_nongeo_suite(b),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ConvSharpnessGeometric,
    ConvSharpnessNongeometric,
    RestrictionGeometric,
    RestrictionNongeometric,
    Resonance,
    Energy,
}

/// Experiment document: the construction plus the exponent points to test.
///
/// Convolution experiments read `points` as `(1/p, 1/q)`; restriction experiments as `(p, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub construction: ConstructionParams,
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_centers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn needs_points(spec: &ExperimentSpec) -> Result<()> {
    if spec.points.is_empty() {
        return Err(Error::InvalidParameters(format!("{:?} needs at least one point", spec.experiment)));
    }
    Ok(())
}

/// Builds the construction and runs the experiment, one report per point.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentReport>> {
    let built = build(&spec.construction)?;
    let depth = built.family().len();
    let levels = spec.levels.clone().unwrap_or_else(|| (1..=depth).collect());
    let max_centers = spec.max_centers.unwrap_or(512);
    let wrong = || {
        Error::InvalidParameters(format!(
            "{:?} does not apply to a {} construction",
            spec.experiment,
            built.kind().name()
        ))
    };
    match (spec.experiment, &built) {
        (ExperimentKind::ConvSharpnessGeometric, Built::Geo(fm)) => {
            needs_points(spec)?;
            spec.points.iter().map(|[a, b]| conv_sharpness_geometric(fm, *a, *b, &levels, max_centers)).collect()
        }
        (ExperimentKind::ConvSharpnessNongeometric, Built::HeavyCore(h)) => {
            needs_points(spec)?;
            spec.points.iter().map(|[a, b]| conv_sharpness_nongeometric(h, *a, *b, &levels, max_centers)).collect()
        }
        (ExperimentKind::RestrictionGeometric, Built::RestrictionGeo(b)) => {
            needs_points(spec)?;
            spec.points
                .iter()
                .map(|[p, q]| restriction_experiment_geometric(b, *p, *q, BOHR_C, spec.samples.unwrap_or(2048)))
                .collect()
        }
        (ExperimentKind::RestrictionNongeometric, Built::RestrictionNongeo(b)) => {
            needs_points(spec)?;
            spec.points
                .iter()
                .map(|[p, q]| restriction_experiment_nongeometric(b, *p, *q, spec.samples.unwrap_or(256)))
                .collect()
        }
        (ExperimentKind::Resonance, Built::RestrictionGeo(b)) => Ok(vec![restriction_geo_suite(b)?.remove(0)]),
        (ExperimentKind::Energy, Built::RestrictionGeo(b)) => {
            Ok(vec![energy_series(&b.grid_family, &b.grid_scales, ENERGY_C, spec.samples.unwrap_or(ENERGY_GRID))?])
        }
        _ => Err(wrong()),
    }
}
