use std::collections::HashSet;

use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::mass::MassFloor;
use super::region::{ExponentRegion, RegionKind};
use super::report::{non_increasing_within, strictly_increasing, ExperimentReport};
use super::resonance::{bohr_points, resonance_closed_form};
use crate::constructions::{FactorizedMeasure, HeavyCoreMeasure, RestrictionGeoBundle, RestrictionNongeoBundle};
use crate::measures::{ball_mass_at_atom, difference_set, neighborhood_volume, DiscreteMeasure, FourierTable};
use crate::samplers::Stream;
use crate::scales::{rational_to_f64, Exponent, ScaleSequence};
use crate::{Error, Mass, Point, Result};

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParameters(format!("{x} is not finite")))
}

fn trend_verdict(report: &mut ExperimentReport, inside: bool, ratios: &[f64]) {
    if inside {
        let ok = non_increasing_within(ratios, 0.05);
        report.verdict("trend", ok, "trend_rel", format!("interior point, ratios {ratios:?}"));
    } else {
        let ok = strictly_increasing(ratios);
        report.verdict("trend", ok, "trend_rel", format!("exterior point, ratios {ratios:?}"));
    }
}

/// Lifts level-`k` lattice points to level `n`.
fn lift(points: &[Point], scales: &ScaleSequence, k: usize, n: usize) -> Result<Vec<Point>> {
    let f = scales.mm_ratio(k, n)?;
    Ok(points.iter().map(|p| p.iter().map(|v| v * f).collect()).collect())
}

/// Atoms `z` used for the ball-mass floor, all of them if at most `max`, else a seeded subset.
fn floor_centers(mu: &DiscreteMeasure, max: usize, seed: u64, label: &str) -> Vec<Point> {
    let pts = mu.points();
    if pts.len() <= max {
        return pts.to_vec();
    }
    let mut rng = Stream::new(seed).child(label).rng();
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, pts.len(), max).into_vec();
    idx.sort();
    idx.into_iter().map(|i| pts[i].clone()).collect()
}

fn min_ball_mass(mu: &DiscreteMeasure, centers: &[Point], rho: &BigRational) -> Mass {
    centers
        .par_iter()
        .map(|c| ball_mass_at_atom(mu, c, rho))
        .min()
        .unwrap_or_else(Mass::zero)
}

/// Test functions `1_{(E-E)_{2δ}}` against `μ = μ̃ ∗ μ̄` at `δ = 1/𝔐_k`.
///
/// The ratio is `min_z μ̄_N(B(z, δ)) |(supp μ_N)_δ|^{1/q} / |(E_N - E_N)_{2δ}|^{1/p}`.
pub fn conv_sharpness_geometric(
    fm: &FactorizedMeasure,
    inv_p: f64,
    inv_q: f64,
    levels: &[usize],
    max_centers: usize,
) -> Result<ExperimentReport> {
    let d = fm.scales.d();
    let big_n = fm.family.len();
    if levels.is_empty() || levels.iter().any(|&k| k == 0 || k > big_n) {
        return Err(Error::EmptySchedule);
    }
    let region = ExponentRegion::new(fm.alpha.clone(), fm.beta.clone(), d)?;
    let inside = region.contains(RegionKind::Triangle, &exact(inv_p)?, &exact(inv_q)?);
    let mut report = ExperimentReport::new(
        "conv_sharpness_geometric",
        json!({ "inv_p": inv_p, "inv_q": inv_q, "levels": levels, "inside": inside }),
        Some(fm.seed),
    );
    report.tolerance("trend_rel", 0.05).tolerance("exact", 0.0);

    let mu = &fm.family[big_n - 1];
    let e = fm.grid_family[big_n - 1].points();
    let diff = difference_set(e);
    let scale = mu.scale();
    let centers = floor_centers(&fm.random_family[big_n - 1], max_centers, fm.seed, "sharpness-geo");
    let mut ratios = Vec::new();
    let mut floor_ok = true;
    for &k in levels {
        let delta = BigRational::new(BigInt::from(1), BigInt::from(fm.scales.mm(k).clone()));
        let two = &delta * BigRational::from_integer(BigInt::from(2));
        let vol_diff = rational_to_f64(&neighborhood_volume(&diff, d, scale, &two)?);
        let vol_supp = rational_to_f64(&neighborhood_volume(mu.points(), d, scale, &delta)?);
        let floor_exact = min_ball_mass(&fm.random_family[big_n - 1], &centers, &delta);
        let floor = rational_to_f64(&floor_exact);
        let ratio = floor * vol_supp.powf(inv_q) / vol_diff.powf(inv_p);
        let m = (&delta * BigRational::from_integer(BigInt::from(scale.clone()))).to_integer().to_i64().unwrap_or(0);
        let conv_min = sampled_conv_floor(mu, &diff, m, 32, fm.seed ^ k as u64);
        floor_ok &= conv_min >= floor_exact;
        let conv_min = rational_to_f64(&conv_min);
        report
            .push("ratio", k, ratio)
            .push("floor", k, floor)
            .push("supp_volume", k, vol_supp)
            .push("difference_volume", k, vol_diff)
            .push("sampled_conv_min", k, conv_min);
        ratios.push(ratio);
    }
    report.verdict("pointwise_floor", floor_ok, "exact", "sampled (f_δ ∗ μ)(x) ≥ min μ̄-ball mass on (supp μ)_δ");
    trend_verdict(&mut report, inside, &ratios);
    Ok(report)
}

/// `min (f_δ ∗ μ)(x)` over sampled `x` in the sup-norm `δ`-neighborhood of `supp μ`, all in lattice units.
fn sampled_conv_floor(mu: &DiscreteMeasure, diff: &[Point], m: i64, samples: usize, seed: u64) -> Mass {
    let mut rng = Stream::new(seed).child("conv-floor").rng();
    let pts = mu.points();
    let xs: Vec<Point> = (0..samples)
        .map(|_| {
            let a = &pts[rng.gen_range(0..pts.len())];
            a.iter().map(|v| v + rng.gen_range(-m..=m)).collect()
        })
        .collect();
    xs.par_iter()
        .map(|x| {
            mu.atoms()
                .filter(|(y, _)| {
                    diff.iter().any(|e| x.iter().zip(y.iter()).zip(e).all(|((xi, yi), ei)| (xi - yi - ei).abs() <= 2 * m))
                })
                .map(|(_, w)| w)
                .sum::<Mass>()
        })
        .min()
        .unwrap_or_else(Mass::zero)
}

/// Volume of the Euclidean unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Test functions `1_{B(0, (1+√d)δ)}` against a heavy-core measure at `δ = ⌈r√d⌉/𝔐_k`.
///
/// The ratio is `min_{w core} τ([w]) |(F_k)_{δ/√d}|^{1/q} / |B(0, (1+√d)δ)|^{1/p}`;
/// for `d = 1` the test ball is the `B(0, 2δ)` of the construction.
pub fn conv_sharpness_nongeometric(
    h: &HeavyCoreMeasure,
    inv_p: f64,
    inv_q: f64,
    levels: &[usize],
    max_centers: usize,
) -> Result<ExperimentReport> {
    let d = h.scales.d();
    let big_n = h.family.len();
    if levels.is_empty() || levels.iter().any(|&k| k == 0 || k > big_n) {
        return Err(Error::EmptySchedule);
    }
    let region = ExponentRegion::new(h.alpha.clone(), h.beta.clone(), d)?;
    let inside = region.contains(RegionKind::Pentagon, &exact(inv_p)?, &exact(inv_q)?);
    let mut report = ExperimentReport::new(
        "conv_sharpness_nongeometric",
        json!({ "inv_p": inv_p, "inv_q": inv_q, "levels": levels, "inside": inside }),
        Some(h.seed),
    );
    report.tolerance("trend_rel", 0.05).tolerance("exact", 0.0);
    let mu = &h.family[big_n - 1];
    let scale = mu.scale();
    let step = (h.scales.r() as f64 * (d as f64).sqrt()).ceil() as i64;
    let sqrt_d = (d as f64).sqrt().ceil() as i64;
    let mut ratios = Vec::new();
    let mut floor_ok = true;
    for &k in levels {
        let words: HashSet<&Vec<Point>> = h.core[k - 1].iter().collect();
        // τ([w]) bounds μ(B(X(w), δ)) from below since the cylinder lies in X(w) + [0, r/𝔐_k]^d.
        let cylinder = h.leaves[k - 1]
            .leaves
            .iter()
            .filter(|l| words.contains(&l.word))
            .map(|l| l.mass.clone())
            .min()
            .ok_or(Error::EmptySchedule)?;
        let floor = rational_to_f64(&cylinder);
        let core = lift(&h.core_points(k)?, &h.scales, k, big_n)?;
        let centers = if core.len() > max_centers {
            let mut rng = Stream::new(h.seed).child("sharpness-core").rng();
            let idx = rand::seq::index::sample(&mut rng, core.len(), max_centers).into_vec();
            idx.into_iter().map(|i| core[i].clone()).collect()
        } else {
            core.clone()
        };
        let units = BigInt::from(step * h.scales.mm_ratio(k, big_n)?);
        let delta = BigRational::new(units.clone(), BigInt::from(scale.clone()));
        let ball_min = min_ball_mass(mu, &centers, &delta);
        // Sup-norm radius δ/⌈√d⌉ keeps the neighborhood inside the Euclidean δ-ball around the core.
        let nb_units = (&units / BigInt::from(sqrt_d)).max(BigInt::from(1));
        let nb = BigRational::new(nb_units, BigInt::from(scale.clone()));
        let vol_core = rational_to_f64(&neighborhood_volume(&core, d, scale, &nb)?);
        let test_radius = (1.0 + (d as f64).sqrt()) * rational_to_f64(&delta);
        let vol_ball = unit_ball_volume(d) * test_radius.powi(d as i32);
        let ratio = floor * vol_core.powf(inv_q) / vol_ball.powf(inv_p);
        let bound = MassFloor { coef: num::pow::pow(h.c.clone(), k), power: Exponent::integer(0).sub(&h.alpha) };
        let mm_k = h.scales.mm_rational(k);
        floor_ok &= ball_min >= cylinder && bound.holds(&cylinder, &mm_k);
        report
            .push("ratio", k, ratio)
            .push("floor", k, floor)
            .push("ball_min", k, rational_to_f64(&ball_min))
            .push("core_floor", k, h.core_floor_f64(k))
            .push("core_volume", k, vol_core)
            .push("core_points", k, core.len() as f64);
        ratios.push(ratio);
    }
    report.verdict("core_floor", floor_ok, "exact", "μ(B(c, δ)) ≥ τ([w]) ≥ c^k 𝔐_k^{-α} at sampled core points");
    trend_verdict(&mut report, inside, &ratios);
    Ok(report)
}

fn threshold_q(d: f64, alpha: f64, beta: f64, p: f64) -> f64 {
    let p_conj = if p <= 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    (2.0 * d - 2.0 * alpha + beta) * p_conj / beta
}

fn threshold_verdict(report: &mut ExperimentReport, q: f64, threshold: f64, ratios: &[f64]) {
    let predicted = q < threshold;
    let observed = strictly_increasing(ratios);
    report.scalar("threshold_q", threshold);
    report.verdict(
        "trend_matches_threshold",
        predicted == observed,
        "trend_rel",
        format!("q = {q}, threshold {threshold:.4}, predicted increasing {predicted}, observed {observed}"),
    );
}

/// `‖(f_n dμ)^‖_{L^q} / ‖f_n‖_{L^p(μ)}` for the geometric restriction bundle.
///
/// The numerator is bounded below by the minimum of `|(f_n dμ)^|` over certified Bohr points
/// times the Bohr volume bound.
pub fn restriction_experiment_geometric(
    bundle: &RestrictionGeoBundle,
    p: f64,
    q: f64,
    bohr_c: f64,
    max_points: usize,
) -> Result<ExperimentReport> {
    let big_n = bundle.family.len();
    if bundle.f_data.len() != big_n {
        return Err(Error::MissingTestData("f_n dμ_N".into()));
    }
    let d = bundle.scales.d();
    let theta = 2f64.powi(-(d as i32) - 2);
    let mut report = ExperimentReport::new(
        "restriction_experiment_geometric",
        json!({ "p": p, "q": q, "bohr_c": bohr_c, "theta": theta, "max_points": max_points }),
        Some(bundle.seed),
    );
    report.tolerance("trend_rel", 0.05).tolerance("exact", 0.0);
    let region = ExponentRegion::new(bundle.alpha.clone(), bundle.beta.clone(), d)?;
    report.scalar("q_star", rational_to_f64(&region.q_star()));
    let mu = &bundle.family[big_n - 1];
    let r = bundle.scales.r() as f64;
    let mut ratios = Vec::new();
    let mut shift_ok = true;
    let mut resonance_ok = true;
    for n in 1..=big_n {
        let g = &bundle.f_data[n - 1];
        let tau = rational_to_f64(&g.total_mass());
        let lp: f64 = g
            .atoms()
            .map(|(a, w)| {
                let m = mu.mass_at(a);
                let f = rational_to_f64(&(w / &m));
                rational_to_f64(&m) * f.powf(p)
            })
            .sum::<f64>()
            .powf(1.0 / p);
        let bohr = bohr_points(bundle, n, bohr_c, theta, 5, max_points, bundle.seed ^ n as u64)?;
        report.push("bohr_m", n, bohr.m as f64).push("bohr_points", n, bohr.points.len() as f64);
        if bohr.points.is_empty() {
            report.push("ratio", n, f64::NAN);
            continue;
        }
        let table = FourierTable::new(g);
        let vals = table.eval_batch(&bohr.points);
        let mm_n = bundle.scales.mm_f64(n);
        let floor = bundle.resonance_floor(n);
        let mut min_abs = f64::INFINITY;
        for (xi, v) in bohr.points.iter().zip(&vals) {
            let closed = resonance_closed_form(bundle, n, xi);
            let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let bound = tau * 2.0 * std::f64::consts::PI * norm * (r + 1.0) * (d as f64).sqrt() / mm_n;
            shift_ok &= (v - closed).norm() <= bound * (1.0 + 1e-9) + 1e-12;
            resonance_ok &= closed.norm() >= floor * (1.0 - 1e-12);
            min_abs = min_abs.min(v.norm());
        }
        let lq = min_abs * bohr.volume_lower.powf(1.0 / q);
        let ratio = lq / lp;
        report
            .push("ratio", n, ratio)
            .push("fn_lp", n, lp)
            .push("fhat_min", n, min_abs)
            .push("resonance_floor", n, floor)
            .push("bohr_volume", n, bohr.volume_lower);
        ratios.push(ratio);
    }
    report.verdict("small_shift", shift_ok, "exact", "|(f_n dμ)^ - (μ̃_n ∗ η̄_n)^| ≤ τ(E_n) 2π|ξ|(r+1)√d/𝔐_n at Bohr points");
    report.verdict("resonance_floor", resonance_ok, "exact", "|(μ̃_n ∗ η̄_n)^| ≥ 2^{-dn} ∏ M̄_k^d/T_k at Bohr points");
    let (alpha, beta) = (bundle.alpha.to_f64(), bundle.beta.to_f64());
    threshold_verdict(&mut report, q, threshold_q(d as f64, alpha, beta, p), &ratios);
    Ok(report)
}

/// `|𝐈_n| = |{t ∈ [-w, w] : dist(2^{-n} t, ρ_n ℤ) ≤ 1/4}|`.
pub fn resonance_interval_measure(n: usize, rho: u64, w: f64) -> f64 {
    let period = 2f64.powi(n as i32) * rho as f64;
    let half = 2f64.powi(n as i32) / 4.0;
    let kmax = ((w + half) / period).floor() as i64;
    (-kmax..=kmax)
        .map(|k| {
            let c = k as f64 * period;
            ((c + half).min(w) - (c - half).max(-w)).max(0.0)
        })
        .sum()
}

/// Restriction ratios `‖(f_n dμ)^‖_{L^q} / ‖f_n‖_{L^p(μ)}` with `f_n = W 1_{supp ν_n}` on the mixture.
pub fn restriction_experiment_nongeometric(
    bundle: &RestrictionNongeoBundle,
    p: f64,
    q: f64,
    samples: usize,
) -> Result<ExperimentReport> {
    let d = bundle.sigma.scales.d();
    let mut report = ExperimentReport::new(
        "restriction_experiment_nongeometric",
        json!({ "p": p, "q": q, "samples": samples }),
        Some(bundle.seed),
    );
    report.tolerance("trend_rel", 0.05).tolerance("exact", 0.0);
    if bundle.nu.is_empty() {
        return Err(Error::MissingTestData("ν_n".into()));
    }
    let region = ExponentRegion::new(bundle.alpha.clone(), bundle.beta.clone(), d)?;
    report.scalar("q_star", rational_to_f64(&region.q_star()));
    let floor = 2f64.powi(-(d as i32)) / 2.0;
    let mut ratios = Vec::new();
    let mut floor_ok = true;
    let mut rng = Stream::new(bundle.seed).child("interval-samples").rng();
    for (lv, (nu, w)) in bundle.levels.iter().zip(bundle.nu.iter().zip(&bundle.weights)) {
        let n = lv.n;
        let wf = rational_to_f64(w);
        let width = lv.box_half_width;
        let len = resonance_interval_measure(n, lv.rho, width);
        let volume = len.powi(d as i32);
        let period = 2f64.powi(n as i32) * lv.rho as f64;
        let half = 2f64.powi(n as i32) / 4.0;
        let kmax = ((width + half) / period).floor() as i64;
        let xis: Vec<Vec<f64>> = (0..samples)
            .map(|_| {
                (0..d)
                    .map(|_| loop {
                        let t = rng.gen_range(-kmax..=kmax) as f64 * period + rng.gen_range(-half..=half);
                        if t.abs() <= width {
                            break t;
                        }
                    })
                    .collect()
            })
            .collect();
        let table = FourierTable::new(nu);
        let min_abs = table.eval_batch(&xis).iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        floor_ok &= min_abs >= floor;
        // ‖f_n‖_{L^p(μ)} = W μ(supp ν_n)^{1/p} and |(f_n dμ)^| = W w_n |ν̂_n| with W the normalizer.
        let lp = wf.powf(1.0 / p);
        let lq = wf * min_abs * volume.powf(1.0 / q);
        let ratio = lq / lp;
        // ratio carries the explicit weight factor n^{-2/p'}; the trend is read with it removed.
        let p_conj = if p <= 1.0 { f64::INFINITY } else { p / (p - 1.0) };
        let compensated = ratio * (n as f64).powf(2.0 / p_conj);
        let nominal = 4f64.powi(n as i32) / lv.rho as f64;
        report
            .push("ratio", n, ratio)
            .push("nu_hat_min", n, min_abs)
            .push("interval_measure", n, len)
            .push("interval_vs_formula", n, len / nominal)
            .push("compensated_ratio", n, compensated);
        ratios.push(compensated);
    }
    report.verdict("nu_hat_floor", floor_ok, "exact", format!("|ν̂_n| ≥ {floor} on sampled 𝐈_n^d"));
    let (alpha, beta) = (bundle.alpha.to_f64(), bundle.beta.to_f64());
    threshold_verdict(&mut report, q, threshold_q(d as f64, alpha, beta, p), &ratios);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_measure_counts_whole_windows() {
        // period 4, windows of length 1 centred at multiples of 4
        assert_eq!(resonance_interval_measure(1, 2, 8.5), 5.0);
        assert_eq!(resonance_interval_measure(1, 2, 0.25), 0.5);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
}
