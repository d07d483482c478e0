use num::complex::Complex64;
use num::{BigInt, BigRational, One, ToPrimitive};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::json;

use super::report::{log_log_slope, ExperimentReport};
use crate::constructions::RestrictionGeoBundle;
use crate::measures::{convolve, difference_set, DiscreteMeasure, FourierTable, GridSpec};
use crate::samplers::{dirichlet, Stream};
use crate::scales::{rational_to_f64, ScaleSequence};
use crate::{Error, Mass, Result};

/// Certified frequencies of `𝐈_n^d` inside the box `[-cθ^n 𝔐_n, cθ^n 𝔐_n]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct BohrSet {
    pub level: usize,
    /// Largest `m` with `4 𝔐_m ≤ c θ^n 𝔐_n`.
    pub m: usize,
    pub half_width: f64,
    pub points: Vec<Vec<f64>>,
    /// Points of `E_m^d` that failed certification (should be zero).
    pub rejected: usize,
    /// `(A/4)^d ∏_{k≤m} Q̄_k^d`.
    pub volume_lower: f64,
    /// Minimum gap between distinct `Σ L_k a_k`, which should exceed `A/4`.
    pub min_gap: f64,
    /// Set when `m = 0` and `E_m` degenerates to an interval sample.
    pub degenerate: bool,
}

/// Whether `dist(ξ_ℓ / L_k, ℤ) < 1/(2 M̄_k M̃_k)` for all `k ≤ n`, `ℓ ≤ d`.
pub fn in_resonance_set(bundle: &RestrictionGeoBundle, n: usize, xi: &[f64]) -> bool {
    bundle.resonance[..n].iter().all(|res| {
        xi.iter().all(|&x| {
            let t = x / res.spacing as f64;
            (t - t.round()).abs() < res.window
        })
    })
}

/// The point family `t + Σ_{k≤m} L_k a_k`, with `|t| ≤ A/8` sampled at `t_samples` positions.
pub fn bohr_points(
    bundle: &RestrictionGeoBundle,
    n: usize,
    c: f64,
    theta: f64,
    t_samples: usize,
    max_points: usize,
    seed: u64,
) -> Result<BohrSet> {
    if n == 0 || n > bundle.levels.len() {
        return Err(Error::DepthExceedsScales { requested: n, available: bundle.levels.len() });
    }
    let d = bundle.scales.d();
    let half = c * theta.powi(n as i32) * bundle.scales.mm_f64(n);
    let m = (0..=n).rev().find(|&m| 4.0 * bundle.scales.mm_f64(m) <= half).unwrap_or(0);
    let a = bundle.a as f64;
    let mut lattice = vec![0i64];
    for k in 0..m {
        let l = bundle.resonance[k].spacing as i64;
        let q = bundle.levels[k].big_q_bar;
        lattice = lattice.iter().flat_map(|&s| (0..q).map(move |j| s + l * j)).collect();
    }
    lattice.sort();
    let min_gap = lattice.windows(2).map(|w| (w[1] - w[0]) as f64).fold(f64::INFINITY, f64::min);
    let ts: Vec<f64> = (0..t_samples.max(1))
        .map(|i| {
            if t_samples <= 1 {
                0.0
            } else {
                -a / 8.0 + a / 4.0 * i as f64 / (t_samples - 1) as f64
            }
        })
        .collect();
    let coord: Vec<f64> = lattice.iter().flat_map(|&s| ts.iter().map(move |t| s as f64 + t)).collect();
    let total = coord.len().pow(d as u32);
    let mut rng = Stream::new(seed).child("bohr").rng();
    let mut indices: Vec<usize> = (0..total).collect();
    if total > max_points {
        indices.shuffle(&mut rng);
        indices.truncate(max_points);
        indices.sort();
    }
    let mut points = Vec::with_capacity(indices.len());
    let mut rejected = 0;
    for idx in indices {
        let mut rest = idx;
        let mut xi = vec![0.0; d];
        for l in (0..d).rev() {
            xi[l] = coord[rest % coord.len()];
            rest /= coord.len();
        }
        if xi.iter().all(|x| x.abs() <= half) && in_resonance_set(bundle, n, &xi) {
            points.push(xi);
        } else {
            rejected += 1;
        }
    }
    let qprod: f64 = bundle.levels[..m].iter().map(|l| l.big_q_bar as f64).product();
    Ok(BohrSet {
        level: n,
        m,
        half_width: half,
        points,
        rejected,
        volume_lower: (a / 4.0 * qprod).powi(d as i32),
        min_gap,
        degenerate: m == 0,
    })
}

/// `∏_k (M̄_k^d / T_k) ∏_ℓ 𝖣_{M̄_k M̃_k}(ξ_ℓ / L_k)`.
pub fn resonance_closed_form(bundle: &RestrictionGeoBundle, n: usize, xi: &[f64]) -> Complex64 {
    let d = bundle.scales.d() as i32;
    let mut acc = Complex64::new(1.0, 0.0);
    for (lv, res) in bundle.levels[..n].iter().zip(&bundle.resonance) {
        acc *= (lv.m_bar as f64).powi(d) / lv.t as f64;
        for &x in xi {
            acc *= dirichlet((lv.m_bar * lv.m_tilde) as u64, x / res.spacing as f64);
        }
    }
    acc
}

/// `|(μ̃_n ∗ η̄_n)^(ξ)| ≥ 2^{-dn} ∏ M̄_k^d / T_k` at every `ξ`, with a closed-form cross-check.
pub fn resonance_check(bundle: &RestrictionGeoBundle, n: usize, xis: &[Vec<f64>]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("resonance_check", json!({ "level": n, "points": xis.len() }), Some(bundle.seed));
    report.tolerance("closed_form_rel", 1e-9).tolerance("exact", 0.0);
    let product = convolve(&bundle.grid_family[n - 1], &bundle.eta_family[n - 1])?;
    let table = FourierTable::new(&product);
    let floor_exact: Mass =
        bundle.arithmetic_mass(n) / BigRational::from_integer(BigInt::one() << (bundle.scales.d() * n));
    let floor = rational_to_f64(&floor_exact);
    let direct = table.eval_batch(xis);
    let mut worst_rel: f64 = 0.0;
    let mut min_abs = f64::INFINITY;
    let mut below = 0;
    for (xi, v) in xis.iter().zip(&direct) {
        let closed = resonance_closed_form(bundle, n, xi);
        worst_rel = worst_rel.max((closed - v).norm() / closed.norm().max(f64::MIN_POSITIVE));
        min_abs = min_abs.min(v.norm());
        if v.norm() < floor {
            below += 1;
        }
    }
    report.scalar("floor", floor).scalar("min_abs", min_abs).scalar("max_rel_diff", worst_rel);
    report.scalar("mass_at_zero", table.eval(&vec![0.0; bundle.scales.d()]).norm());
    report.verdict("closed_form", worst_rel <= 1e-9, "closed_form_rel", format!("max relative difference {worst_rel:.3e}"));
    report.verdict("lower_bound", below == 0, "exact", format!("{below} of {} points below {floor:.6e}", xis.len()));
    Ok(report)
}

/// Per-coordinate Fejér tent `∏ max(0, 1 - |ξ_ℓ|/(2w))`: support `[-2w, 2w]^d`, at least 1/2 on `[-w, w]^d`.
pub fn tent(xi: &[f64], w: f64) -> f64 {
    xi.iter().map(|x| (1.0 - x.abs() / (2.0 * w)).max(0.0)).product()
}

/// Exact energy identities and windowed energies `W_n = φ_n|μ̃̂_n|²`, `V_n = φ_n|μ̃̂_n|⁴`.
pub fn wn_vn_energy(
    family: &[DiscreteMeasure],
    scales: &ScaleSequence,
    n: usize,
    c: f64,
    grid_points: usize,
) -> Result<ExperimentReport> {
    let mu = &family[n - 1];
    let d = scales.d();
    let mm = scales.mm_rational(n);
    let mm_d = num::pow::pow(mm.clone(), d);
    let mut report = ExperimentReport::new(
        "wn_vn_energy",
        json!({ "level": n, "c": c, "grid_points": grid_points }),
        None,
    );
    report.tolerance("exact", 0.0).tolerance("pointwise", 1e-12).tolerance("quadrature_rel", 1e-9);

    let e_count = mu.len();
    let sum_sq: Mass = mu.masses().iter().map(|m| m * m).sum();
    let parseval = &mm_d * &sum_sq;
    let expected = &mm_d / BigRational::from_integer(BigInt::from(e_count));
    report.verdict("parseval_l2", parseval == expected, "exact", format!("∫|μ̂|² = {parseval}, 𝔐^d/#E = {expected}"));

    let auto = convolve(mu, &mu.reflect())?;
    let diff = difference_set(mu.points());
    let energy: Mass = auto.masses().iter().map(|m| m * m).sum();
    let cs_floor = BigRational::new(BigInt::one(), BigInt::from(diff.len()));
    report.scalar("l4_integral", rational_to_f64(&(&mm_d * &energy)));
    report.scalar("difference_set_size", diff.len() as f64);
    report.verdict(
        "cauchy_schwarz",
        energy >= cs_floor && auto.len() == diff.len(),
        "exact",
        format!("Σ(μ∗μ~)² = {energy} ≥ 1/{}", diff.len()),
    );

    // Integer frequencies over one period integrate trigonometric polynomials of lower degree exactly.
    let period = mm.to_integer().to_usize().unwrap_or(usize::MAX);
    if period.checked_pow(d as u32).map_or(false, |p| p <= 1 << 22) {
        let table = FourierTable::new(mu);
        let idx: Vec<Vec<f64>> = (0..period.pow(d as u32))
            .map(|i| {
                let mut rest = i;
                (0..d)
                    .map(|_| {
                        let v = (rest % period) as f64;
                        rest /= period;
                        v
                    })
                    .collect()
            })
            .collect();
        let vals = table.eval_batch(&idx);
        let l2: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
        let l4: f64 = vals.iter().map(|v| v.norm_sqr().powi(2)).sum();
        let e2 = rational_to_f64(&parseval);
        let e4 = rational_to_f64(&(&mm_d * &energy));
        let rel = ((l2 - e2) / e2).abs().max(((l4 - e4) / e4).abs());
        report.scalar("periodic_sum_rel_diff", rel);
        report.verdict("periodic_sums", rel <= 1e-9, "quadrature_rel", format!("relative difference {rel:.3e}"));
    }

    let w = c * scales.mm_f64(n);
    let per_axis = (grid_points as f64).powf(1.0 / d as f64).round().max(1.0);
    let h = 4.0 * w / per_axis;
    let grid = GridSpec::midpoints(d, -2.0 * w, 2.0 * w, h);
    let table = FourierTable::new(mu);
    let vals: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let xi = grid.point(i);
            let a2 = table.eval(&xi).norm_sqr();
            let phi = tent(&xi, w);
            (phi * a2, phi * a2 * a2)
        })
        .collect();
    let ok = vals.iter().all(|&(wv, vv)| vv >= -1e-12 && vv <= wv + 1e-12 && wv <= 1.0 + 1e-12);
    let cell = h.powi(d as i32);
    let int_w: f64 = vals.iter().map(|v| v.0).sum::<f64>() * cell;
    let int_v: f64 = vals.iter().map(|v| v.1).sum::<f64>() * cell;
    report.scalar("integral_w", int_w).scalar("integral_v", int_v).scalar("grid_size", grid.len() as f64);
    report.verdict("pointwise_window", ok, "pointwise", "0 ≤ V_n ≤ W_n ≤ 1 on the grid");
    Ok(report)
}

/// `∫W_n` across levels with a slope fit against `𝔐_n`; the reference exponent is `d - log #E_N / log 𝔐_N`.
pub fn energy_series(
    family: &[DiscreteMeasure],
    scales: &ScaleSequence,
    c: f64,
    grid_points: usize,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("energy_series", json!({ "c": c, "grid_points": grid_points }), None);
    report.tolerance("exact", 0.0).tolerance("pointwise", 1e-12).tolerance("quadrature_rel", 1e-9);
    let mut ws = Vec::new();
    let mut ms = Vec::new();
    for n in 1..=family.len() {
        let r = wn_vn_energy(family, scales, n, c, grid_points)?;
        ws.push(r.scalars["integral_w"]);
        ms.push(scales.mm_f64(n));
        report.push("integral_w", n, r.scalars["integral_w"]).push("integral_v", n, r.scalars["integral_v"]);
        report.absorb(&format!("level{n}"), &r);
    }
    let big_n = family.len();
    let realized = scales.d() as f64 - (family[big_n - 1].len() as f64).ln() / ms[big_n - 1].ln();
    report.scalar("slope_w", log_log_slope(&ms, &ws).unwrap_or(f64::NAN));
    report.scalar("realized_exponent", realized);
    Ok(report)
}
