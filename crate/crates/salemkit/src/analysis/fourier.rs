use num::complex::Complex64;
use num::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde_json::json;

use super::report::{log_log_slope, ExperimentReport};
use crate::measures::{DiscreteMeasure, FourierTable};
use crate::samplers::{char_m, Stream};
use crate::scales::ScaleSequence;
use crate::{Error, Result};

/// Frequency sampling for [`fourier_decay_profile`].
#[derive(Clone, Debug, PartialEq)]
pub struct DecaySpec {
    pub samples_per_annulus: usize,
    pub seed: u64,
    /// Declared bound `B` on `|ξ|^e |μ̂(ξ)|`.
    pub declared: f64,
}

fn random_direction<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Per dyadic annulus `2^j ≤ |ξ| < 2^{j+1}` inside `[1, 𝔐/2]`: max and median of `|ξ|^e |μ̂(ξ)|`.
pub fn fourier_decay_profile(mu: &DiscreteMeasure, exponent: f64, spec: &DecaySpec) -> Result<ExperimentReport> {
    let cap = mu.scale_f64() / 2.0;
    let mut report = ExperimentReport::new(
        "fourier_decay_profile",
        json!({ "exponent": exponent, "samples_per_annulus": spec.samples_per_annulus, "cap": cap }),
        Some(spec.seed),
    );
    report.tolerance("declared_bound", spec.declared);
    let table = FourierTable::new(mu);
    let mut rng = Stream::new(spec.seed).child("decay").rng();
    let d = mu.d();
    let mut maxima = Vec::new();
    let mut radii = Vec::new();
    let mut j = 0;
    while 2f64.powi(j) <= cap {
        let lo = 2f64.powi(j);
        let hi = (2.0 * lo).min(cap.max(lo));
        let xis: Vec<Vec<f64>> = (0..spec.samples_per_annulus)
            .map(|_| {
                let rad = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                random_direction(d, &mut rng).into_iter().map(|x| x * rad).collect()
            })
            .collect();
        let mut vals: Vec<f64> = table
            .eval_batch(&xis)
            .iter()
            .zip(&xis)
            .map(|(v, xi)| v.norm() * xi.iter().map(|x| x * x).sum::<f64>().sqrt().powf(exponent))
            .collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        let max = *vals.last().unwrap_or(&0.0);
        let median = vals.get(vals.len() / 2).copied().unwrap_or(0.0);
        report.push("annulus_max", j as usize, max).push("annulus_median", j as usize, median);
        maxima.push(max);
        radii.push(lo);
        j += 1;
    }
    let overall = maxima.iter().cloned().fold(0.0, f64::max);
    report.scalar("max", overall);
    report.scalar("slope", log_log_slope(&radii, &maxima).unwrap_or(f64::NAN));
    report.verdict("bounded", overall <= spec.declared, "declared_bound", format!("max {overall:.6}"));
    Ok(report)
}

/// Net for the increment supremum: spacing `c 𝔐_n^{-e}`, coarsened to keep `(P 𝔐_n)^d ≤ max_points`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetSpec {
    pub spacing_const: f64,
    pub max_points: usize,
}

impl NetSpec {
    pub fn standard(r: u32, d: usize) -> Self {
        NetSpec { spacing_const: 1.0 / (16.0 * (r as f64 + 1.0) * d as f64), max_points: 1 << 22 }
    }

    /// Oversampling factor `P`; the net is `P^{-1} ℤ^d` modulo `𝔐_n`.
    pub fn oversampling(&self, mm: f64, exponent: f64, d: usize) -> usize {
        let spacing = self.spacing_const * mm.powf(-exponent);
        let wanted = (1.0 / spacing).ceil().max(1.0);
        let budget = (self.max_points as f64).powf(1.0 / d as f64) / mm;
        wanted.min(budget.floor()).max(1.0) as usize
    }
}

/// Increment supremum at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementSup {
    pub level: usize,
    pub oversampling: usize,
    pub net_points: usize,
    /// `sup |𝔇_n|` over the net.
    pub sup: f64,
    /// `𝔐_n^e sup |𝔇_n|`.
    pub scaled_sup: f64,
}

fn fft_nd(data: &mut [Complex64], side: usize, d: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(side);
    if d == 1 {
        fft.process(data);
        return;
    }
    let total = data.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); side];
    for axis in 0..d {
        let stride = side.pow((d - 1 - axis) as u32);
        for start in 0..total {
            if (start / stride) % side != 0 {
                continue;
            }
            for (k, b) in buf.iter_mut().enumerate() {
                *b = data[start + k * stride];
            }
            fft.process(&mut buf);
            for (k, b) in buf.iter().enumerate() {
                data[start + k * stride] = *b;
            }
        }
    }
}

fn place(mu: &DiscreteMeasure, mult: i64, side: usize, d: usize) -> Vec<Complex64> {
    let mut data = vec![Complex64::new(0.0, 0.0); side.pow(d as u32)];
    let s = side as i64;
    for (p, m) in mu.points().iter().zip(mu.masses_f64()) {
        let mut idx = 0usize;
        for &c in p {
            idx = idx * side + (c * mult).rem_euclid(s) as usize;
        }
        data[idx] += m;
    }
    data
}

/// `sup_ξ |𝔇_n(ξ)|` on the net, via one FFT of each of `μ_n` and `μ_{n-1}`.
pub fn increment_sup(
    family: &[DiscreteMeasure],
    scales: &ScaleSequence,
    n: usize,
    exponent: f64,
    net: &NetSpec,
) -> Result<IncrementSup> {
    let d = scales.d();
    let mm = scales.mm(n).to_usize().ok_or(Error::LatticeOverflow { level: n })?;
    let p = net.oversampling(mm as f64, exponent, d);
    let side = p * mm;
    if side.pow(d as u32) > net.max_points.max(mm.pow(d as u32)) {
        return Err(Error::InvalidParameters(format!("net of side {side} too large at level {n}")));
    }
    let mu_n = &family[n - 1];
    let prev = if n == 1 {
        DiscreteMeasure::dirac(d, 0, scales.mm(0).clone())
    } else {
        family[n - 2].clone()
    };
    let mut a = place(mu_n, 1, side, d);
    let mut b = place(&prev, scales.m(n) as i64, side, d);
    fft_nd(&mut a, side, d);
    fft_nd(&mut b, side, d);
    let step = 1.0 / (p as f64 * mm as f64);
    let sup = (0..a.len())
        .into_par_iter()
        .map(|idx| {
            let mut t = vec![0.0; d];
            let mut rest = idx;
            for l in (0..d).rev() {
                t[l] = (rest % side) as f64 * step;
                rest /= side;
            }
            (a[idx] - char_m(scales, n, &t) * b[idx]).norm()
        })
        .reduce(|| 0.0, f64::max);
    Ok(IncrementSup {
        level: n,
        oversampling: p,
        net_points: side.pow(d as u32),
        sup,
        scaled_sup: sup * (mm as f64).powf(exponent),
    })
}

/// Hoeffding envelope `4 #net exp(-B² ∏T_k 𝔐_n^{-α} / 16) + slack`.
pub fn hoeffding_envelope(net_points: usize, b: f64, prod_t: f64, mm: f64, alpha: f64, slack: f64) -> f64 {
    4.0 * net_points as f64 * (-(b * b) * prod_t * mm.powf(-alpha) / 16.0).exp() + slack
}

/// Exceedance frequencies of `𝔐_n^e sup|𝔇_n| > B` over replicas, against the envelope.
pub fn increment_concentration(
    replicas: &[Vec<DiscreteMeasure>],
    scales: &ScaleSequence,
    profile: &[u64],
    exponent: f64,
    b_grid: &[f64],
    net: &NetSpec,
) -> Result<ExperimentReport> {
    let depth = replicas.first().map(|f| f.len()).ok_or(Error::EmptySchedule)?;
    let slack = 0.05;
    let mut report = ExperimentReport::new(
        "increment_concentration",
        json!({ "replicas": replicas.len(), "exponent": exponent, "b_grid": b_grid, "spacing_const": net.spacing_const, "max_points": net.max_points }),
        None,
    );
    report.tolerance("envelope_slack", slack).tolerance("mass_bound", 2.0);
    let mut prod_t = 1.0;
    let mut mass_ok = true;
    for n in 1..=depth {
        prod_t *= profile[n - 1] as f64;
        let sups: Vec<IncrementSup> = replicas
            .iter()
            .map(|fam| increment_sup(fam, scales, n, exponent, net))
            .collect::<Result<_>>()?;
        let mm = scales.mm_f64(n);
        let net_points = sups[0].net_points;
        let worst = sups.iter().map(|s| s.scaled_sup).fold(0.0, f64::max);
        mass_ok &= sups.iter().all(|s| s.sup <= 2.0 + 1e-12);
        report.push("max_scaled_sup", n, worst).push("net_points", n, net_points as f64);
        for &b in b_grid {
            let frac = sups.iter().filter(|s| s.scaled_sup > b).count() as f64 / replicas.len() as f64;
            let env = hoeffding_envelope(net_points, b, prod_t, mm, 2.0 * exponent, slack);
            report.push(&format!("exceedance_b{b}"), n, frac).push(&format!("envelope_b{b}"), n, env);
            report.verdict(
                &format!("level{n}_b{b}"),
                frac <= env,
                "envelope_slack",
                format!("exceedance {frac:.4} vs envelope {env:.4e}"),
            );
        }
    }
    report.verdict("increment_mass_bound", mass_ok, "mass_bound", "|𝔇_n| ≤ 2 on every net");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::make_scales;
    use num::BigUint;

    #[test]
    fn dirac_profile_is_flat() {
        let mu = DiscreteMeasure::dirac(1, 1, BigUint::from(64u32));
        let r = fourier_decay_profile(&mu, 0.0, &DecaySpec { samples_per_annulus: 8, seed: 1, declared: 1.0 + 1e-12 })
            .unwrap();
        assert!(r.values("annulus_max").iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fft_matches_direct_increment() {
        let s = make_scales(1, 1, &[4, 5]).unwrap();
        let mu1 = DiscreteMeasure::uniform(1, 1, BigUint::from(4u32), &[vec![0], vec![2]]).unwrap();
        let mu2 = DiscreteMeasure::uniform(1, 2, BigUint::from(20u32), &[vec![1], vec![8], vec![11]]).unwrap();
        let fam = vec![mu1.clone(), mu2.clone()];
        let net = NetSpec { spacing_const: 0.25, max_points: 1 << 10 };
        let got = increment_sup(&fam, &s, 2, 0.0, &net).unwrap();
        let step = 1.0 / (got.oversampling as f64);
        let mut direct: f64 = 0.0;
        for j in 0..got.net_points {
            let xi = [j as f64 * step];
            let v = crate::measures::increment_d(&mu2, &mu1, &s, 2, &xi).unwrap();
            direct = direct.max(v.norm());
        }
        assert!((got.sup - direct).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_fft() {
        let s = make_scales(2, 1, &[4]).unwrap();
        let mu = DiscreteMeasure::uniform(2, 1, BigUint::from(4u32), &[vec![0, 1], vec![3, 2]]).unwrap();
        let net = NetSpec { spacing_const: 0.5, max_points: 1 << 10 };
        let got = increment_sup(&[mu.clone()], &s, 1, 0.0, &net).unwrap();
        let p = got.oversampling as f64;
        let side = (got.net_points as f64).sqrt() as usize;
        let mut direct: f64 = 0.0;
        for i in 0..side {
            for j in 0..side {
                let xi = [i as f64 / p, j as f64 / p];
                let t = [xi[0] / 4.0, xi[1] / 4.0];
                let v = crate::measures::fourier_eval(&mu, &xi) - char_m(&s, 1, &t);
                direct = direct.max(v.norm());
            }
        }
        assert!((got.sup - direct).abs() < 1e-12);
    }
}
