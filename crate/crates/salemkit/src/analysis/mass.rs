use std::cmp::Ordering;

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::report::{log_log_slope, ExperimentReport};
use crate::constructions::{HeavyCoreMeasure, SalemMeasure};
use crate::measures::{ball_mass, ball_mass_at_atom_sq, DiscreteMeasure};
use crate::samplers::Stream;
use crate::scales::{lattice_point, rational_to_f64, Exponent, ScaleSequence};
use crate::{Error, Mass, Point, Result};

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Centers for a Frostman sweep: atoms of `mu` and uniform points of its bounding box.
pub fn center_schedule(mu: &DiscreteMeasure, count: usize, seed: u64) -> Vec<Vec<BigRational>> {
    let mut rng = Stream::new(seed).child("centers").rng();
    let scale = BigInt::from(mu.scale().clone());
    let pts = mu.points();
    if pts.is_empty() || count == 0 {
        return Vec::new();
    }
    let d = mu.d();
    let lo: Vec<i64> = (0..d).map(|l| pts.iter().map(|p| p[l]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..d).map(|l| pts.iter().map(|p| p[l]).max().unwrap()).collect();
    let fine = &scale * BigInt::from(4);
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                let a = &pts[rng.gen_range(0..pts.len())];
                a.iter().map(|&c| BigRational::new(BigInt::from(c), scale.clone())).collect()
            } else {
                (0..d)
                    .map(|l| {
                        let v = rng.gen_range(4 * lo[l] - 4..=4 * hi[l] + 4);
                        BigRational::new(BigInt::from(v), fine.clone())
                    })
                    .collect()
            }
        })
        .collect()
}

/// `C_sup = max μ_N(B(x, ρ)) / ρ^target` over the schedule, with a log-log slope fit.
pub fn frostman_fit(
    family: &[DiscreteMeasure],
    target: f64,
    centers: &[Vec<BigRational>],
    radii: &[BigRational],
    declared: f64,
) -> Result<ExperimentReport> {
    let mu = family.last().ok_or(Error::EmptySchedule)?;
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let mut report = ExperimentReport::new(
        "frostman_fit",
        json!({ "target": target, "centers": centers.len(), "radii": radii.iter().map(|r| r.to_string()).collect::<Vec<_>>(), "declared": declared }),
        None,
    );
    report.tolerance("declared_constant", declared);
    let mut sups = Vec::with_capacity(radii.len());
    let mut c_sup: f64 = 0.0;
    for (i, rho) in radii.iter().enumerate() {
        let best = centers
            .par_iter()
            .map(|x| ball_mass(mu, x, rho))
            .reduce(Mass::zero, |a, b| if b > a { b } else { a });
        let r = rational_to_f64(rho);
        let m = rational_to_f64(&best);
        let c = m / r.powf(target);
        c_sup = c_sup.max(c);
        sups.push(m);
        report.push("sup_ball_mass", i, m).push("constant", i, c);
    }
    let rs: Vec<f64> = radii.iter().map(rational_to_f64).collect();
    let slope = log_log_slope(&rs, &sups).unwrap_or(f64::NAN);
    report.scalar("c_sup", c_sup).scalar("slope", slope);
    report.verdict(
        "frostman_constant",
        c_sup <= declared,
        "declared_constant",
        format!("C_sup = {c_sup:.6} against {declared:.6}"),
    );
    Ok(report)
}

/// `coef · 𝔐_k^{power}`, compared exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct MassFloor {
    pub coef: Mass,
    pub power: Exponent,
}

impl MassFloor {
    pub fn constant(coef: Mass) -> Self {
        MassFloor { coef, power: Exponent::integer(0) }
    }

    /// Whether `mass ≥ coef · base^{power}`.
    pub fn holds(&self, mass: &Mass, base: &BigRational) -> bool {
        if self.coef.is_zero() {
            return true;
        }
        if !mass.is_positive() {
            return false;
        }
        self.power.cmp_pow(&(mass / &self.coef), base) != Ordering::Less
    }

    pub fn to_f64(&self, base: f64) -> f64 {
        rational_to_f64(&self.coef) * base.powf(self.power.to_f64())
    }
}

/// Lattice points `a / 𝔐_k` of `μ_k` with the floor expected at radius `√radius_sq / 𝔐_k`.
#[derive(Clone, Debug)]
pub struct LowerMassPoints {
    pub level: usize,
    pub points: Vec<Point>,
    pub floor: MassFloor,
}

/// Minimum of `μ_N(B(x, ρ_k)) / ρ_k^{exponent+ε}` over the points, and exact floor checks.
pub fn lower_mass_check(
    family: &[DiscreteMeasure],
    scales: &ScaleSequence,
    inputs: &[LowerMassPoints],
    radius_sq: &BigRational,
    exponent: f64,
    eps: &[f64],
) -> Result<ExperimentReport> {
    let mu = family.last().ok_or(Error::EmptySchedule)?;
    let big_n = family.len();
    let mut report = ExperimentReport::new(
        "lower_mass_check",
        json!({ "exponent": exponent, "eps": eps, "radius_sq": radius_sq.to_string() }),
        None,
    );
    report.tolerance("exact", 0.0);
    let mut all_floor = true;
    let mut min_ratio = vec![f64::INFINITY; eps.len()];
    let mut first_fail = None;
    for input in inputs {
        let k = input.level;
        let member = family.get(k - 1).ok_or(Error::EmptySchedule)?;
        let lift = scales.mm_ratio(k, big_n)?;
        let mm = scales.mm_rational(k);
        let rho_sq = radius_sq / (&mm * &mm);
        let rho = rational_to_f64(&rho_sq).sqrt();
        let results: Vec<Result<(Mass, bool)>> = input
            .points
            .par_iter()
            .map(|a| {
                if member.mass_at(a).is_zero() {
                    return Err(Error::PointOffSupport(a.clone()));
                }
                let c: Point = a.iter().map(|&v| v * lift).collect();
                let m = ball_mass_at_atom_sq(mu, &c, &rho_sq);
                let ok = input.floor.holds(&m, &mm);
                Ok((m, ok))
            })
            .collect();
        let mut level_min = f64::INFINITY;
        for (a, r) in input.points.iter().zip(results) {
            let (m, ok) = r?;
            if !ok {
                all_floor = false;
                first_fail.get_or_insert_with(|| format!("level {k}, point {a:?}, mass {m}"));
            }
            let mf = rational_to_f64(&m);
            level_min = level_min.min(mf);
            for (j, e) in eps.iter().enumerate() {
                min_ratio[j] = min_ratio[j].min(mf / rho.powf(exponent + e));
            }
        }
        report.push("min_ball_mass", k, level_min);
        report.push("floor", k, input.floor.to_f64(scales.mm_f64(k)));
    }
    for (e, r) in eps.iter().zip(&min_ratio) {
        report.scalar(&format!("min_ratio_eps_{e}"), *r);
    }
    report.verdict(
        "floor_exact",
        all_floor,
        "exact",
        first_fail.unwrap_or_else(|| "every ball mass meets its floor".into()),
    );
    report.verdict(
        "ratio_positive",
        min_ratio.iter().all(|r| *r > 0.0 && r.is_finite()),
        "exact",
        format!("{min_ratio:?}"),
    );
    Ok(report)
}

/// Depth-`k` support points of a Salem family with floor `1/∏_{j≤k} T_j`.
pub fn salem_support_points(s: &SalemMeasure, per_level: usize, seed: u64) -> Result<Vec<LowerMassPoints>> {
    let mut rng = Stream::new(seed).child("support-points").rng();
    let mut out = Vec::new();
    let mut prod = BigInt::one();
    for (k, leaves) in s.leaves.iter().enumerate() {
        prod *= BigInt::from(s.t[k]);
        let mut pts: Vec<Point> = (0..per_level.min(leaves.len()))
            .map(|_| {
                let leaf = &leaves.leaves[rng.gen_range(0..leaves.len())];
                lattice_point(&s.scales, &leaf.word)
            })
            .collect::<Result<_>>()?;
        pts.sort();
        pts.dedup();
        out.push(LowerMassPoints {
            level: k + 1,
            points: pts,
            floor: MassFloor::constant(BigRational::new(BigInt::one(), prod.clone())),
        });
    }
    Ok(out)
}

/// `r² d`, the squared radius factor of the `r√d / 𝔐_k` balls.
pub fn support_radius_sq(scales: &ScaleSequence) -> BigRational {
    let r = scales.r() as i64;
    big(r * r * scales.d() as i64)
}

/// Core floor `c^k 𝔐_k^{-α}` at every core point and the cylinder bound `τ([w]) ≤ r^{-d|w|} 𝔐_{|w|}^{-α}`.
pub fn heavy_core_certificate(h: &HeavyCoreMeasure) -> Result<ExperimentReport> {
    let neg_alpha = Exponent::integer(0).sub(&h.alpha);
    let mut inputs = Vec::new();
    let mut ck = Mass::one();
    for k in 1..=h.family.len() {
        ck *= &h.c;
        inputs.push(LowerMassPoints {
            level: k,
            points: h.core_points(k)?,
            floor: MassFloor { coef: ck.clone(), power: neg_alpha },
        });
    }
    let mut report =
        lower_mass_check(&h.family, &h.scales, &inputs, &support_radius_sq(&h.scales), h.alpha.to_f64(), &[0.0, 0.05])?;
    report.experiment = "heavy_core_certificate".into();
    let d = h.scales.d() as u32;
    let r = BigInt::from(h.scales.r());
    let mut cyl_ok = true;
    let mut first = None;
    let mut worst: f64 = 0.0;
    for (k, leaves) in h.leaves.iter().enumerate() {
        let n = k + 1;
        let rd = BigRational::from_integer(r.pow(d * n as u32));
        let mm = h.scales.mm_rational(n);
        for leaf in &leaves.leaves {
            let scaled = &leaf.mass * &rd;
            if neg_alpha.cmp_pow(&scaled, &mm) == Ordering::Greater {
                cyl_ok = false;
                first.get_or_insert_with(|| format!("{:?}", leaf.word));
            }
            let ratio = rational_to_f64(&scaled) * h.scales.mm_f64(n).powf(h.alpha.to_f64());
            worst = worst.max(ratio);
        }
    }
    report.scalar("cylinder_ratio_max", worst);
    report.scalar("core_points_deepest", h.core.last().map(|c| c.len()).unwrap_or(0) as f64);
    report.verdict(
        "cylinder_bound",
        cyl_ok,
        "exact",
        first.unwrap_or_else(|| format!("max τ([w]) r^(d|w|) 𝔐^α = {worst:.6}")),
    );
    Ok(report)
}

/// Radii `1/𝔐_k` for `k = 1..=n`.
pub fn inverse_scale_radii(scales: &ScaleSequence, n: usize) -> Vec<BigRational> {
    (1..=n).map(|k| scales.mm_rational(k).recip()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::make_scales;
    use num::BigUint;

    #[test]
    fn dirac_has_unit_constant() {
        let mu = DiscreteMeasure::dirac(1, 1, BigUint::from(4u32));
        let centers = vec![vec![BigRational::zero()]];
        let radii = vec![BigRational::new(BigInt::one(), BigInt::from(2)), BigRational::one()];
        let r = frostman_fit(&[mu], 0.0, &centers, &radii, 1.0).unwrap();
        assert_eq!(r.scalars["c_sup"], 1.0);
        assert!(r.passed());
    }

    #[test]
    fn single_atom_lower_mass_is_exact() {
        let s = make_scales(1, 1, &[4]).unwrap();
        let mu = DiscreteMeasure::dirac(1, 1, BigUint::from(4u32));
        let inputs = vec![LowerMassPoints { level: 1, points: vec![vec![0]], floor: MassFloor::constant(Mass::one()) }];
        let r = lower_mass_check(&[mu], &s, &inputs, &big(1), 1.0, &[0.0]).unwrap();
        assert!(r.passed());
        assert_eq!(r.values("min_ball_mass"), vec![1.0]);
    }

    #[test]
    fn off_support_point_is_rejected() {
        let s = make_scales(1, 1, &[4]).unwrap();
        let mu = DiscreteMeasure::dirac(1, 1, BigUint::from(4u32));
        let inputs = vec![LowerMassPoints { level: 1, points: vec![vec![1]], floor: MassFloor::constant(Mass::one()) }];
        assert!(matches!(lower_mass_check(&[mu], &s, &inputs, &big(1), 1.0, &[0.0]), Err(Error::PointOffSupport(_))));
    }
}
