use num::{BigInt, BigUint, Integer, One, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    assignment_json, build_salem_with, ceil_guard, family_from_levels, floor_guard, grow_uniform, inv,
    measures_json, product_family, ConstructionParams, Preset, SalemMeasure,
};
use crate::measures::{convolve, measure_from_leaves, DiscreteMeasure};
use crate::samplers::{
    ad_min_scale, is_block_sparse, partition_indices, pmf, two_partition_decompose, two_partition_draw, BlockKind,
    SamplingDistribution, Stream,
};
use crate::scales::{
    default_dyadic_schedule, dyadic_floor, grid_points, make_scales, Exponent, OffspringAssignment, ScaleSequence,
    TreeLeafSet,
};
use crate::{Error, Mass, Point, Result};

/// Integer parameters of one level of the geometric restriction example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionLevel {
    pub big_r: u64,
    pub m: u64,
    pub m_tilde: i64,
    pub m_bar: i64,
    pub l: i64,
    pub q_bar: i64,
    pub big_q_bar: i64,
    pub big_q_tilde: i64,
    pub t: u64,
}

/// Resonance data `L_k = A M̄_k M̃_k 𝔐_{k-1}` with window `1/(2 M̄_k M̃_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub spacing: u64,
    pub window: f64,
}

#[derive(Clone, Debug)]
pub struct RestrictionGeoBundle {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub seed: u64,
    pub a: u64,
    pub b: u64,
    pub levels: Vec<RestrictionLevel>,
    /// Order-`r` scales of `μ̄`; `μ̃` shares the lattice with order 1.
    pub scales: ScaleSequence,
    pub grid_scales: ScaleSequence,
    pub grid_sets: Vec<Vec<Point>>,
    pub arithmetic_sets: Vec<Vec<Point>>,
    pub h_sets: Vec<Vec<Point>>,
    pub grid_family: Vec<DiscreteMeasure>,
    pub random_family: Vec<DiscreteMeasure>,
    pub eta_family: Vec<DiscreteMeasure>,
    pub family: Vec<DiscreteMeasure>,
    /// `f_n dμ_N` for `n = 1..=N`.
    pub f_data: Vec<DiscreteMeasure>,
    pub random_assignment: OffspringAssignment,
    pub random_leaves: Vec<TreeLeafSet>,
    pub distributions: Vec<Option<SamplingDistribution>>,
    pub resonance: Vec<Resonance>,
}

fn restriction_level(params: &ConstructionParams, alpha: f64, beta: f64, big_r: u64) -> Result<RestrictionLevel> {
    let o = &params.overrides;
    let d = params.d as f64;
    let rf = big_r as f64;
    let a = o.a.unwrap_or(10) as i64;
    let m_tilde = ceil_guard(o.c_mt.unwrap_or(2.0) * rf.powf((alpha - beta) / d));
    let m_bar = floor_guard(o.c_mb.unwrap_or(0.5) * rf.powf(beta / (2.0 * d)));
    let l = ceil_guard(o.b.unwrap_or(1) as f64 * rf.powf(beta / (2.0 * d)));
    let q_bar = floor_guard(o.c_qbar.unwrap_or(1.0) * rf.powf((d - alpha) / d));
    let deg = |what: String| Error::DegenerateParameters(format!("at R = {big_r}: {what}"));
    if m_tilde < 1 || m_bar < 1 || l < 1 || q_bar < 1 || a < 1 {
        return Err(deg(format!("M̃ = {m_tilde}, M̄ = {m_bar}, L = {l}, q̄ = {q_bar}")));
    }
    let m = a * m_tilde * m_bar * l * q_bar;
    let big_q_bar = l * q_bar;
    let big_q_tilde = m_bar * big_q_bar;
    let t = ceil_guard(o.c_t.unwrap_or(1.0) * (m as f64).powf(beta));
    if t < 1 {
        return Err(deg(format!("T = {t}")));
    }
    let lv = RestrictionLevel {
        big_r,
        m: m as u64,
        m_tilde,
        m_bar,
        l,
        q_bar,
        big_q_bar,
        big_q_tilde,
        t: t as u64,
    };
    let di = params.d as u32;
    if (m_bar * l).pow(di) < (params.r as i64).pow(di) * t {
        return Err(deg(format!("light-block condition fails for {lv:?}")));
    }
    if m_bar.pow(di) > t {
        return Err(deg(format!("T = {t} below the arithmetic branching {}", m_bar.pow(di))));
    }
    let ground = (params.r as i64 * (m - 1) + 1).pow(di);
    if t > ground {
        return Err(deg(format!("T = {t} exceeds the digit set size {ground}")));
    }
    Ok(lv)
}

/// `𝒟̄_n ∪` base points of unused `q̄`-blocks mod `Q̃` until `T` points.
fn build_h_set(lv: &RestrictionLevel, d: usize, n: usize, arith: &[Point]) -> Result<Vec<Point>> {
    let kind = BlockKind::Modular { q: lv.q_bar, modulus: lv.big_q_tilde };
    let used: std::collections::BTreeSet<Point> = arith.iter().map(|u| kind.cell(u)).collect();
    let mut h = arith.to_vec();
    for b in grid_points(d, lv.big_q_tilde / lv.q_bar) {
        if h.len() as u64 >= lv.t {
            break;
        }
        let base: Point = b.iter().map(|c| c * lv.q_bar).collect();
        if !used.contains(&kind.cell(&base)) {
            h.push(base);
        }
    }
    if (h.len() as u64) < lv.t || !is_block_sparse(&h, kind) {
        return Err(Error::SubtreeNotSparse(n));
    }
    h.sort();
    Ok(h)
}

fn is_arithmetic(levels: &[RestrictionLevel], word: &[Point]) -> bool {
    word.iter().zip(levels).all(|(u, lv)| {
        u.iter().all(|&c| c % lv.big_q_bar == 0 && c / lv.big_q_bar < lv.m_bar && c >= 0)
    })
}

pub fn build_restriction_geometric(params: &ConstructionParams) -> Result<RestrictionGeoBundle> {
    params.validate()?;
    let params = &params.resolved(Preset::PaperConstants);
    let alpha = params.alpha_exp()?;
    let beta = params.beta_exp()?;
    let d = params.d;
    let r = params.r;
    let o = &params.overrides;
    let r0 = o.r0.unwrap_or(100);
    let step = o.r_step.unwrap_or(1);
    let levels: Vec<RestrictionLevel> = (1..=params.depth as u64)
        .map(|n| restriction_level(params, alpha.to_f64(), beta.to_f64(), r0 + step * n))
        .collect::<Result<_>>()?;
    let schedule: Vec<u64> = levels.iter().map(|l| l.m).collect();
    let scales = make_scales(d, r, &schedule)?;
    let grid_scales = make_scales(d, 1, &schedule)?;

    let grid_sets: Vec<Vec<Point>> = levels
        .iter()
        .map(|l| scaled_grid(d, l.m_tilde, l.big_q_tilde))
        .collect();
    let arithmetic_sets: Vec<Vec<Point>> = levels
        .iter()
        .map(|l| scaled_grid(d, l.m_bar, l.big_q_bar))
        .collect();
    let h_sets: Vec<Vec<Point>> = levels
        .iter()
        .enumerate()
        .map(|(k, l)| build_h_set(l, d, k + 1, &arithmetic_sets[k]))
        .collect::<Result<_>>()?;

    let grid_weights: Vec<Mass> = grid_sets.iter().map(|s| inv(s.len() as u64)).collect();
    let grid_family = product_family(&grid_scales, &grid_sets, &grid_weights)?;
    let eta_weights: Vec<Mass> = levels.iter().map(|l| inv(l.t)).collect();
    let eta_family = product_family(&scales, &arithmetic_sets, &eta_weights)?;

    // Level n draws randomly only below a node that left the arithmetic subtree.
    let mut distributions = Vec::with_capacity(levels.len());
    let mut escaped = false;
    for (k, lv) in levels.iter().enumerate() {
        let n = k + 1;
        if !escaped {
            distributions.push(None);
        } else {
            let ground = scales.digit_set(n, r);
            let pm = pmf(&scales, n);
            let p: Vec<Mass> = ground.iter().map(|u| pm.p(u)).collect();
            let b_part = partition_indices(&ground, BlockKind::Plain { q: 1 })?;
            let r_part =
                partition_indices(&ground, BlockKind::Modular { q: lv.q_bar, modulus: lv.big_q_tilde })?;
            let dist = two_partition_decompose(&ground, &b_part, &r_part, lv.t as usize, &p).map_err(|e| match e {
                Error::InfeasibleMarginals { block_mass, target } => {
                    Error::DegenerateParameters(format!("level {n}: block mass {block_mass} exceeds 1/{target}"))
                }
                other => other,
            })?;
            distributions.push(Some(dist));
        }
        escaped |= lv.t > arithmetic_sets[k].len() as u64;
    }

    let stream = Stream::new(params.seed).child("random-factor");
    let (random_assignment, random_leaves) = grow_uniform(&scales, r, &stream, |n, w, s| {
        if is_arithmetic(&levels, w) {
            Ok(h_sets[n - 1].clone())
        } else {
            let dist = distributions[n - 1]
                .as_ref()
                .ok_or_else(|| Error::InvalidParameters(format!("no distribution at level {n}")))?;
            Ok(two_partition_draw(dist, &mut s.rng()))
        }
    })?;
    let random_family = family_from_levels(&scales, &random_leaves)?;
    let family: Vec<DiscreteMeasure> = grid_family
        .iter()
        .zip(&random_family)
        .map(|(g, m)| convolve(g, m))
        .collect::<Result<_>>()?;

    let big_n = params.depth;
    let last = &random_leaves[big_n - 1];
    let f_data = (1..=big_n)
        .map(|n| {
            let sub = TreeLeafSet {
                depth: last.depth,
                order: last.order,
                leaves: last
                    .leaves
                    .iter()
                    .filter(|leaf| is_arithmetic(&levels, &leaf.word[..n]))
                    .cloned()
                    .collect(),
            };
            convolve(&grid_family[big_n - 1], &measure_from_leaves(&scales, &sub)?)
        })
        .collect::<Result<_>>()?;

    let a = o.a.unwrap_or(10);
    let resonance = levels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let mm = scales.mm(k).to_u64().ok_or(Error::LatticeOverflow { level: k })?;
            let width = (l.m_bar * l.m_tilde) as u64;
            let spacing = a
                .checked_mul(width)
                .and_then(|v| v.checked_mul(mm))
                .ok_or(Error::LatticeOverflow { level: k + 1 })?;
            Ok(Resonance { spacing, window: 1.0 / (2.0 * width as f64) })
        })
        .collect::<Result<_>>()?;

    Ok(RestrictionGeoBundle {
        alpha,
        beta,
        seed: params.seed,
        a,
        b: o.b.unwrap_or(1),
        levels,
        scales,
        grid_scales,
        grid_sets,
        arithmetic_sets,
        h_sets,
        grid_family,
        random_family,
        eta_family,
        family,
        f_data,
        random_assignment,
        random_leaves,
        distributions,
        resonance,
    })
}

fn scaled_grid(d: usize, side: i64, step: i64) -> Vec<Point> {
    grid_points(d, side)
        .into_iter()
        .map(|u| u.iter().map(|c| c * step).collect())
        .collect()
}

impl RestrictionGeoBundle {
    /// `∏_{k≤n} M̄_k^d / T_k`.
    pub fn arithmetic_mass(&self, n: usize) -> Mass {
        let d = self.scales.d() as u32;
        self.levels[..n]
            .iter()
            .map(|l| Mass::new(BigInt::from(l.m_bar.pow(d)), BigInt::from(l.t)))
            .product()
    }

    /// `2^{-dn} ∏_{k≤n} M̄_k^d / T_k`, the lower bound on the resonance set.
    pub fn resonance_floor(&self, n: usize) -> f64 {
        let d = self.scales.d() as i32;
        crate::scales::rational_to_f64(&self.arithmetic_mass(n)) * 2f64.powi(-d * n as i32)
    }

    /// Structural identities between the integer parameters.
    pub fn identities_hold(&self) -> bool {
        self.levels.iter().all(|l| {
            l.m as i64 == self.a as i64 * l.m_tilde * l.m_bar * l.l * l.q_bar
                && l.big_q_bar == l.l * l.q_bar
                && l.big_q_tilde == l.m_bar * l.big_q_bar
        })
    }

    pub fn metadata(&self) -> Value {
        json!({
            "construction": "restriction-geo",
            "alpha": self.alpha.to_string(),
            "beta": self.beta.to_string(),
            "seed": self.seed,
            "d": self.scales.d(),
            "r": self.scales.r(),
            "A": self.a,
            "B": self.b,
            "schedule": self.scales.m_list(),
            "levels": self.levels,
            "h_sets": self.h_sets,
            "arithmetic_sets": self.arithmetic_sets,
            "resonance": self.resonance,
            "grid_family": measures_json(&self.grid_family),
            "random_family": measures_json(&self.random_family),
            "eta_family": measures_json(&self.eta_family),
            "family": measures_json(&self.family),
            "test_data": measures_json(&self.f_data),
            "random_offspring": assignment_json(&self.random_assignment),
        })
    }
}

/// One rescaled, translated copy family `ν_n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NongeoLevel {
    pub n: usize,
    pub rho: u64,
    /// First coordinate of `t_n`.
    pub offset: f64,
    /// Unnormalized weight `n^{-2} 2^{-βn}` rounded down to a dyadic.
    pub weight: String,
    /// Resonance box half width `c 2^{2n}`.
    pub box_half_width: f64,
}

#[derive(Clone, Debug)]
pub struct RestrictionNongeoBundle {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub seed: u64,
    pub sigma: SalemMeasure,
    pub sigma_depth: usize,
    /// `ν_1, ..., ν_N` on a common lattice.
    pub nu: Vec<DiscreteMeasure>,
    pub levels: Vec<NongeoLevel>,
    /// Normalized mixture weights.
    pub weights: Vec<Mass>,
    /// `[μ]`.
    pub family: Vec<DiscreteMeasure>,
    pub c_box: f64,
    /// Frostman rescaling factors `r^β` and `r^α` from shrinking `[0, r]^d` to `[0, 1]^d`.
    pub rescale_beta: f64,
    pub rescale_alpha: f64,
}

pub fn build_restriction_nongeometric(params: &ConstructionParams) -> Result<RestrictionNongeoBundle> {
    params.validate()?;
    let params = &params.resolved(Preset::PaperConstants);
    let alpha = params.alpha_exp()?;
    let beta = params.beta_exp()?;
    let d = params.d;
    let r = params.r;
    let k = params.overrides.sigma_depth.unwrap_or(2);
    let c_box = params.overrides.c_box.unwrap_or(0.05);
    let n0 = ad_min_scale(d, r, beta)?;
    let schedule = match &params.schedule {
        Some(s) if s.len() >= k => s[..k].to_vec(),
        _ => default_dyadic_schedule(n0, k),
    };
    let sigma = build_salem_with(d, r, beta, &schedule, &Stream::new(params.seed).child("sigma"), params.seed)?;
    let base = &sigma.family[k - 1];
    let sigma_scale = BigInt::from(base.scale().clone());

    let two_ab = alpha.mul(&Exponent::integer(2)).sub(&beta).div_int(d as i64);
    let big_n = params.depth;
    let rho: Vec<u64> = (1..=big_n)
        .map(|n| ceil_guard(2f64.powf(two_ab.to_f64() * n as f64)).max(1) as u64)
        .collect();
    // Common denominator of t_n, Z_n and the dilated atoms.
    let mut den = BigInt::one();
    for n in 1..=big_n {
        let p2 = BigInt::one() << (2 * n);
        den = den.lcm(&(BigInt::one() << (n - 1)));
        den = den.lcm(&((BigInt::one() << n) * BigInt::from(rho[n - 1])));
        den = den.lcm(&(p2 * BigInt::from(r) * &sigma_scale));
    }
    let big_s = den.to_i64().ok_or(Error::ScaleAlignment(big_n))?;
    let scale = BigUint::try_from(den.clone()).map_err(|_| Error::ScaleAlignment(big_n))?;

    let mut nu = Vec::with_capacity(big_n);
    let mut levels = Vec::with_capacity(big_n);
    let mut raw_weights = Vec::with_capacity(big_n);
    for n in 1..=big_n {
        let rn = rho[n - 1] as i64;
        let to_i64 = |x: BigInt| x.to_i64().ok_or(Error::ScaleAlignment(n));
        // t_n = 100 d (1 - 2^{1-n})
        let t_num = to_i64(BigInt::from(100 * d as i64) * (BigInt::from(big_s) - (BigInt::from(big_s) >> (n - 1))))?;
        let z_step = to_i64(BigInt::from(big_s) / ((BigInt::one() << n) * BigInt::from(rn)))?;
        let dil = to_i64(BigInt::from(big_s) / ((BigInt::one() << (2 * n)) * BigInt::from(r) * &sigma_scale))?;
        let zs = grid_points(d, rn);
        let w_z = inv(zs.len() as u64);
        let mut atoms = Vec::with_capacity(zs.len() * base.len());
        for z in &zs {
            for (a, m) in base.atoms() {
                let p: Point = a
                    .iter()
                    .zip(z)
                    .enumerate()
                    .map(|(j, (&ai, &zi))| {
                        let off = if j == 0 { t_num } else { 0 };
                        ai.checked_mul(dil)
                            .and_then(|v| v.checked_add(zi.checked_mul(z_step)?))
                            .and_then(|v| v.checked_add(off))
                            .ok_or(Error::ScaleAlignment(n))
                    })
                    .collect::<Result<_>>()?;
                atoms.push((p, m * &w_z));
            }
        }
        nu.push(DiscreteMeasure::from_atoms(d, 0, scale.clone(), atoms)?);
        let w = dyadic_floor((n as f64).powi(-2) * 2f64.powf(-beta.to_f64() * n as f64), 40);
        levels.push(NongeoLevel {
            n,
            rho: rn as u64,
            offset: 100.0 * d as f64 * (1.0 - 2f64.powi(1 - n as i32)),
            weight: w.to_string(),
            box_half_width: c_box * 4f64.powi(n as i32),
        });
        raw_weights.push(w);
    }
    let total: Mass = raw_weights.iter().cloned().sum();
    let weights: Vec<Mass> = raw_weights.iter().map(|w| w / &total).collect();
    let mut mu = DiscreteMeasure::from_atoms(d, 0, scale.clone(), std::iter::empty())?;
    for (v, w) in nu.iter().zip(&weights) {
        mu = mu.add(&v.scaled(w))?;
    }
    let rf = r as f64;
    Ok(RestrictionNongeoBundle {
        alpha,
        beta,
        seed: params.seed,
        sigma,
        sigma_depth: k,
        nu,
        levels,
        weights,
        family: vec![mu],
        c_box,
        rescale_beta: rf.powf(beta.to_f64()),
        rescale_alpha: rf.powf(alpha.to_f64()),
    })
}

impl RestrictionNongeoBundle {
    /// Truncated `σ` rescaled into `[0, 1]^d`, on the lattice `1/(r 𝔐_K)`.
    pub fn sigma_unit(&self) -> Result<DiscreteMeasure> {
        let base = &self.sigma.family[self.sigma_depth - 1];
        let scale = base.scale() * BigUint::from(self.sigma.scales.r());
        DiscreteMeasure::from_atoms(base.d(), 0, scale, base.atoms().map(|(p, m)| (p.clone(), m.clone())))
    }

    pub fn metadata(&self) -> Value {
        json!({
            "construction": "restriction-nongeo",
            "alpha": self.alpha.to_string(),
            "beta": self.beta.to_string(),
            "seed": self.seed,
            "d": self.sigma.scales.d(),
            "r": self.sigma.scales.r(),
            "sigma_depth": self.sigma_depth,
            "sigma_schedule": self.sigma.scales.m_list(),
            "levels": self.levels,
            "weights": self.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            "c_box": self.c_box,
            "frostman_rescale": { "r_pow_beta": self.rescale_beta, "r_pow_alpha": self.rescale_alpha },
            "nu": measures_json(&self.nu),
            "family": measures_json(&self.family),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::ConstructionKind;

    #[test]
    fn desk_restriction_levels() {
        let p = ConstructionParams::desk(ConstructionKind::RestrictionGeo, 5);
        let b = build_restriction_geometric(&p).unwrap();
        let got: Vec<_> = b.levels.iter().map(|l| (l.m, l.m_tilde, l.m_bar, l.l, l.q_bar, l.t)).collect();
        assert_eq!(got, vec![(240, 2, 2, 6, 1, 4), (280, 2, 2, 7, 1, 5), (320, 2, 2, 8, 1, 5)]);
        assert!(b.identities_hold());
        for (h, a) in b.h_sets.iter().zip(&b.arithmetic_sets) {
            assert!(a.iter().all(|u| h.contains(u)));
        }
        for n in 1..=3 {
            assert_eq!(b.eta_family[n - 1].total_mass(), b.arithmetic_mass(n));
            assert_eq!(b.f_data[n - 1].total_mass(), b.arithmetic_mass(n));
        }
        assert!(b.family.iter().all(|m| m.is_probability()));
    }

    #[test]
    fn nongeo_supports_disjoint() {
        let p = ConstructionParams::desk(ConstructionKind::RestrictionNongeo, 5);
        let b = build_restriction_nongeometric(&p).unwrap();
        assert!(b.family[0].is_probability());
        let ranges: Vec<(i64, i64)> = b
            .nu
            .iter()
            .map(|m| {
                let xs = m.points().iter().map(|p| p[0]);
                (xs.clone().min().unwrap(), xs.max().unwrap())
            })
            .collect();
        for w in ranges.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
    }
}
