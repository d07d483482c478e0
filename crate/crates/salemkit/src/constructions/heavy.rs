use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{assignment_json, family_from_levels, measures_json, ConstructionParams};
use crate::measures::DiscreteMeasure;
use crate::samplers::{ad_min_scale, ad_regular_sample, ad_spec, dyadic_exponent, Stream};
use crate::scales::{
    default_dyadic_schedule, dyadic_ceil, dyadic_floor, expand_levels, lattice_point, make_scales, rational_to_f64, Exponent,
    OffspringAssignment, ScaleSequence, TreeLeafSet,
};
use crate::{Error, Mass, Point, Result};

const BITS: u32 = 48;

/// Mixture of a `β` tree and a thin `s` tree carrying extra mass.
#[derive(Clone, Debug)]
pub struct HeavyCoreMeasure {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub s: Exponent,
    pub seed: u64,
    pub scales: ScaleSequence,
    pub family: Vec<DiscreteMeasure>,
    pub assignment: OffspringAssignment,
    pub leaves: Vec<TreeLeafSet>,
    /// `ˢS(w)` for every node `w` of the tree.
    pub s_sets: BTreeMap<Vec<Point>, Vec<Point>>,
    /// Core words `F_n` per level (those following `ˢS` at every step).
    pub core: Vec<Vec<Vec<Point>>>,
    pub lambda: Vec<Mass>,
    pub c: Mass,
    pub beta_t: Vec<u64>,
    pub s_t: Vec<u64>,
}

fn sample_pmf_digit<R: Rng + ?Sized>(d: usize, r: u32, m: u64, rng: &mut R) -> Point {
    (0..d)
        .map(|_| (0..r).map(|_| rng.gen_range(0..m as i64)).sum())
        .collect()
}

/// `M^{e}` as an `f64`.
fn powe(m: u64, e: Exponent) -> f64 {
    (m as f64).powf(e.to_f64())
}

pub fn build_heavy_core(params: &ConstructionParams) -> Result<HeavyCoreMeasure> {
    params.validate()?;
    let d = params.d;
    let r = params.r;
    let alpha = params.alpha_exp()?;
    let beta = params.beta_exp()?;
    let s = Exponent::from_f64(params.s.unwrap_or(0.0)).unwrap_or(Exponent::integer(0));
    let mut n0 = ad_min_scale(d, r, beta)?;
    if s.is_positive() {
        n0 = n0.max(ad_min_scale(d, r, s)?);
    }
    let schedule = match &params.schedule {
        Some(sch) => {
            for &m in &sch[..params.depth] {
                let n = dyadic_exponent(m)?;
                if n < n0 {
                    return Err(Error::BelowMinimumScale { n, n0 });
                }
            }
            sch[..params.depth].to_vec()
        }
        None => default_dyadic_schedule(n0, params.depth),
    };
    let scales = make_scales(d, r, &schedule)?;
    let beta_t: Vec<u64> = schedule.iter().map(|&m| Ok(ad_spec(d, r, beta, m)?.t)).collect::<Result<_>>()?;
    let s_t: Vec<u64> = if s.is_positive() {
        schedule.iter().map(|&m| Ok(ad_spec(d, r, s, m)?.t)).collect::<Result<_>>()?
    } else {
        vec![1; schedule.len()]
    };

    let rd = (r as f64).powi(d as i32);
    let c_f = match params.overrides.c {
        Some(c) => c,
        None => {
            let a = schedule
                .iter()
                .zip(&s_t)
                .map(|(&m, &st)| powe(m, alpha) / (4.0 * st as f64))
                .fold(f64::INFINITY, f64::min);
            let b = schedule
                .iter()
                .map(|&m| (1.0 - powe(m, alpha.sub(&beta))) / rd)
                .fold(f64::INFINITY, f64::min);
            0.99 * a.min(b)
        }
    };
    let c = dyadic_floor(c_f, BITS);
    if !c.is_positive() {
        return Err(Error::InvalidParameters(format!("c = {c_f} rounds to zero")));
    }
    let neg_alpha = Exponent::integer(0).sub(&alpha);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut lambda = Vec::with_capacity(schedule.len());
    for (k, (&m, &st)) in schedule.iter().zip(&s_t).enumerate() {
        let mut l = dyadic_ceil(rational_to_f64(&c) * st as f64 * powe(m, neg_alpha), BITS);
        let step = BigRational::new(BigInt::one(), BigInt::one() << BITS as usize);
        let mb = BigRational::from_integer(BigInt::from(m));
        // λ / (c ˢT) ≥ M^{-α}
        let st_r = BigRational::from_integer(BigInt::from(st));
        while l.is_zero() || neg_alpha.cmp_pow(&(&l / (&c * &st_r)), &mb) == Ordering::Less {
            l += &step;
        }
        if l >= half {
            return Err(Error::LambdaTooLarge { level: k + 1, value: rational_to_f64(&l) });
        }
        lambda.push(l);
    }

    let stream = Stream::new(params.seed);
    let mut assignment = OffspringAssignment::new(r, params.depth);
    let mut s_sets = BTreeMap::new();
    let mut frontier: Vec<(Vec<Point>, bool)> = vec![(Vec::new(), true)];
    let mut core = Vec::with_capacity(params.depth);
    for n in 1..=params.depth {
        let m = scales.m(n);
        let (bt, st) = (beta_t[n - 1], s_t[n - 1]);
        let lam = &lambda[n - 1];
        let wb = (BigRational::one() - lam) / BigRational::from_integer(BigInt::from(bt));
        let ws = lam / BigRational::from_integer(BigInt::from(st));
        let draws: Vec<Result<(Vec<Point>, Vec<Point>)>> = frontier
            .par_iter()
            .map(|(w, _)| {
                let node = stream.path(w);
                let bs = ad_regular_sample(d, r, beta, m, &mut node.child("beta").rng())?;
                let ss = if s.is_positive() {
                    ad_regular_sample(d, r, s, m, &mut node.child("s").rng())?
                } else {
                    vec![sample_pmf_digit(d, r, m, &mut node.child("s").rng())]
                };
                Ok((bs, ss))
            })
            .collect();
        let mut next = Vec::new();
        let mut level_core = Vec::new();
        for ((w, in_core), draw) in frontier.iter().zip(draws) {
            let (bs, ss) = draw?;
            let bset: BTreeSet<&Point> = bs.iter().collect();
            let sset: BTreeSet<&Point> = ss.iter().collect();
            let union: BTreeSet<&Point> = bset.union(&sset).copied().collect();
            let mut kids = Vec::with_capacity(union.len());
            for u in union {
                let mut mass = BigRational::zero();
                if bset.contains(u) {
                    mass += &wb;
                }
                if sset.contains(u) {
                    mass += &ws;
                }
                kids.push((u.clone(), mass));
                let mut child = w.clone();
                child.push(u.clone());
                let child_core = *in_core && sset.contains(u);
                if child_core {
                    level_core.push(child.clone());
                }
                next.push((child, child_core));
            }
            assignment.set_weighted(w.clone(), kids);
            s_sets.insert(w.clone(), ss);
        }
        core.push(level_core);
        frontier = next;
    }
    let leaves = expand_levels(&scales, &assignment, params.depth)?;
    let family = family_from_levels(&scales, &leaves)?;
    Ok(HeavyCoreMeasure {
        alpha,
        beta,
        s,
        seed: params.seed,
        scales,
        family,
        assignment,
        leaves,
        s_sets,
        core,
        lambda,
        c,
        beta_t,
        s_t,
    })
}

impl HeavyCoreMeasure {
    /// Lattice points `𝔐_n X(w)` of the core words at level `n`.
    pub fn core_points(&self, n: usize) -> Result<Vec<Point>> {
        let mut pts: Vec<Point> = self.core[n - 1]
            .iter()
            .map(|w| lattice_point(&self.scales, w))
            .collect::<Result<_>>()?;
        pts.sort();
        pts.dedup();
        Ok(pts)
    }

    /// `c^n 𝔐_n^{-α}` is compared exactly; this is its `f64` value.
    pub fn core_floor_f64(&self, n: usize) -> f64 {
        rational_to_f64(&self.c).powi(n as i32) * self.scales.mm_f64(n).powf(-self.alpha.to_f64())
    }

    pub fn metadata(&self) -> Value {
        json!({
            "construction": "heavy-core",
            "alpha": self.alpha.to_string(),
            "beta": self.beta.to_string(),
            "s": self.s.to_string(),
            "seed": self.seed,
            "d": self.scales.d(),
            "r": self.scales.r(),
            "schedule": self.scales.m_list(),
            "beta_profile": self.beta_t,
            "s_profile": self.s_t,
            "c": self.c.to_string(),
            "lambda": self.lambda.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "core_sizes": self.core.iter().map(|c| c.len()).collect::<Vec<_>>(),
            "levels": measures_json(&self.family),
            "offspring": assignment_json(&self.assignment),
        })
    }
}
