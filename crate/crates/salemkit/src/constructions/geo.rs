use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    assignment_json, ceil_guard, family_from_levels, floor_guard, grow_uniform, inv, measures_json,
    product_family, ConstructionParams, Preset,
};
use crate::measures::{convolve, DiscreteMeasure};
use crate::samplers::{
    build_partition_blocks, partition_indices, pmf, residue_separated_sum, two_partition_decompose,
    two_partition_draw, BlockKind, SamplingDistribution, Stream,
};
use crate::scales::{
    default_dyadic_schedule, expand_levels, grid_points, make_scales, Exponent, OffspringAssignment,
    ScaleSequence, TreeLeafSet,
};
use crate::{Error, Mass, Point, Result};

/// Derived integers at one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoLevel {
    pub m: u64,
    pub m_tilde: i64,
    pub q: i64,
    pub big_q: i64,
    pub b: i64,
    pub t_bar: u64,
}

/// `μ = μ̃ ∗ μ̄` with a grid factor and a random two-partition factor.
#[derive(Clone, Debug)]
pub struct FactorizedMeasure {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub seed: u64,
    /// Combined scales, digit order `r + 1`.
    pub scales: ScaleSequence,
    /// Scales of the random factor, digit order `r`.
    pub random_scales: ScaleSequence,
    pub levels: Vec<GeoLevel>,
    pub grid_family: Vec<DiscreteMeasure>,
    pub random_family: Vec<DiscreteMeasure>,
    pub family: Vec<DiscreteMeasure>,
    pub grid_sets: Vec<Vec<Point>>,
    pub random_assignment: OffspringAssignment,
    pub random_leaves: Vec<TreeLeafSet>,
    pub combined_assignment: OffspringAssignment,
    /// Per-level sampling distributions (empty for the `β = α` shortcut).
    pub distributions: Vec<SamplingDistribution>,
    /// Every combined offspring set was a bijective, `q_n`-block sparse sum.
    pub certified: bool,
    pub shortcut: bool,
}

fn level_params(params: &ConstructionParams, alpha: f64, beta: f64, m: u64) -> Result<GeoLevel> {
    let o = &params.overrides;
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::InvalidParameters(format!("missing constant {name}")))
    };
    let d = params.d as f64;
    let mf = m as f64;
    let m_tilde = ceil_guard(need(o.c_m, "c_m")? * mf.powf((alpha - beta) / d));
    let q = floor_guard(need(o.c_q, "c_q")? * mf.powf(1.0 - alpha / d));
    let big_q = q * floor_guard(need(o.c_big_q, "c_big_q")? * mf.powf(beta / d));
    let t_bar = ceil_guard(need(o.c_t, "c_t")? * mf.powf(beta));
    let b = floor_guard(need(o.c_b, "c_b")? * mf.powf(1.0 - beta / d));
    let lv = GeoLevel { m, m_tilde, q, big_q, b, t_bar: t_bar.max(0) as u64 };
    if m_tilde < 1 || q < 1 || big_q < 1 || b < 1 || t_bar < 1 {
        return Err(Error::DegenerateParameters(format!("at M = {m}: {lv:?}")));
    }
    if big_q % q != 0 {
        return Err(Error::DivisibilityViolated(format!("q = {q} does not divide Q = {big_q}")));
    }
    if m_tilde * big_q >= m as i64 {
        return Err(Error::DegenerateParameters(format!(
            "at M = {m}: M̃ Q = {} is not below M",
            m_tilde * big_q
        )));
    }
    Ok(lv)
}

pub fn build_geometric_factorization(params: &ConstructionParams) -> Result<FactorizedMeasure> {
    params.validate()?;
    let params = &params.resolved(Preset::PaperConstants);
    let alpha = params.alpha_exp()?;
    let beta = params.beta_exp()?;
    if alpha == beta {
        return shortcut(params, alpha, beta);
    }
    let d = params.d;
    let r = params.r;
    let schedule: Vec<u64> = match &params.schedule {
        Some(s) => s[..params.depth].to_vec(),
        None => {
            let base = params
                .overrides
                .m_base
                .ok_or_else(|| Error::InvalidParameters("missing constant m_base".into()))?;
            (1..=params.depth as u64).map(|n| base + n).collect()
        }
    };
    let levels: Vec<GeoLevel> = schedule
        .iter()
        .map(|&m| level_params(params, alpha.to_f64(), beta.to_f64(), m))
        .collect::<Result<_>>()?;
    let random_scales = make_scales(d, r, &schedule)?;
    let scales = make_scales(d, r + 1, &schedule)?;

    let grid_sets: Vec<Vec<Point>> = levels
        .iter()
        .map(|l| grid_points(d, l.m_tilde).into_iter().map(|u| u.iter().map(|c| c * l.big_q).collect()).collect())
        .collect();
    let grid_weights: Vec<Mass> = grid_sets.iter().map(|s| inv(s.len() as u64)).collect();
    let grid_family = product_family(&scales, &grid_sets, &grid_weights)?;

    let mut distributions = Vec::with_capacity(levels.len());
    for (k, lv) in levels.iter().enumerate() {
        let n = k + 1;
        let ground = random_scales.digit_set(n, r);
        let pm = pmf(&random_scales, n);
        let p: Vec<Mass> = ground.iter().map(|u| pm.p(u)).collect();
        let b_part = partition_indices(&ground, BlockKind::Plain { q: lv.b })?;
        let r_part = partition_indices(&ground, BlockKind::Modular { q: lv.q, modulus: lv.big_q })?;
        let dist = two_partition_decompose(&ground, &b_part, &r_part, lv.t_bar as usize, &p).map_err(|e| match e {
            Error::InfeasibleMarginals { block_mass, target } => Error::DegenerateParameters(format!(
                "level {n}: block mass {block_mass} exceeds 1/{target}"
            )),
            other => other,
        })?;
        distributions.push(dist);
    }
    let stream = Stream::new(params.seed).child("random-factor");
    let (random_assignment, random_leaves) =
        grow_uniform(&random_scales, r, &stream, |n, _, s| Ok(two_partition_draw(&distributions[n - 1], &mut s.rng())))?;
    let random_family = family_from_levels(&random_scales, &random_leaves)?;

    let (combined_assignment, certified) = combine(&scales, &levels, &grid_sets, &random_assignment)?;
    let combined_leaves = expand_levels(&scales, &combined_assignment, params.depth)?;
    let family = family_from_levels(&scales, &combined_leaves)?;
    Ok(FactorizedMeasure {
        alpha,
        beta,
        seed: params.seed,
        scales,
        random_scales,
        levels,
        grid_family,
        random_family,
        family,
        grid_sets,
        random_assignment,
        random_leaves,
        combined_assignment,
        distributions,
        certified,
        shortcut: false,
    })
}

/// Combined system `S(w̃ + w̄) = 𝒟̃_n + S̄(w̄)`, with certificates.
fn combine(
    scales: &ScaleSequence,
    levels: &[GeoLevel],
    grid_sets: &[Vec<Point>],
    random: &OffspringAssignment,
) -> Result<(OffspringAssignment, bool)> {
    let depth = levels.len();
    let mut out = OffspringAssignment::new(scales.r(), depth);
    let mut frontier: Vec<(Vec<Point>, Vec<Point>)> = vec![(Vec::new(), Vec::new())];
    let mut certified = true;
    let mut cache: BTreeMap<Vec<Point>, Vec<(Point, Point, Point)>> = BTreeMap::new();
    for n in 1..=depth {
        let lv = levels[n - 1];
        let mut next = Vec::new();
        for (wt, wb) in &frontier {
            if !cache.contains_key(wb) {
                let bar: Vec<Point> = random
                    .children(wb)
                    .ok_or(Error::MissingChildren { depth: n - 1 })?
                    .iter()
                    .map(|(u, _)| u.clone())
                    .collect();
                let cert = residue_separated_sum(&grid_sets[n - 1], &bar, lv.q, lv.big_q)?;
                certified &= cert.bijective && cert.block_sparse;
                let triples = cert
                    .pairs
                    .iter()
                    .zip(&cert.sumset)
                    .map(|(&(i, j), s)| (grid_sets[n - 1][i].clone(), bar[j].clone(), s.clone()))
                    .collect();
                cache.insert(wb.clone(), triples);
            }
            let triples = &cache[wb];
            let node: Vec<Point> = wt.iter().zip(wb).map(|(a, b)| add(a, b)).collect();
            out.set_uniform(node, triples.iter().map(|(_, _, s)| s.clone()).collect());
            for (a, b, _) in triples {
                let mut t2 = wt.clone();
                t2.push(a.clone());
                let mut b2 = wb.clone();
                b2.push(b.clone());
                next.push((t2, b2));
            }
        }
        frontier = next;
        cache.retain(|k, _| k.len() >= n);
    }
    Ok((out, certified))
}

fn add(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn shortcut(params: &ConstructionParams, alpha: Exponent, beta: Exponent) -> Result<FactorizedMeasure> {
    let d = params.d;
    let n0 = crate::samplers::ad_min_scale(d, params.r, beta)?;
    let schedule = match &params.schedule {
        Some(s) => s[..params.depth].to_vec(),
        None => default_dyadic_schedule(n0, params.depth),
    };
    let stream = Stream::new(params.seed).child("random-factor");
    let salem = super::build_salem_with(d, params.r, beta, &schedule, &stream, params.seed)?;
    let scales = make_scales(d, params.r + 1, &schedule)?;
    let grid_sets: Vec<Vec<Point>> = schedule.iter().map(|_| vec![vec![0; d]]).collect();
    let grid_family = product_family(&scales, &grid_sets, &vec![inv(1); schedule.len()])?;
    let levels = schedule
        .iter()
        .zip(&salem.t)
        .map(|(&m, &t)| GeoLevel { m, m_tilde: 1, q: 1, big_q: 1, b: 1, t_bar: t })
        .collect();
    let mut combined = OffspringAssignment::new(params.r + 1, params.depth);
    for (node, kids) in salem.assignment.nodes() {
        combined.set_weighted(node.clone(), kids.clone());
    }
    let family = salem.family.clone();
    Ok(FactorizedMeasure {
        alpha,
        beta,
        seed: params.seed,
        scales,
        random_scales: salem.scales.clone(),
        levels,
        grid_family,
        random_family: salem.family,
        family,
        grid_sets,
        random_assignment: salem.assignment,
        random_leaves: salem.leaves,
        combined_assignment: combined,
        distributions: Vec::new(),
        certified: true,
        shortcut: true,
    })
}

impl FactorizedMeasure {
    /// `convolve(μ̃_n, μ̄_n) = μ_n` at every level.
    pub fn factorization_holds(&self) -> Result<bool> {
        let checks: Vec<Result<bool>> = (0..self.family.len())
            .into_par_iter()
            .map(|k| Ok(convolve(&self.grid_family[k], &self.random_family[k])? == self.family[k]))
            .collect();
        checks.into_iter().try_fold(true, |acc, c| Ok(acc && c?))
    }

    /// Partition kinds certifying sparsity of the random factor at level `n`.
    pub fn partition_kinds(&self, n: usize) -> (BlockKind, BlockKind) {
        let lv = self.levels[n - 1];
        (BlockKind::Plain { q: lv.b }, BlockKind::Modular { q: lv.q, modulus: lv.big_q })
    }

    /// Blocks of the second partition, for inspection.
    pub fn modular_blocks(&self, n: usize) -> Result<Vec<Vec<Point>>> {
        let lv = self.levels[n - 1];
        build_partition_blocks(
            BlockKind::Modular { q: lv.q, modulus: lv.big_q },
            self.scales.d(),
            self.random_scales.digit_max(n, self.random_scales.r()) + 1,
        )
    }

    pub fn metadata(&self) -> Value {
        json!({
            "construction": "geo-factorization",
            "alpha": self.alpha.to_string(),
            "beta": self.beta.to_string(),
            "seed": self.seed,
            "d": self.scales.d(),
            "r": self.random_scales.r(),
            "schedule": self.scales.m_list(),
            "levels": self.levels,
            "shortcut": self.shortcut,
            "certified": self.certified,
            "atoms_per_distribution": self.distributions.iter().map(|d| d.atoms.len()).collect::<Vec<_>>(),
            "grid_family": measures_json(&self.grid_family),
            "random_family": measures_json(&self.random_family),
            "family": measures_json(&self.family),
            "random_offspring": assignment_json(&self.random_assignment),
        })
    }
}
