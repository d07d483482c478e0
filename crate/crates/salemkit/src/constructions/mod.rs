//! The five measure families: Salem, heavy core, geometric factorization,
//! and the geometric and nongeometric restriction examples.
//!
//! Every builder takes a [`ConstructionParams`] document, draws all
//! randomness from [`Stream`]s keyed by the seed and the node path, and
//! returns the truncated family `μ_1, ..., μ_N` with its metadata.

mod geo;
mod heavy;
mod params;
mod restriction;
mod salem;

use num::{BigInt, One};
use rayon::prelude::*;
use serde_json::Value;

use crate::measures::{convolve, measure_from_leaves, DiscreteMeasure};
use crate::samplers::Stream;
use crate::scales::{expand_levels, OffspringAssignment, ScaleSequence, TreeLeafSet};
use crate::{Mass, Point, Result};

pub use geo::{build_geometric_factorization, FactorizedMeasure, GeoLevel};
pub use heavy::{build_heavy_core, HeavyCoreMeasure};
pub use params::{ConstructionKind, ConstructionParams, Overrides, Preset};
pub use restriction::{
    build_restriction_geometric, build_restriction_nongeometric, NongeoLevel, RestrictionGeoBundle,
    RestrictionLevel, RestrictionNongeoBundle,
};
pub use salem::{build_salem, build_salem_with, frostman_constant, SalemMeasure};

/// Any constructed family, for generic plumbing.
#[derive(Clone, Debug)]
pub enum Built {
    Salem(SalemMeasure),
    HeavyCore(HeavyCoreMeasure),
    Geo(FactorizedMeasure),
    RestrictionGeo(RestrictionGeoBundle),
    RestrictionNongeo(RestrictionNongeoBundle),
}

impl Built {
    pub fn kind(&self) -> ConstructionKind {
        match self {
            Built::Salem(_) => ConstructionKind::Salem,
            Built::HeavyCore(_) => ConstructionKind::HeavyCore,
            Built::Geo(_) => ConstructionKind::GeoFactorization,
            Built::RestrictionGeo(_) => ConstructionKind::RestrictionGeo,
            Built::RestrictionNongeo(_) => ConstructionKind::RestrictionNongeo,
        }
    }

    /// The main family `μ_1, ..., μ_N`.
    pub fn family(&self) -> &[DiscreteMeasure] {
        match self {
            Built::Salem(m) => &m.family,
            Built::HeavyCore(m) => &m.family,
            Built::Geo(m) => &m.family,
            Built::RestrictionGeo(m) => &m.family,
            Built::RestrictionNongeo(m) => &m.family,
        }
    }

    pub fn metadata(&self) -> Value {
        match self {
            Built::Salem(m) => m.metadata(),
            Built::HeavyCore(m) => m.metadata(),
            Built::Geo(m) => m.metadata(),
            Built::RestrictionGeo(m) => m.metadata(),
            Built::RestrictionNongeo(m) => m.metadata(),
        }
    }
}

/// Validates `params` and dispatches to the matching builder.
pub fn build(params: &ConstructionParams) -> Result<Built> {
    params.validate()?;
    Ok(match params.construction {
        ConstructionKind::Salem => Built::Salem(build_salem(params)?),
        ConstructionKind::HeavyCore => Built::HeavyCore(build_heavy_core(params)?),
        ConstructionKind::GeoFactorization => Built::Geo(build_geometric_factorization(params)?),
        ConstructionKind::RestrictionGeo => Built::RestrictionGeo(build_restriction_geometric(params)?),
        ConstructionKind::RestrictionNongeo => {
            Built::RestrictionNongeo(build_restriction_nongeometric(params)?)
        }
    })
}

/// Grows a uniform tree level by level; `draw(n, node, stream)` returns `S(node)`.
pub(crate) fn grow_uniform<F>(
    scales: &ScaleSequence,
    order: u32,
    stream: &Stream,
    draw: F,
) -> Result<(OffspringAssignment, Vec<TreeLeafSet>)>
where
    F: Fn(usize, &[Point], &Stream) -> Result<Vec<Point>> + Sync,
{
    let depth = scales.depth();
    let mut assignment = OffspringAssignment::new(order, depth);
    let mut frontier: Vec<Vec<Point>> = vec![Vec::new()];
    for n in 1..=depth {
        let sets: Vec<Result<Vec<Point>>> =
            frontier.par_iter().map(|w| draw(n, w, &stream.path(w))).collect();
        let mut next = Vec::new();
        for (w, set) in frontier.iter().zip(sets) {
            let set = set?;
            for u in &set {
                let mut c = w.clone();
                c.push(u.clone());
                next.push(c);
            }
            assignment.set_uniform(w.clone(), set);
        }
        frontier = next;
    }
    let leaves = expand_levels(scales, &assignment, depth)?;
    Ok((assignment, leaves))
}

pub(crate) fn family_from_levels(scales: &ScaleSequence, leaves: &[TreeLeafSet]) -> Result<Vec<DiscreteMeasure>> {
    leaves.iter().map(|l| measure_from_leaves(scales, l)).collect()
}

/// `∗_{k≤n} (w_k Σ_{u ∈ sets[k]} δ_{u/𝔐_k})` for every `n`.
pub(crate) fn product_family(
    scales: &ScaleSequence,
    sets: &[Vec<Point>],
    weights: &[Mass],
) -> Result<Vec<DiscreteMeasure>> {
    let d = scales.d();
    let mut out: Vec<DiscreteMeasure> = Vec::with_capacity(sets.len());
    let mut prev = DiscreteMeasure::from_atoms(d, 0, scales.mm(0).clone(), [(vec![0; d], Mass::one())])?;
    for (k, (set, w)) in sets.iter().zip(weights).enumerate() {
        let n = k + 1;
        let layer = DiscreteMeasure::from_atoms(
            d,
            n,
            scales.mm(n).clone(),
            set.iter().map(|u| (u.clone(), w.clone())),
        )?;
        let cur = convolve(&prev.refine(n, scales.m(n)), &layer)?;
        out.push(cur.clone());
        prev = cur;
    }
    Ok(out)
}

pub(crate) fn inv(n: u64) -> Mass {
    Mass::new(BigInt::one(), BigInt::from(n))
}

/// Uniform `⌈x⌉` and `⌊x⌋` with a small guard against representation error.
pub(crate) fn ceil_guard(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

pub(crate) fn floor_guard(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.floor() as i64
    }
}

pub(crate) fn measures_json(family: &[DiscreteMeasure]) -> Value {
    Value::Array(
        family
            .iter()
            .map(|m| {
                serde_json::json!({
                    "level": m.level(),
                    "scale": m.scale().to_string(),
                    "atoms": m.len(),
                    "total_mass": m.total_mass().to_string(),
                })
            })
            .collect(),
    )
}

pub(crate) fn assignment_json(a: &OffspringAssignment) -> Value {
    Value::Array(
        a.nodes()
            .map(|(node, kids)| {
                serde_json::json!({
                    "node": node,
                    "children": kids.iter().map(|(u, m)| serde_json::json!([u, m.to_string()])).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}
