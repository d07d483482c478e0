use serde_json::{json, Value};

use super::{assignment_json, family_from_levels, grow_uniform, measures_json, ConstructionParams};
use crate::measures::DiscreteMeasure;
use crate::samplers::{ad_constant, ad_min_scale, ad_regular_sample, ad_spec, AdConstant, Stream};
use crate::scales::{default_dyadic_schedule, make_scales, Exponent, OffspringAssignment, ScaleSequence, TreeLeafSet};
use crate::{Error, Result};

/// Random near AD-regular measure with Fourier decay.
#[derive(Clone, Debug)]
pub struct SalemMeasure {
    pub alpha: Exponent,
    pub seed: u64,
    pub scales: ScaleSequence,
    pub family: Vec<DiscreteMeasure>,
    pub assignment: OffspringAssignment,
    pub leaves: Vec<TreeLeafSet>,
    /// Profile `T_n`.
    pub t: Vec<u64>,
    pub n0: u32,
    pub c0: AdConstant,
    /// Reported Frostman constant.
    pub frostman: f64,
}

/// `(r+2)^d C0 (r√d + 1)^α r^{-d}`.
pub fn frostman_constant(d: usize, r: u32, alpha: f64, c0: f64) -> f64 {
    let rf = r as f64;
    let df = d as f64;
    (rf + 2.0).powi(d as i32) * c0 * (rf * df.sqrt() + 1.0).powf(alpha) / rf.powi(d as i32)
}

pub fn build_salem(params: &ConstructionParams) -> Result<SalemMeasure> {
    let alpha = params.alpha_exp()?;
    let n0 = ad_min_scale(params.d, params.r, alpha)?;
    let schedule = match &params.schedule {
        Some(s) => s[..params.depth].to_vec(),
        None => default_dyadic_schedule(n0, params.depth),
    };
    build_salem_with(params.d, params.r, alpha, &schedule, &Stream::new(params.seed), params.seed)
}

/// Builds the Salem family on an explicit dyadic schedule.
pub fn build_salem_with(
    d: usize,
    r: u32,
    alpha: Exponent,
    schedule: &[u64],
    stream: &Stream,
    seed: u64,
) -> Result<SalemMeasure> {
    let n0 = ad_min_scale(d, r, alpha)?;
    let scales = make_scales(d, r, schedule)?;
    let t = schedule
        .iter()
        .map(|&m| Ok(ad_spec(d, r, alpha, m)?.t))
        .collect::<Result<Vec<u64>>>()?;
    let (assignment, leaves) = grow_uniform(&scales, r, stream, |n, _, s| {
        ad_regular_sample(d, r, alpha, scales.m(n), &mut s.rng())
    })?;
    let family = family_from_levels(&scales, &leaves)?;
    let c0 = ad_constant(d, r, alpha)?;
    if family.iter().any(|m| !m.is_probability()) {
        return Err(Error::InvalidParameters("Salem family lost mass".into()));
    }
    Ok(SalemMeasure {
        alpha,
        seed,
        frostman: frostman_constant(d, r, alpha.to_f64(), c0.c0),
        scales,
        family,
        assignment,
        leaves,
        t,
        n0,
        c0,
    })
}

impl SalemMeasure {
    pub fn metadata(&self) -> Value {
        json!({
            "construction": "salem",
            "alpha": self.alpha.to_string(),
            "seed": self.seed,
            "d": self.scales.d(),
            "r": self.scales.r(),
            "schedule": self.scales.m_list(),
            "n0": self.n0,
            "profile": self.t,
            "c0": self.c0,
            "frostman_constant": self.frostman,
            "levels": measures_json(&self.family),
            "offspring": assignment_json(&self.assignment),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::ConstructionKind;

    #[test]
    fn desk_salem_is_reproducible() {
        let p = ConstructionParams::desk(ConstructionKind::Salem, 7);
        let a = build_salem(&p).unwrap();
        let b = build_salem(&p).unwrap();
        assert_eq!(a.family, b.family);
        assert_eq!(a.t, vec![8, 8, 16]);
        assert_eq!(a.family[2].len() as u64 <= 8 * 8 * 16, true);
        assert!(a.assignment.is_normalized());
    }
}
