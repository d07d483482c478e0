use serde::{Deserialize, Serialize};

use crate::scales::Exponent;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionKind {
    Salem,
    HeavyCore,
    GeoFactorization,
    RestrictionGeo,
    RestrictionNongeo,
}

impl ConstructionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ConstructionKind::Salem => "salem",
            ConstructionKind::HeavyCore => "heavy-core",
            ConstructionKind::GeoFactorization => "geo-factorization",
            ConstructionKind::RestrictionGeo => "restriction-geo",
            ConstructionKind::RestrictionNongeo => "restriction-nongeo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PaperConstants,
    DeskScale,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::PaperConstants => "paper-constants",
            Preset::DeskScale => "desk-scale",
        }
    }

    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "paper-constants" => Some(Preset::PaperConstants),
            "desk-scale" => Some(Preset::DeskScale),
            _ => None,
        }
    }
}

/// Constant overrides. Unset fields are filled from a [`Preset`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Heavy core: the constant `c` in `λ_n = c ˢT_n M_n^{-α}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Factorization: base `M` of the schedule `M_n = M + n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_base: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_big_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_b: Option<f64>,
    /// Restriction: the integers `A` and `B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_mt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_mb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_qbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_step: Option<u64>,
    /// Nongeometric restriction: depth of the base Salem measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_depth: Option<usize>,
    /// Nongeometric restriction: half-width constant of the resonance box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_box: Option<f64>,
}

impl Overrides {
    /// Full constant set of a preset for the given construction.
    pub fn preset(preset: Preset, kind: ConstructionKind, d: usize, r: u32) -> Overrides {
        let rf = r as f64;
        let rd = (rf + 1.0).powi(d as i32);
        let mut o = Overrides::default();
        match (kind, preset) {
            (ConstructionKind::Salem, _) => {}
            (ConstructionKind::HeavyCore, _) => {}
            (ConstructionKind::GeoFactorization, Preset::PaperConstants) => {
                o.m_base = Some(60);
                o.c_m = Some(1.0);
                o.c_q = Some((100.0 * rf).powi(-2));
                o.c_big_q = Some(rf * rf);
                o.c_t = Some(rd);
                o.c_b = Some(1.0 / (2.0 * rf));
            }
            (ConstructionKind::GeoFactorization, Preset::DeskScale) => {
                o.m_base = Some(60);
                o.c_m = Some(1.0);
                o.c_q = Some(1.0);
                o.c_big_q = Some(1.0);
                o.c_t = Some(0.5);
                o.c_b = Some(0.5);
            }
            (ConstructionKind::RestrictionGeo, Preset::PaperConstants) => {
                o.a = Some(10);
                o.b = Some(100 * r as u64 * (r as u64 + 1));
                o.c_mt = Some(2.0);
                o.c_mb = Some(0.5);
                o.c_qbar = Some(1.0 / (10.0 * 100.0 * rf * (rf + 1.0)));
                o.c_t = Some(rd);
                o.r0 = Some(100);
                o.r_step = Some(1);
            }
            (ConstructionKind::RestrictionGeo, Preset::DeskScale) => {
                o.a = Some(10);
                o.b = Some(4);
                o.c_mt = Some(1.0);
                o.c_mb = Some(1.5);
                o.c_qbar = Some(1.0);
                o.c_t = Some(0.25);
                o.r0 = Some(0);
                o.r_step = Some(4);
            }
            (ConstructionKind::RestrictionNongeo, _) => {
                o.sigma_depth = Some(2);
                o.c_box = Some(0.05);
            }
        }
        o
    }

    /// Fills every unset field from `base`.
    pub fn or(&self, base: &Overrides) -> Overrides {
        Overrides {
            c: self.c.or(base.c),
            m_base: self.m_base.or(base.m_base),
            c_m: self.c_m.or(base.c_m),
            c_q: self.c_q.or(base.c_q),
            c_big_q: self.c_big_q.or(base.c_big_q),
            c_t: self.c_t.or(base.c_t),
            c_b: self.c_b.or(base.c_b),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            c_mt: self.c_mt.or(base.c_mt),
            c_mb: self.c_mb.or(base.c_mb),
            c_qbar: self.c_qbar.or(base.c_qbar),
            r0: self.r0.or(base.r0),
            r_step: self.r_step.or(base.r_step),
            sigma_depth: self.sigma_depth.or(base.sigma_depth),
            c_box: self.c_box.or(base.c_box),
        }
    }
}

/// Parameter document shared by every builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionParams {
    pub construction: ConstructionKind,
    pub d: usize,
    pub r: u32,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<u64>>,
    #[serde(default)]
    pub overrides: Overrides,
    pub seed: u64,
}

fn exponent(name: &str, x: f64) -> Result<Exponent> {
    Exponent::from_f64(x).ok_or_else(|| Error::InvalidParameters(format!("{name} = {x} is not finite")))
}

impl ConstructionParams {
    /// Small but structurally faithful instances used by the desk-scale preset.
    pub fn desk(kind: ConstructionKind, seed: u64) -> ConstructionParams {
        let (alpha, beta, s, depth) = match kind {
            ConstructionKind::Salem => (0.5, None, None, 3),
            ConstructionKind::HeavyCore => (0.4, Some(0.5), Some(0.3), 3),
            ConstructionKind::GeoFactorization => (0.75, Some(0.5), None, 3),
            ConstructionKind::RestrictionGeo => (0.75, Some(0.5), None, 3),
            ConstructionKind::RestrictionNongeo => (0.4, Some(0.5), None, 3),
        };
        ConstructionParams {
            construction: kind,
            d: 1,
            r: 2,
            alpha,
            beta,
            s,
            depth,
            schedule: None,
            overrides: Overrides::preset(Preset::DeskScale, kind, 1, 2),
            seed,
        }
    }

    /// Same document with every constant resolved against `preset`.
    pub fn resolved(&self, preset: Preset) -> ConstructionParams {
        let mut p = self.clone();
        p.overrides = self.overrides.or(&Overrides::preset(preset, self.construction, self.d, self.r));
        p
    }

    pub fn alpha_exp(&self) -> Result<Exponent> {
        exponent("alpha", self.alpha)
    }

    pub fn beta_exp(&self) -> Result<Exponent> {
        let b = self
            .beta
            .ok_or_else(|| Error::InvalidParameters(format!("{} needs beta", self.construction.name())))?;
        exponent("beta", b)
    }

    /// Checks the common range conditions and the per-construction ones.
    pub fn validate(&self) -> Result<()> {
        let d = self.d as f64;
        if self.d == 0 {
            return Err(Error::InvalidParameters("d must be positive".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidParameters("depth must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < d) {
            return Err(Error::DegenerateAlpha { value: self.alpha, d: self.d });
        }
        let rmin = 1f64.max(self.alpha / 2.0).max(self.beta.unwrap_or(0.0) / 2.0);
        if (self.r as f64) <= rmin {
            return Err(Error::InvalidParameters(format!(
                "r = {} must exceed max(1, alpha/2, beta/2) = {rmin}",
                self.r
            )));
        }
        let kind = self.construction;
        if kind != ConstructionKind::Salem {
            let b = self.beta_exp()?.to_f64();
            if !(b > 0.0 && b <= d) {
                return Err(Error::InvalidParameters(format!("beta = {b} must lie in (0, d]")));
            }
            if b / 2.0 > self.alpha {
                return Err(Error::InvalidParameters(format!(
                    "need beta/2 <= alpha, got alpha = {}, beta = {b}",
                    self.alpha
                )));
            }
            match kind {
                ConstructionKind::HeavyCore | ConstructionKind::RestrictionNongeo => {
                    if self.alpha >= b {
                        return Err(Error::InvalidParameters(format!(
                            "{} needs alpha < beta, got alpha = {}, beta = {b}",
                            kind.name(),
                            self.alpha
                        )));
                    }
                }
                _ => {
                    if b > self.alpha {
                        return Err(Error::InvalidParameters(format!(
                            "{} needs beta <= alpha, got alpha = {}, beta = {b}",
                            kind.name(),
                            self.alpha
                        )));
                    }
                }
            }
        }
        if kind == ConstructionKind::HeavyCore {
            let s = self.s.ok_or_else(|| Error::InvalidParameters("heavy-core needs s".into()))?;
            let max = 2.0 * self.alpha - self.beta.unwrap_or(0.0);
            let s_e = exponent("s", s)?;
            let max_e = self.alpha_exp()?.mul(&Exponent::integer(2)).sub(&self.beta_exp()?);
            if s_e.numer() < 0 || s_e > max_e {
                return Err(Error::InvalidS { s, max });
            }
        }
        if let Some(sched) = &self.schedule {
            if sched.len() < self.depth {
                return Err(Error::DepthExceedsScales { requested: self.depth, available: sched.len() });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let p = ConstructionParams::desk(ConstructionKind::HeavyCore, 7);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"heavy-core\""));
        let q: ConstructionParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn validation() {
        let mut p = ConstructionParams::desk(ConstructionKind::HeavyCore, 1);
        assert!(p.validate().is_ok());
        p.s = Some(0.31);
        assert!(matches!(p.validate(), Err(Error::InvalidS { .. })));
        let mut p = ConstructionParams::desk(ConstructionKind::Salem, 1);
        p.alpha = 1.0;
        assert!(matches!(p.validate(), Err(Error::DegenerateAlpha { .. })));
    }
}
