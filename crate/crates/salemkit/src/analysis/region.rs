use num::{BigInt, BigRational, One, Signed, Zero};

use crate::scales::Exponent;
use crate::{Error, Result};

type Q = BigRational;

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Which region of the `(1/p, 1/q)` square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Triangle,
    Trapezoid,
    Pentagon,
}

/// The exponent-pair regions `Δ_{α,β}`, `Trap_β` and `Pent_{α,β}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentRegion {
    pub alpha: Q,
    pub beta: Q,
    pub d: usize,
}

impl ExponentRegion {
    pub fn new(alpha: Exponent, beta: Exponent, d: usize) -> Result<Self> {
        let r = ExponentRegion { alpha: alpha.ratio(), beta: beta.ratio(), d };
        let dq = q(d as i64);
        if !r.alpha.is_positive() || r.alpha >= dq || !r.beta.is_positive() || r.beta > dq {
            return Err(Error::InvalidParameters(format!("region needs 0 < α < d, 0 < β ≤ d; got {alpha}, {beta}")));
        }
        Ok(r)
    }

    pub fn from_f64(alpha: f64, beta: f64, d: usize) -> Result<Self> {
        let e = |x: f64| Exponent::from_f64(x).ok_or_else(|| Error::InvalidParameters(format!("{x} is not rational")));
        Self::new(e(alpha)?, e(beta)?, d)
    }

    fn dq(&self) -> Q {
        q(self.d as i64)
    }

    /// `p_{α,β} = (2(d-α)+β)/((d-α)+β)`.
    pub fn p_critical(&self) -> Q {
        let da = self.dq() - &self.alpha;
        (q(2) * &da + &self.beta) / (da + &self.beta)
    }

    /// `C_{α,β} = (1/p_{α,β}, 1/p'_{α,β})`.
    pub fn vertex_c(&self) -> (Q, Q) {
        let a = self.p_critical().recip();
        (a.clone(), Q::one() - a)
    }

    pub fn vertex_d(&self) -> (Q, Q) {
        let two_d = q(2 * self.d as i64);
        ((self.dq() + &self.beta) / &two_d, Q::new(BigInt::one(), BigInt::from(2)))
    }

    pub fn vertex_d_prime(&self) -> (Q, Q) {
        let two_d = q(2 * self.d as i64);
        (Q::new(BigInt::one(), BigInt::from(2)), (self.dq() - &self.beta) / &two_d)
    }

    /// `q_* = (4d - 4α + 2β)/β`.
    pub fn q_star(&self) -> Q {
        (q(4) * self.dq() - q(4) * &self.alpha + q(2) * &self.beta) / &self.beta
    }

    fn in_triangle(alpha: &Q, beta: &Q, d: &Q, a: &Q, b: &Q) -> bool {
        let da = d - alpha;
        b <= a && beta + &da * b >= (&da + beta) * a && (&da + beta) * b >= &da * a
    }

    /// Half-plane membership of `(a, b) = (1/p, 1/q)`.
    ///
    /// The pentagon description matches its vertex hull only for `β/2 < α < β`.
    pub fn contains(&self, kind: RegionKind, a: &Q, b: &Q) -> bool {
        let d = self.dq();
        let in_square = !a.is_negative() && !b.is_negative() && *a <= Q::one() && *b <= Q::one();
        if !in_square {
            return false;
        }
        match kind {
            RegionKind::Triangle => Self::in_triangle(&self.alpha, &self.beta, &d, a, b),
            RegionKind::Trapezoid => {
                let beta = &self.beta;
                b <= a
                    && (a - b) * q(2) * &d <= *beta
                    && (&d - beta) * a <= &d * b
                    && &d * (Q::one() - a) >= (&d - beta) * (Q::one() - b)
            }
            RegionKind::Pentagon => {
                let s = &d - q(2) * &self.alpha + &self.beta;
                Self::in_triangle(&self.beta, &self.beta, &d, a, b)
                    && &self.alpha + &s * b >= &d * a
                    && &self.beta - &self.alpha + &d * b >= &s * a
            }
        }
    }

    pub fn contains_pq(&self, kind: RegionKind, p: f64, qq: f64) -> bool {
        let inv = |x: f64| {
            if x.is_infinite() {
                Some(Q::zero())
            } else {
                Q::from_float(1.0 / x)
            }
        };
        match (inv(p), inv(qq)) {
            (Some(a), Some(b)) => self.contains(kind, &a, &b),
            _ => false,
        }
    }

    /// Vertices in counter-clockwise order.
    pub fn vertices(&self, kind: RegionKind) -> Vec<(Q, Q)> {
        let o = (Q::zero(), Q::zero());
        let one = (Q::one(), Q::one());
        let pts = match kind {
            RegionKind::Triangle => vec![o, one, self.vertex_c()],
            RegionKind::Trapezoid => vec![o, one, self.vertex_d(), self.vertex_d_prime()],
            RegionKind::Pentagon => {
                vec![o, one, self.vertex_d(), self.vertex_d_prime(), self.vertex_c()]
            }
        };
        convex_hull(pts)
    }

    /// Average of the vertices, an interior point of a nondegenerate region.
    pub fn centroid(&self, kind: RegionKind) -> (Q, Q) {
        let v = self.vertices(kind);
        let n = q(v.len() as i64);
        let sa: Q = v.iter().map(|p| p.0.clone()).sum();
        let sb: Q = v.iter().map(|p| p.1.clone()).sum();
        (sa / &n, sb / n)
    }
}

fn cross(o: &(Q, Q), a: &(Q, Q), b: &(Q, Q)) -> Q {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Monotone-chain hull, counter-clockwise, collinear points dropped.
pub fn convex_hull(mut pts: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(Q, Q)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<(Q, Q)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Closed membership in a counter-clockwise convex polygon.
pub fn hull_contains(hull: &[(Q, Q)], p: &(Q, Q)) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == *p,
        2 => cross(&hull[0], &hull[1], p).is_zero() && {
            let (lo, hi) = if hull[0] <= hull[1] { (&hull[0], &hull[1]) } else { (&hull[1], &hull[0]) };
            lo <= p && p <= hi
        },
        n => (0..n).all(|i| !cross(&hull[i], &hull[(i + 1) % n], p).is_negative()),
    }
}
