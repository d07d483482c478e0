use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scales::Exponent;
use crate::{Error, Point, Result};

/// Layout of the binary fiber construction for `M = 2^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdSpec {
    pub d: usize,
    pub r: u32,
    pub alpha: f64,
    pub n0: u32,
    pub n: u32,
    /// Free bits per binary level `j = 0..n`.
    pub s: Vec<u32>,
    /// `N(n)`, so `T = 2^{N(n)}`.
    pub free_bits: u32,
    pub t: u64,
    pub c0: AdConstant,
}

/// The explicit constant and the three bounds it is the maximum of.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdConstant {
    pub c0: f64,
    /// `3^d 2^α 2^{1+(d-α)n0}`, from covering a cube by dyadic cubes.
    pub upper: f64,
    /// `(2√d)^α`, from the dyadic cube inside a ball.
    pub lower: f64,
    /// `2^{d-α+1}`, the branching scale factor.
    pub t_scale: f64,
}

fn check_alpha(d: usize, alpha: Exponent) -> Result<()> {
    if !alpha.is_positive() || alpha >= Exponent::integer(d as i64) {
        return Err(Error::DegenerateAlpha { value: alpha.to_f64(), d });
    }
    Ok(())
}

/// Minimal `n0 ≥ 1` with `r^d ≤ 2^{(d-α) n0}`.
///
/// The upper inequality `2^{(d-α) n0} ≤ 2^{d-α} r^d` then holds as well.
pub fn ad_min_scale(d: usize, r: u32, alpha: Exponent) -> Result<u32> {
    check_alpha(d, alpha)?;
    let gap = Exponent::integer(d as i64).sub(&alpha);
    let rd = (r as f64).powi(d as i32).log2();
    let mut n0 = 1u32;
    // exact test: (d-α) n0 ≥ d log2 r  ⇔  2^{(d-α) n0 q} ≥ r^{d q}
    loop {
        let lhs = num::BigInt::from(2u8).pow((gap.numer() * n0 as i64) as u32);
        let rhs = num::BigInt::from(r).pow((d as i64 * gap.denom()) as u32);
        if lhs >= rhs {
            return Ok(n0);
        }
        n0 += 1;
        if n0 as f64 > 4.0 * rd / gap.to_f64() + 64.0 {
            return Err(Error::InvalidParameters("no admissible n0".into()));
        }
    }
}

pub fn ad_constant(d: usize, r: u32, alpha: Exponent) -> Result<AdConstant> {
    let n0 = ad_min_scale(d, r, alpha)?;
    let a = alpha.to_f64();
    let df = d as f64;
    let k = 2f64.powf(1.0 + (df - a) * n0 as f64);
    let upper = 3f64.powi(d as i32) * 2f64.powf(a) * k;
    let lower = (2.0 * df.sqrt()).powf(a);
    let t_scale = 2f64.powf(df - a + 1.0);
    Ok(AdConstant { c0: upper.max(lower).max(t_scale), upper, lower, t_scale })
}

pub fn dyadic_exponent(m: u64) -> Result<u32> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::NotDyadic(m));
    }
    Ok(m.trailing_zeros())
}

pub fn ad_spec(d: usize, r: u32, alpha: Exponent, m: u64) -> Result<AdSpec> {
    let n = dyadic_exponent(m)?;
    let n0 = ad_min_scale(d, r, alpha)?;
    if n < n0 {
        return Err(Error::BelowMinimumScale { n, n0 });
    }
    let s: Vec<u32> = (0..n as i64)
        .map(|j| {
            if j < (n - n0) as i64 {
                (alpha.ceil_mul(j + 1) - alpha.ceil_mul(j)) as u32
            } else {
                d as u32
            }
        })
        .collect();
    let free_bits: u32 = s.iter().sum();
    if free_bits >= 40 {
        return Err(Error::InvalidParameters(format!("fiber size 2^{free_bits} too large")));
    }
    Ok(AdSpec {
        d,
        r,
        alpha: alpha.to_f64(),
        n0,
        n,
        s,
        free_bits,
        t: 1u64 << free_bits,
        c0: ad_constant(d, r, alpha)?,
    })
}

/// `N(m) = Σ_{j<m} s_j`.
pub fn free_bits_below(spec: &AdSpec, m: u32) -> u32 {
    spec.s[..m as usize].iter().sum()
}

/// The fiber `φ^{-1}(ζ)`, where `zeta[j]` holds the fixed last `d - s_j` bits.
pub fn ad_fiber(spec: &AdSpec, zeta: &[Vec<bool>]) -> Vec<Point> {
    let d = spec.d;
    let mut out = Vec::with_capacity(spec.t as usize);
    for idx in 0..spec.t {
        let mut a = vec![0i64; d];
        let mut cursor = 0u32;
        for j in 0..spec.n as usize {
            let sj = spec.s[j] as usize;
            for (l, coord) in a.iter_mut().enumerate() {
                let bit = if l < sj {
                    let b = (idx >> cursor) & 1;
                    cursor += 1;
                    b == 1
                } else {
                    zeta[j][l - sj]
                };
                if bit {
                    *coord |= 1 << j;
                }
            }
        }
        out.push(a);
    }
    out.sort();
    out
}

fn draw_zeta<R: Rng + ?Sized>(spec: &AdSpec, rng: &mut R) -> Vec<Vec<bool>> {
    spec.s
        .iter()
        .map(|&sj| (0..spec.d - sj as usize).map(|_| rng.gen::<bool>()).collect())
        .collect()
}

/// Uniformly chosen fiber in `{0, ..., M-1}^d` of size `T`.
pub fn ad_seed_sample<R: Rng + ?Sized>(
    d: usize,
    r: u32,
    alpha: Exponent,
    m: u64,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let spec = ad_spec(d, r, alpha, m)?;
    let zeta = draw_zeta(&spec, rng);
    Ok(ad_fiber(&spec, &zeta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdSample {
    pub set: Vec<Point>,
    pub shift: Point,
    pub seed_set: Vec<Point>,
}

/// `S = A + Y_2 + ... + Y_r` with independent uniform shifts.
pub fn ad_regular_sample_full<R: Rng + ?Sized>(
    d: usize,
    r: u32,
    alpha: Exponent,
    m: u64,
    rng: &mut R,
) -> Result<AdSample> {
    let spec = ad_spec(d, r, alpha, m)?;
    let zeta = draw_zeta(&spec, rng);
    let seed_set = ad_fiber(&spec, &zeta);
    let mut shift = vec![0i64; d];
    for _ in 1..r {
        for c in shift.iter_mut() {
            *c += rng.gen_range(0..m as i64);
        }
    }
    let set = seed_set
        .iter()
        .map(|a| a.iter().zip(&shift).map(|(x, v)| x + v).collect())
        .collect();
    Ok(AdSample { set, shift, seed_set })
}

pub fn ad_regular_sample<R: Rng + ?Sized>(
    d: usize,
    r: u32,
    alpha: Exponent,
    m: u64,
    rng: &mut R,
) -> Result<Vec<Point>> {
    Ok(ad_regular_sample_full(d, r, alpha, m, rng)?.set)
}

/// `r^d M^α ≤ T ≤ C0 r^d M^α`; the lower side is exact.
pub fn t_scale_holds(spec: &AdSpec, alpha: Exponent) -> bool {
    use num::{BigInt, BigRational};
    let rd = BigRational::from_integer(BigInt::from(spec.r).pow(spec.d as u32));
    let t = BigRational::from_integer(BigInt::from(spec.t));
    let m = BigRational::from_integer(BigInt::from(1u64 << spec.n));
    // T / r^d ≥ M^α
    let lower = alpha.cmp_pow(&(&t / &rd), &m) != std::cmp::Ordering::Less;
    let bound = spec.c0.c0 * (spec.r as f64).powi(spec.d as i32) * (m_f64(spec)).powf(spec.alpha);
    lower && (spec.t as f64) <= bound * (1.0 + 1e-12)
}

fn m_f64(spec: &AdSpec) -> f64 {
    (1u64 << spec.n) as f64
}

/// Prefix-sum table for counting points of a set in axis-parallel boxes.
pub struct BoxCounter {
    d: usize,
    lo: Point,
    side: Vec<i64>,
    table: Vec<u32>,
}

impl BoxCounter {
    pub fn new(d: usize, points: &[Point]) -> Self {
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in points {
            for l in 0..d {
                lo[l] = lo[l].min(p[l]);
                hi[l] = hi[l].max(p[l]);
            }
        }
        if points.is_empty() {
            lo = vec![0; d];
            hi = vec![-1; d];
        }
        // table has one extra slot per axis: table[i] counts points < i
        let side: Vec<i64> = (0..d).map(|l| hi[l] - lo[l] + 2).collect();
        let size: i64 = side.iter().product();
        let mut table = vec![0u32; size as usize];
        let mut stride = vec![1usize; d];
        for l in (0..d.saturating_sub(1)).rev() {
            stride[l] = stride[l + 1] * side[l + 1] as usize;
        }
        for p in points {
            let idx: usize = (0..d).map(|l| (p[l] - lo[l] + 1) as usize * stride[l]).sum();
            table[idx] += 1;
        }
        for l in 0..d {
            let s = stride[l];
            for i in 0..table.len() {
                let coord = (i / s) % side[l] as usize;
                if coord > 0 {
                    table[i] += table[i - s];
                }
            }
        }
        BoxCounter { d, lo, side, table }
    }

    fn prefix(&self, upper: &[i64]) -> u32 {
        // number of points with every coordinate < upper
        let mut idx = 0usize;
        for l in 0..self.d {
            let c = (upper[l] - self.lo[l]).clamp(0, self.side[l] - 1);
            if c == 0 {
                return 0;
            }
            idx = idx * self.side[l] as usize + c as usize;
        }
        self.table[idx]
    }

    /// Points in the half-open box `[a, b)`.
    pub fn count(&self, a: &[i64], b: &[i64]) -> u32 {
        let mut total: i64 = 0;
        let mut corner = vec![0i64; self.d];
        for mask in 0..(1u32 << self.d) {
            let mut sign = 1i64;
            for l in 0..self.d {
                if mask >> l & 1 == 1 {
                    corner[l] = a[l];
                    sign = -sign;
                } else {
                    corner[l] = b[l];
                }
            }
            total += sign * self.prefix(&corner) as i64;
        }
        total as u32
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn extent(&self) -> Vec<i64> {
        self.side.iter().map(|s| s - 1).collect()
    }

    /// Largest count over all boxes with `w` integer points per axis.
    pub fn max_window(&self, w: i64) -> u32 {
        let ext = self.extent();
        let mut best = 0u32;
        let mut start: Vec<i64> = (0..self.d).map(|l| self.lo[l] - w + 1).collect();
        let first = start.clone();
        loop {
            let end: Vec<i64> = start.iter().map(|s| s + w).collect();
            best = best.max(self.count(&start, &end));
            let mut l = self.d;
            loop {
                if l == 0 {
                    return best;
                }
                l -= 1;
                start[l] += 1;
                if start[l] < self.lo[l] + ext[l] {
                    break;
                }
                start[l] = first[l];
            }
        }
    }
}

/// Worst ratios seen while checking the two counting bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCheck {
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// `max #(S ∩ B(x,R)) / R^α` over the tested radii.
    pub max_upper_ratio: f64,
    /// `min #(S ∩ B(x,R)) / R^α` over points of `S` and tested radii.
    pub min_lower_ratio: f64,
}

fn exact_ball_count(set: &[Point], x: &[i64], r: i64) -> u32 {
    let r2 = (r as i128) * (r as i128);
    set.iter()
        .filter(|p| {
            let d2: i128 = p.iter().zip(x).map(|(a, b)| ((a - b) as i128).pow(2)).sum();
            d2 < r2
        })
        .count() as u32
}

/// Checks both counting bounds for all dyadic `R ∈ [1, M]`.
///
/// The upper bound is checked against every axis-parallel cube of `2R+1`
/// lattice points, which dominates every closed cube `x + [-R, R]^d` with real
/// centre and hence every Euclidean ball. The lower bound counts the open ball
/// exactly, using an inscribed cube first.
pub fn check_counting_bounds(set: &[Point], d: usize, m: u64, alpha: f64, c0: f64) -> CountCheck {
    let counter = BoxCounter::new(d, set);
    let mut max_upper: f64 = 0.0;
    let mut min_lower = f64::INFINITY;
    let mut radius = 1i64;
    let slack = 1.0 + 1e-12;
    let mut lower_ok = true;
    while radius as u64 <= m {
        let ra = (radius as f64).powf(alpha);
        let w = 2 * radius + 1;
        let max_count = if (0..d).all(|l| counter.extent()[l] <= w) {
            set.len() as u32
        } else {
            counter.max_window(w)
        };
        max_upper = max_upper.max(max_count as f64 / ra);
        // largest h with h^2 d < R^2
        let mut h = ((radius as f64) / (d as f64).sqrt()).floor() as i64;
        while h > 0 && h * h * d as i64 >= radius * radius {
            h -= 1;
        }
        for x in set {
            let a: Vec<i64> = x.iter().map(|c| c - h).collect();
            let b: Vec<i64> = x.iter().map(|c| c + h + 1).collect();
            let mut cnt = counter.count(&a, &b);
            if (cnt as f64) * c0 * slack < ra {
                cnt = exact_ball_count(set, x, radius);
            }
            let ratio = cnt as f64 / ra;
            min_lower = min_lower.min(ratio);
            if (cnt as f64) * c0 * slack < ra {
                lower_ok = false;
            }
        }
        radius *= 2;
    }
    CountCheck {
        upper_ok: max_upper <= c0 * slack,
        lower_ok,
        max_upper_ratio: max_upper,
        min_lower_ratio: min_lower,
    }
}
