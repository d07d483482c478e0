//! Scale sequences, digit sets, words, coding maps and weighted trees.
//!
//! A scale sequence fixes integers `M_1 < M_2 < ... < M_N` and their prefix
//! products `𝔐_n = M_1 ⋯ M_n`. Digits at level `n` of order `s` range over
//! `{0, ..., s(M_n - 1)}^d`, and a word `w` is coded by
//! `X(w) = Σ w_n / 𝔐_n`, stored as the lattice point `𝔐_{|w|} X(w)`.

mod exponent;
mod tree;

use num::{BigInt, BigRational, BigUint, One, ToPrimitive, Zero};

pub use exponent::{dyadic_ceil, dyadic_floor, pow_int, rational_to_f64, Exponent};
pub use tree::{
    coding_point, expand_levels, expand_tree, lattice_point, max_lattice_multiplicity,
    CodedPoint, Leaf, OffspringAssignment, TreeLeafSet, Word,
};

use crate::{Error, Point, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleSequence {
    d: usize,
    r: u32,
    m: Vec<u64>,
    mm: Vec<BigUint>,
}

/// Validates `M_list` and computes exact prefix products.
pub fn make_scales(d: usize, r: u32, m_list: &[u64]) -> Result<ScaleSequence> {
    if m_list.is_empty() {
        return Err(Error::EmptyScales);
    }
    if d == 0 {
        return Err(Error::InvalidParameters("dimension must be positive".into()));
    }
    if r == 0 {
        return Err(Error::InvalidParameters("digit order must be positive".into()));
    }
    for (i, &v) in m_list.iter().enumerate() {
        if v < 2 {
            return Err(Error::ScaleTooSmall { index: i + 1, value: v });
        }
        if i > 0 && v <= m_list[i - 1] {
            return Err(Error::NonIncreasingScales {
                index: i + 1,
                prev: m_list[i - 1],
                next: v,
            });
        }
    }
    let mut mm = Vec::with_capacity(m_list.len() + 1);
    mm.push(BigUint::one());
    for &v in m_list {
        let next = mm.last().unwrap() * BigUint::from(v);
        mm.push(next);
    }
    Ok(ScaleSequence { d, r, m: m_list.to_vec(), mm })
}

/// `M_n = 2^{n0 + n}` for `n = 1..=N`.
pub fn default_dyadic_schedule(n0: u32, depth: usize) -> Vec<u64> {
    (1..=depth as u32).map(|n| 1u64 << (n0 + n)).collect()
}

impl ScaleSequence {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Number of scales `N`.
    pub fn depth(&self) -> usize {
        self.m.len()
    }

    /// `M_n`, 1-indexed.
    pub fn m(&self, n: usize) -> u64 {
        self.m[n - 1]
    }

    pub fn m_list(&self) -> &[u64] {
        &self.m
    }

    /// `𝔐_n` with `𝔐_0 = 1`.
    pub fn mm(&self, n: usize) -> &BigUint {
        &self.mm[n]
    }

    pub fn mm_i64(&self, n: usize) -> Result<i64> {
        self.mm[n].to_i64().ok_or(Error::LatticeOverflow { level: n })
    }

    pub fn mm_f64(&self, n: usize) -> f64 {
        self.mm[n].to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn mm_rational(&self, n: usize) -> BigRational {
        BigRational::from_integer(BigInt::from(self.mm[n].clone()))
    }

    /// `𝔐_n / 𝔐_k` for `k <= n`.
    pub fn mm_ratio(&self, k: usize, n: usize) -> Result<i64> {
        let mut acc: i64 = 1;
        for j in k + 1..=n {
            acc = acc
                .checked_mul(self.m[j - 1] as i64)
                .ok_or(Error::LatticeOverflow { level: n })?;
        }
        Ok(acc)
    }

    /// Largest coordinate of an order-`s` digit at level `n`.
    pub fn digit_max(&self, n: usize, order: u32) -> i64 {
        order as i64 * (self.m(n) as i64 - 1)
    }

    /// All digits of `𝒟_n^{[s]}` in lexicographic order.
    pub fn digit_set(&self, n: usize, order: u32) -> Vec<Point> {
        grid_points(self.d, self.digit_max(n, order) + 1)
    }

    /// Checks `Σ_{n<k≤N} r(M_k-1)/𝔐_k + r/𝔐_N = r/𝔐_n` exactly.
    pub fn telescoping_holds(&self, n: usize, big_n: usize) -> bool {
        let r = BigRational::from_integer(BigInt::from(self.r));
        let mut lhs = BigRational::zero();
        for k in n + 1..=big_n {
            let num = &r * BigRational::from_integer(BigInt::from(self.m(k) - 1));
            lhs += num / self.mm_rational(k);
        }
        lhs += &r / self.mm_rational(big_n);
        lhs == r / self.mm_rational(n)
    }

    /// The first `depth` scales.
    pub fn truncate(&self, depth: usize) -> Result<ScaleSequence> {
        if depth == 0 || depth > self.depth() {
            return Err(Error::DepthExceedsScales {
                requested: depth,
                available: self.depth(),
            });
        }
        make_scales(self.d, self.r, &self.m[..depth])
    }
}

/// All points of `{0, ..., side-1}^d` in lexicographic order.
pub fn grid_points(d: usize, side: i64) -> Vec<Point> {
    let mut out = Vec::with_capacity((side.max(0) as usize).pow(d as u32));
    let mut cur = vec![0i64; d];
    if side <= 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < side {
                break;
            }
            cur[i] = 0;
        }
    }
}
