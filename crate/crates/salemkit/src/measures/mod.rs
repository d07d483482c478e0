//! Exact lattice-supported measures.
//!
//! A [`DiscreteMeasure`] at level `n` stores integer points `a` standing for
//! `a / 𝔐_n`, each with an exact rational mass. Fourier transforms are
//! evaluated in double precision; everything else is exact.

mod serial;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;

use num::complex::Complex64;
use num::{BigInt, BigRational, BigUint, Integer, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::samplers::char_m;
use crate::scales::{rational_to_f64, ScaleSequence, TreeLeafSet};
use crate::{Error, Mass, Point, Result};

pub use serial::{measure_from_text, measure_to_text};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    d: usize,
    level: usize,
    scale: BigUint,
    points: Vec<Point>,
    masses: Vec<Mass>,
    den: BigInt,
    nums: Vec<BigInt>,
}

impl DiscreteMeasure {
    /// Builds a measure, merging repeated points and dropping zero masses.
    pub fn from_atoms<I>(d: usize, level: usize, scale: BigUint, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, Mass)>,
    {
        let mut map: BTreeMap<Point, Mass> = BTreeMap::new();
        for (p, m) in atoms {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.len() });
            }
            if m.is_negative() {
                return Err(Error::InvalidParameters("negative atom mass".into()));
            }
            *map.entry(p).or_insert_with(Mass::zero) += m;
        }
        map.retain(|_, m| !m.is_zero());
        let den = map.values().fold(BigInt::one(), |acc, m| acc.lcm(m.denom()));
        let mut points = Vec::with_capacity(map.len());
        let mut masses = Vec::with_capacity(map.len());
        let mut nums = Vec::with_capacity(map.len());
        for (p, m) in map {
            nums.push(m.numer() * (&den / m.denom()));
            points.push(p);
            masses.push(m);
        }
        Ok(DiscreteMeasure { d, level, scale, points, masses, den, nums })
    }

    pub fn dirac(d: usize, level: usize, scale: BigUint) -> Self {
        Self::from_atoms(d, level, scale, [(vec![0; d], Mass::one())]).unwrap()
    }

    /// Equal masses `1/#points` on distinct points.
    pub fn uniform(d: usize, level: usize, scale: BigUint, points: &[Point]) -> Result<Self> {
        let m = Mass::new(BigInt::one(), BigInt::from(points.len()));
        Self::from_atoms(d, level, scale, points.iter().map(|p| (p.clone(), m.clone())))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// The denominator `𝔐_n` of the lattice.
    pub fn scale(&self) -> &BigUint {
        &self.scale
    }

    pub fn scale_f64(&self) -> f64 {
        self.scale.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn masses(&self) -> &[Mass] {
        &self.masses
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, &Mass)> {
        self.points.iter().zip(&self.masses)
    }

    pub fn mass_at(&self, p: &[i64]) -> Mass {
        match self.points.binary_search_by(|q| q.as_slice().cmp(p)) {
            Ok(i) => self.masses[i].clone(),
            Err(_) => Mass::zero(),
        }
    }

    pub fn total_mass(&self) -> Mass {
        Mass::new(self.nums.iter().sum(), self.den.clone())
    }

    pub fn is_probability(&self) -> bool {
        self.total_mass().is_one()
    }

    pub fn same_lattice(&self, other: &Self) -> bool {
        self.d == other.d && self.level == other.level && self.scale == other.scale
    }

    /// Sum of two measures on the same lattice.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.same_lattice(other) {
            return Err(Error::LevelMismatch);
        }
        Self::from_atoms(
            self.d,
            self.level,
            self.scale.clone(),
            self.atoms().chain(other.atoms()).map(|(p, m)| (p.clone(), m.clone())),
        )
    }

    pub fn scaled(&self, c: &Mass) -> Self {
        Self::from_atoms(
            self.d,
            self.level,
            self.scale.clone(),
            self.atoms().map(|(p, m)| (p.clone(), m * c)),
        )
        .unwrap()
    }

    /// Restriction to the atoms satisfying `keep`.
    pub fn restrict<F: Fn(&Point) -> bool>(&self, keep: F) -> Self {
        Self::from_atoms(
            self.d,
            self.level,
            self.scale.clone(),
            self.atoms().filter(|(p, _)| keep(p)).map(|(p, m)| (p.clone(), m.clone())),
        )
        .unwrap()
    }

    /// Same measure on the finer lattice `1/(k 𝔐_n)`, labelled `level`.
    pub fn refine(&self, level: usize, k: u64) -> Self {
        let kk = k as i64;
        Self::from_atoms(
            self.d,
            level,
            &self.scale * BigUint::from(k),
            self.atoms().map(|(p, m)| (p.iter().map(|c| c * kk).collect(), m.clone())),
        )
        .unwrap()
    }

    /// Translate by `v / 𝔐_n`.
    pub fn translate(&self, v: &[i64]) -> Self {
        Self::from_atoms(
            self.d,
            self.level,
            self.scale.clone(),
            self.atoms().map(|(p, m)| (p.iter().zip(v).map(|(a, b)| a + b).collect(), m.clone())),
        )
        .unwrap()
    }

    /// `x ↦ -x`.
    pub fn reflect(&self) -> Self {
        Self::from_atoms(
            self.d,
            self.level,
            self.scale.clone(),
            self.atoms().map(|(p, m)| (p.iter().map(|c| -c).collect(), m.clone())),
        )
        .unwrap()
    }

    /// Common denominator of the masses.
    pub fn common_den(&self) -> &BigInt {
        &self.den
    }

    /// Mass numerators over [`Self::common_den`].
    pub fn numerators(&self) -> &[BigInt] {
        &self.nums
    }

    pub fn masses_f64(&self) -> Vec<f64> {
        self.masses.iter().map(rational_to_f64).collect()
    }
}

/// Pushes leaves forward under the coding map, merging equal points.
pub fn measure_from_leaves(scales: &ScaleSequence, leaves: &TreeLeafSet) -> Result<DiscreteMeasure> {
    let n = leaves.depth;
    let mut atoms = Vec::with_capacity(leaves.len());
    for leaf in &leaves.leaves {
        if leaf.word.len() != n {
            return Err(Error::MixedDepths { first: n, other: leaf.word.len() });
        }
        atoms.push((crate::scales::lattice_point(scales, &leaf.word)?, leaf.mass.clone()));
    }
    DiscreteMeasure::from_atoms(scales.d(), n, scales.mm(n).clone(), atoms)
}

pub fn convolve(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if !mu.same_lattice(nu) {
        return Err(Error::LevelMismatch);
    }
    let mut acc: HashMap<Point, BigInt> = HashMap::new();
    for (p, a) in mu.points.iter().zip(&mu.nums) {
        for (q, b) in nu.points.iter().zip(&nu.nums) {
            let s: Point = p.iter().zip(q).map(|(x, y)| x + y).collect();
            *acc.entry(s).or_insert_with(BigInt::zero) += a * b;
        }
    }
    let den = &mu.den * &nu.den;
    DiscreteMeasure::from_atoms(
        mu.d,
        mu.level,
        mu.scale.clone(),
        acc.into_iter().map(|(p, v)| (p, Mass::new(v, den.clone()))),
    )
}

/// Floating-point snapshot of a measure for repeated Fourier evaluation.
#[derive(Clone, Debug)]
pub struct FourierTable {
    d: usize,
    scale: f64,
    coords: Vec<f64>,
    masses: Vec<f64>,
}

impl FourierTable {
    pub fn new(mu: &DiscreteMeasure) -> Self {
        FourierTable {
            d: mu.d,
            scale: mu.scale_f64(),
            coords: mu.points.iter().flat_map(|p| p.iter().map(|&c| c as f64)).collect(),
            masses: mu.masses_f64(),
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let t: Vec<f64> = xi.iter().map(|x| x / self.scale).collect();
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, m) in self.masses.iter().enumerate() {
            let a = &self.coords[k * self.d..(k + 1) * self.d];
            let mut phase = 0.0;
            for l in 0..self.d {
                let v = a[l] * t[l];
                phase += v - v.round();
            }
            let (s, c) = (-2.0 * PI * phase).sin_cos();
            re += m * c;
            im += m * s;
        }
        Complex64::new(re, im)
    }

    pub fn eval_batch(&self, xis: &[Vec<f64>]) -> Vec<Complex64> {
        xis.par_iter().map(|xi| self.eval(xi)).collect()
    }
}

/// `μ̂(ξ) = Σ_a μ(a) e^{-2πi (a/𝔐_n)·ξ}`.
pub fn fourier_eval(mu: &DiscreteMeasure, xi: &[f64]) -> Complex64 {
    FourierTable::new(mu).eval(xi)
}

/// The `r`-fold self-convolution of the unit cube indicator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelPhi {
    pub r: u32,
    pub d: usize,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// `Φ̂(ξ) = ∏_ℓ ((1 - e^{-2πiξ_ℓ}) / (2πiξ_ℓ))^r`.
pub fn phi_hat(kernel: &KernelPhi, xi: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for &x in xi.iter().take(kernel.d) {
        acc *= Complex64::from_polar(sinc(x), -PI * x).powu(kernel.r);
    }
    acc
}

/// `Φ̂_n(ξ) = Φ̂(ξ / 𝔐_n)`.
pub fn phi_hat_scaled(kernel: &KernelPhi, scales: &ScaleSequence, n: usize, xi: &[f64]) -> Complex64 {
    let s = scales.mm_f64(n);
    let t: Vec<f64> = xi.iter().map(|x| x / s).collect();
    phi_hat(kernel, &t)
}

/// Exact mass of the open ball `B(x, ρ)`.
pub fn ball_mass(mu: &DiscreteMeasure, x: &[BigRational], rho: &BigRational) -> Mass {
    ball_mass_sq(mu, x, &(rho * rho))
}

/// Exact mass of the open ball with squared radius `rho_sq`.
pub fn ball_mass_sq(mu: &DiscreteMeasure, x: &[BigRational], rho_sq: &BigRational) -> Mass {
    let den = x.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let centre: Vec<BigInt> = x.iter().map(|c| c.numer() * (&den / c.denom())).collect();
    let mm = BigInt::from(mu.scale.clone());
    // |a den - c mm|^2 q < p den^2 mm^2 for rho_sq = p/q
    let rhs = {
        let t = &den * &mm;
        rho_sq.numer() * &t * &t
    };
    let pd2 = rho_sq.denom().clone();
    let small = (|| {
        Some((
            den.to_i128()?,
            centre.iter().map(|c| c.to_i128()).collect::<Option<Vec<_>>>()?,
            mm.to_i128()?,
        ))
    })();
    let mut acc = BigInt::zero();
    for (p, num) in mu.points.iter().zip(&mu.nums) {
        let inside = match &small {
            Some((den_i, c_i, mm_i)) => {
                let mut s: Option<i128> = Some(0);
                for (a, c) in p.iter().zip(c_i) {
                    s = s.and_then(|s| {
                        let v = (*a as i128).checked_mul(*den_i)?.checked_sub(c.checked_mul(*mm_i)?)?;
                        s.checked_add(v.checked_mul(v)?)
                    });
                }
                match s {
                    Some(s) => BigInt::from(s) * &pd2 < rhs,
                    None => big_inside(p, &den, &centre, &mm, &pd2, &rhs),
                }
            }
            None => big_inside(p, &den, &centre, &mm, &pd2, &rhs),
        };
        if inside {
            acc += num;
        }
    }
    Mass::new(acc, mu.den.clone())
}

fn big_inside(p: &[i64], den: &BigInt, c: &[BigInt], mm: &BigInt, pd2: &BigInt, rhs: &BigInt) -> bool {
    let mut s = BigInt::zero();
    for (a, ci) in p.iter().zip(c) {
        let v = BigInt::from(*a) * den - ci * mm;
        s += &v * &v;
    }
    s * pd2 < *rhs
}

/// Ball mass with a lattice centre `c / 𝔐_n` and radius `ρ`.
pub fn ball_mass_at_atom(mu: &DiscreteMeasure, c: &[i64], rho: &BigRational) -> Mass {
    ball_mass_at_atom_sq(mu, c, &(rho * rho))
}

pub fn ball_mass_at_atom_sq(mu: &DiscreteMeasure, c: &[i64], rho_sq: &BigRational) -> Mass {
    let mm = BigInt::from(mu.scale.clone());
    let x: Vec<BigRational> =
        c.iter().map(|&v| BigRational::new(BigInt::from(v), mm.clone())).collect();
    ball_mass_sq(mu, &x, rho_sq)
}

/// `𝔇_n(ξ) = μ̂_n(ξ) - m_n(ξ/𝔐_n) μ̂_{n-1}(ξ)`.
pub fn increment_d(
    mu_n: &DiscreteMeasure,
    mu_prev: &DiscreteMeasure,
    scales: &ScaleSequence,
    n: usize,
    xi: &[f64],
) -> Result<Complex64> {
    if mu_n.level != n || mu_prev.level + 1 != n || mu_n.scale != *scales.mm(n) {
        return Err(Error::LevelMismatch);
    }
    let s = scales.mm_f64(n);
    let t: Vec<f64> = xi.iter().map(|x| x / s).collect();
    Ok(fourier_eval(mu_n, xi) - char_m(scales, n, &t) * fourier_eval(mu_prev, xi))
}

fn lattice_delta(scale: &BigUint, delta: &BigRational) -> Result<i64> {
    let m = delta * BigRational::from_integer(BigInt::from(scale.clone()));
    if !m.is_integer() || !m.is_positive() {
        return Err(Error::NonLatticeDelta);
    }
    m.to_integer().to_i64().ok_or(Error::NonLatticeDelta)
}

/// Volume of `∪_a (a/𝔐 + [-δ, δ]^d)` for lattice-aligned `δ`.
pub fn neighborhood_volume(
    points: &[Point],
    d: usize,
    scale: &BigUint,
    delta: &BigRational,
) -> Result<BigRational> {
    let m = lattice_delta(scale, delta)?;
    let cells = neighborhood_cells(points, d, m);
    let unit = BigRational::new(BigInt::one(), BigInt::from(scale.clone()).pow(d as u32));
    Ok(BigRational::from_integer(BigInt::from(cells)) * unit)
}

/// Number of unit cells `[k, k+1)^d` covered by `∪_a (a + [-m, m]^d)`.
pub fn neighborhood_cells(points: &[Point], d: usize, m: i64) -> u64 {
    if points.is_empty() {
        return 0;
    }
    if d == 1 {
        let mut iv: Vec<(i64, i64)> = points.iter().map(|p| (p[0] - m, p[0] + m)).collect();
        iv.sort();
        let mut total = 0u64;
        let (mut lo, mut hi) = iv[0];
        for &(a, b) in &iv[1..] {
            if a > hi {
                total += (hi - lo) as u64;
                lo = a;
                hi = b;
            } else {
                hi = hi.max(b);
            }
        }
        return total + (hi - lo) as u64;
    }
    // sweep over the first coordinate, recursing on the rest
    let mut events: BTreeMap<i64, Vec<Point>> = BTreeMap::new();
    for p in points {
        for k in p[0] - m..p[0] + m {
            events.entry(k).or_default().push(p[1..].to_vec());
        }
    }
    let mut total = 0u64;
    for (_, slice) in events {
        let uniq: HashSet<Point> = slice.into_iter().collect();
        let v: Vec<Point> = uniq.into_iter().collect();
        total += neighborhood_cells(&v, d - 1, m);
    }
    total
}

/// `{a - b : a, b ∈ E}`, sorted.
pub fn difference_set(points: &[Point]) -> Vec<Point> {
    let mut set: HashSet<Point> = HashSet::new();
    for a in points {
        for b in points {
            set.insert(a.iter().zip(b).map(|(x, y)| x - y).collect());
        }
    }
    let mut v: Vec<Point> = set.into_iter().collect();
    v.sort();
    v
}

/// Regular grid `origin + h k`, `0 ≤ k_ℓ < counts_ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub h: f64,
    pub counts: Vec<usize>,
}

impl GridSpec {
    /// Cell midpoints of `[lo, hi]^d` with spacing `h`.
    pub fn midpoints(d: usize, lo: f64, hi: f64, h: f64) -> Self {
        let n = ((hi - lo) / h).round().max(0.0) as usize;
        GridSpec { origin: vec![lo + h / 2.0; d], h, counts: vec![n; d] }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let d = self.counts.len();
        let mut out = vec![0.0; d];
        for l in (0..d).rev() {
            let k = idx % self.counts[l];
            idx /= self.counts[l];
            out[l] = self.origin[l] + self.h * k as f64;
        }
        out
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// `(Σ |v|^p h^d)^{1/p}`, or `max |v|` for `p = ∞`.
pub fn grid_lp_norm(grid: &GridSpec, values: &[f64], p: f64) -> Result<f64> {
    if grid.is_empty() || values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    let cell = grid.h.powi(grid.counts.len() as i32);
    let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell;
    Ok(s.powf(1.0 / p))
}

/// `(μ ∗ 1_A)(x) = Σ_a μ(a) 1_A(x - a/𝔐_n)` at every grid point.
pub fn measure_conv_indicator<F>(mu: &DiscreteMeasure, indicator: F, grid: &GridSpec) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let s = mu.scale_f64();
    let pts: Vec<Vec<f64>> = mu.points.iter().map(|p| p.iter().map(|&c| c as f64 / s).collect()).collect();
    let ms = mu.masses_f64();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut y = vec![0.0; x.len()];
            let mut acc = 0.0;
            for (a, m) in pts.iter().zip(&ms) {
                for l in 0..x.len() {
                    y[l] = x[l] - a[l];
                }
                if indicator(&y) {
                    acc += m;
                }
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn merge_and_convolve() {
        let s = BigUint::from(2u32);
        let mu = DiscreteMeasure::from_atoms(1, 1, s.clone(), [(vec![0], q(1, 4)), (vec![0], q(1, 4)), (vec![1], q(1, 2))]).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.mass_at(&[0]), q(1, 2));
        let c = convolve(&mu, &mu).unwrap();
        assert_eq!(c.masses(), &[q(1, 4), q(1, 2), q(1, 4)]);
        let delta = DiscreteMeasure::dirac(1, 1, s);
        assert_eq!(convolve(&delta, &mu).unwrap(), mu);
        assert!(fourier_eval(&mu, &[1.0]).norm() < 1e-15);
    }

    #[test]
    fn balls() {
        let s = BigUint::from(4u32);
        let mu = DiscreteMeasure::uniform(1, 1, s, &[vec![0], vec![1], vec![3]]).unwrap();
        assert_eq!(ball_mass_at_atom(&mu, &[0], &q(1, 4)), q(1, 3));
        assert_eq!(ball_mass_at_atom(&mu, &[0], &q(1, 2)), q(2, 3));
        assert_eq!(ball_mass(&mu, &[q(1, 2)], &q(10, 1)), q(1, 1));
    }

    #[test]
    fn neighborhoods() {
        let s = BigUint::from(8u32);
        let one = neighborhood_volume(&[vec![0, 0]], 2, &s, &q(1, 8)).unwrap();
        assert_eq!(one, q(4, 64));
        let two = neighborhood_volume(&[vec![0, 0], vec![2, 0]], 2, &s, &q(1, 8)).unwrap();
        assert_eq!(two, q(8, 64));
        assert_eq!(neighborhood_volume(&[vec![0]], 1, &s, &q(1, 16)), Err(Error::NonLatticeDelta));
        assert_eq!(difference_set(&[vec![0], vec![1]]), vec![vec![-1], vec![0], vec![1]]);
    }

    #[test]
    fn kernel_and_norms() {
        let k = KernelPhi { r: 2, d: 1 };
        assert!((phi_hat(&k, &[0.0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let g = GridSpec::midpoints(2, 0.0, 1.0, 0.1);
        let v = vec![1.0; g.len()];
        assert!((grid_lp_norm(&g, &v, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(grid_lp_norm(&g, &[0.5, -2.0], f64::INFINITY).unwrap(), 2.0);
    }
}
