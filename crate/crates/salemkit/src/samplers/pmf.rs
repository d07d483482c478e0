use std::f64::consts::PI;

use num::complex::Complex64;
use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::scales::ScaleSequence;
use crate::Point;

/// Law of `Y_1 + ... + Y_r` with `Y_i` uniform on `{0, ..., M-1}^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    pub level: usize,
    pub order: u32,
    pub d: usize,
    pub m: u64,
    /// Per-coordinate counts on `{0, ..., r(M-1)}`; mass is `count / M^r`.
    counts: Vec<BigInt>,
    den: BigInt,
}

impl Pmf {
    pub fn new(level: usize, order: u32, d: usize, m: u64) -> Self {
        let mut counts = vec![BigInt::one(); m as usize];
        for _ in 1..order {
            let mut next = vec![BigInt::zero(); counts.len() + m as usize - 1];
            // sliding sum of width m
            let mut run = BigInt::zero();
            for (i, slot) in next.iter_mut().enumerate() {
                if i < counts.len() {
                    run += &counts[i];
                }
                if i >= m as usize {
                    run -= &counts[i - m as usize];
                }
                *slot = run.clone();
            }
            counts = next;
        }
        let den = num::pow(BigInt::from(m), order as usize);
        Pmf { level, order, d, m, counts, den }
    }

    /// Per-coordinate mass `q(k)`.
    pub fn q(&self, k: i64) -> BigRational {
        if k < 0 || k as usize >= self.counts.len() {
            return BigRational::zero();
        }
        BigRational::new(self.counts[k as usize].clone(), self.den.clone())
    }

    pub fn q_table(&self) -> Vec<BigRational> {
        (0..self.counts.len() as i64).map(|k| self.q(k)).collect()
    }

    pub fn count(&self, k: i64) -> &BigInt {
        &self.counts[k as usize]
    }

    /// `M^r`, the per-coordinate denominator.
    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    /// Joint mass `p_n(u) = ∏_j q(u_j)`.
    pub fn p(&self, u: &[i64]) -> BigRational {
        let mut acc = BigRational::one();
        for &c in u {
            acc *= self.q(c);
        }
        acc
    }

    pub fn p_f64(&self, u: &[i64]) -> f64 {
        u.iter()
            .map(|&c| {
                if c < 0 || c as usize >= self.counts.len() {
                    0.0
                } else {
                    self.counts[c as usize].to_f64().unwrap() / self.den.to_f64().unwrap()
                }
            })
            .product()
    }

    pub fn support_side(&self) -> i64 {
        self.counts.len() as i64
    }

    pub fn support(&self) -> Vec<Point> {
        crate::scales::grid_points(self.d, self.support_side())
    }
}

/// The digit pmf `p_n` on `𝒟_n^{[r]}`.
pub fn pmf(scales: &ScaleSequence, n: usize) -> Pmf {
    Pmf::new(n, scales.r(), scales.d(), scales.m(n))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Normalized Dirichlet kernel `𝖣_N(t) = N^{-1} Σ_{j<N} e^{-2πijt}`.
pub fn dirichlet(n: u64, t: f64) -> Complex64 {
    let n = n.max(1);
    let tr = t - t.round();
    let nf = n as f64;
    let amp = if n == 1 { 1.0 } else { nf * sinc(nf * tr) / (nf * sinc(tr)) };
    Complex64::from_polar(amp, -PI * (nf - 1.0) * tr)
}

/// Direct summation form of [`dirichlet`], used as an oracle.
pub fn dirichlet_direct(n: u64, t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        acc += Complex64::from_polar(1.0, -2.0 * PI * j as f64 * t);
    }
    acc / n as f64
}

/// `m_n(ξ) = ∏_ℓ 𝖣_{M_n}(ξ_ℓ)^r`.
pub fn char_m(scales: &ScaleSequence, n: usize, xi: &[f64]) -> Complex64 {
    char_m_raw(scales.m(n), scales.r(), xi)
}

pub fn char_m_raw(m: u64, r: u32, xi: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for &x in xi {
        acc *= dirichlet(m, x).powu(r);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::make_scales;

    #[test]
    fn pmf_small() {
        let s = make_scales(1, 2, &[2]).unwrap();
        let p = pmf(&s, 1);
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(p.q_table(), vec![q(1, 4), q(1, 2), q(1, 4)]);
        let u = Pmf::new(1, 1, 2, 3);
        assert_eq!(u.p(&[2, 1]), q(1, 9));
    }

    #[test]
    fn dirichlet_values() {
        assert!((dirichlet(5, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(dirichlet(2, 0.5).norm() < 1e-15);
        for &(n, t) in &[(3u64, 0.1), (7, 0.37), (16, 2.0 + 1e-9), (5, -0.4)] {
            assert!((dirichlet(n, t) - dirichlet_direct(n, t)).norm() < 1e-12);
        }
    }
}
