use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

/// A dimension-type exponent stored as an exact rational `p/q`.
///
/// Ceilings such as `⌈α j⌉` are computed exactly, so `0.3 * 10` is `3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Exponent {
    num: i64,
    den: i64,
}

impl Exponent {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Exponent { num: n, den: d }
    }

    pub fn integer(k: i64) -> Self {
        Exponent { num: k, den: 1 }
    }

    /// Nearest rational with denominator at most `10^6`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let limit = 1_000_000i64;
        let (mut h0, mut h1) = (0i64, 1i64);
        let (mut k0, mut k1) = (1i64, 0i64);
        let mut v = x;
        for _ in 0..64 {
            let a = v.floor();
            if a.abs() > 1e12 {
                break;
            }
            let ai = a as i64;
            let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
            let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
            if k2 > limit {
                break;
            }
            h0 = h1;
            h1 = h2;
            k0 = k1;
            k1 = k2;
            let frac = v - a;
            if frac.abs() < 1e-12 || (h1 as f64 / k1 as f64 - x).abs() < 1e-15 {
                break;
            }
            v = 1.0 / frac;
        }
        if k1 == 0 {
            return None;
        }
        Some(Exponent::new(h1, k1))
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// `⌈self · k⌉`, exact.
    pub fn ceil_mul(&self, k: i64) -> i64 {
        let p = self.num as i128 * k as i128;
        let q = self.den as i128;
        (p.div_euclid(q) + if p.rem_euclid(q) == 0 { 0 } else { 1 }) as i64
    }

    /// `⌊self · k⌋`, exact.
    pub fn floor_mul(&self, k: i64) -> i64 {
        let p = self.num as i128 * k as i128;
        (p.div_euclid(self.den as i128)) as i64
    }

    pub fn add(&self, o: &Exponent) -> Exponent {
        Exponent::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn sub(&self, o: &Exponent) -> Exponent {
        Exponent::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    pub fn mul(&self, o: &Exponent) -> Exponent {
        Exponent::new(self.num * o.num, self.den * o.den)
    }

    pub fn div_int(&self, k: i64) -> Exponent {
        Exponent::new(self.num, self.den * k)
    }

    pub fn ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn powf(&self, base: f64) -> f64 {
        base.powf(self.to_f64())
    }

    /// Compares `x` with `base^self` exactly; both must be positive.
    pub fn cmp_pow(&self, x: &BigRational, base: &BigRational) -> Ordering {
        debug_assert!(x.is_positive() && base.is_positive());
        let lhs = pow_int(x, self.den);
        let rhs = pow_int(base, self.num);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// `x^k` for any integer `k`; `x` must be nonzero when `k < 0`.
pub fn pow_int(x: &BigRational, k: i64) -> BigRational {
    let mut base = if k < 0 { x.recip() } else { x.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = BigRational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Rational lower approximation of a positive real on the grid `2^{-bits}`.
pub fn dyadic_floor(x: f64, bits: u32) -> BigRational {
    let scale = (2f64).powi(bits as i32);
    let n = (x * scale).floor();
    BigRational::new(
        BigInt::from(n.to_i64().unwrap_or(0)),
        BigInt::one() << bits as usize,
    )
}

/// Rational upper approximation of a positive real on the grid `2^{-bits}`.
pub fn dyadic_ceil(x: f64, bits: u32) -> BigRational {
    let scale = (2f64).powi(bits as i32);
    let n = (x * scale).ceil();
    BigRational::new(
        BigInt::from(n.to_i64().unwrap_or(0)),
        BigInt::one() << bits as usize,
    )
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            let n = x.numer().bits() as i64;
            let d = x.denom().bits() as i64;
            let shift = (n - d).max(0) as usize;
            let scaled = BigRational::new(x.numer().clone(), x.denom() << shift);
            scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_conversion_is_exact_for_decimals() {
        let a = Exponent::from_f64(0.3).unwrap();
        assert_eq!((a.numer(), a.denom()), (3, 10));
        assert_eq!(a.ceil_mul(10), 3);
        assert_eq!(a.ceil_mul(11), 4);
        assert_eq!(Exponent::from_f64(1.6).unwrap(), Exponent::new(8, 5));
    }

    #[test]
    fn ceil_and_floor() {
        let a = Exponent::new(1, 2);
        assert_eq!(a.ceil_mul(3), 2);
        assert_eq!(a.floor_mul(3), 1);
        assert_eq!(a.ceil_mul(-3), -1);
        assert_eq!(a.ceil_mul(0), 0);
    }

    #[test]
    fn power_comparison() {
        let a = Exponent::new(1, 2);
        let four = BigRational::from_integer(4.into());
        let two = BigRational::from_integer(2.into());
        assert_eq!(a.cmp_pow(&two, &four), Ordering::Equal);
        let three = BigRational::from_integer(3.into());
        assert_eq!(a.cmp_pow(&three, &four), Ordering::Greater);
        let neg = Exponent::new(-1, 2);
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(neg.cmp_pow(&half, &four), Ordering::Equal);
    }
}
