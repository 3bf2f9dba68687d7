//! Exact arithmetic on numbers of the form a + b√m with rational a, b and a
//! square-free radicand m. The translation amounts of group actions live
//! here so that membership questions ("is A·t exactly zero?") are decided,
//! not floated.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::scalar::RationalScalar;
use crate::Rational;

/// a + b√m. Canonical form: `b = 0` implies `m = 0`; otherwise m ≥ 2 and
/// square-free. Arithmetic between two values with distinct nonzero
/// radicands is a construction bug upstream and panics.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadNum<R: RationalScalar> {
    a: R,
    b: R,
    m: u64,
}

fn is_square_free(m: u64) -> bool {
    let mut m = m;
    let mut d = 2u64;
    while d * d <= m {
        if m % (d * d) == 0 {
            return false;
        }
        while m % d == 0 {
            m /= d;
        }
        d += 1;
    }
    true
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QuadError {
    #[error("radicand {0} is not square-free (or is zero)")]
    NotSquareFree(u64),
    #[error("cannot parse quadratic number from {0:?}")]
    Parse(String),
}

impl<R: RationalScalar> QuadNum<R> {
    /// Build a + b√m. m = 1 folds into the rational part.
    pub fn new(a: R, b: R, m: u64) -> Result<Self, QuadError> {
        if b.is_zero() {
            return Ok(Self { a, b, m: 0 });
        }
        if m == 1 {
            return Ok(Self {
                a: a + b,
                b: R::zero(),
                m: 0,
            });
        }
        if m == 0 || !is_square_free(m) {
            return Err(QuadError::NotSquareFree(m));
        }
        Ok(Self { a, b, m })
    }

    pub fn rational(a: R) -> Self {
        Self {
            a,
            b: R::zero(),
            m: 0,
        }
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(R::from_integer_i64(n))
    }

    /// √m itself.
    pub fn sqrt(m: u64) -> Result<Self, QuadError> {
        Self::new(R::zero(), R::one(), m)
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn rational_part(&self) -> &R {
        &self.a
    }

    pub fn radical_part(&self) -> &R {
        &self.b
    }

    /// 0 when the value is rational.
    pub fn radicand(&self) -> u64 {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn joint_radicand(&self, other: &Self) -> u64 {
        match (self.m, other.m) {
            (0, m) | (m, 0) => m,
            (m1, m2) if m1 == m2 => m1,
            (m1, m2) => panic!("mixed radicands √{m1} and √{m2}"),
        }
    }

    /// Sign of the real value: -1, 0 or +1.
    pub fn signum(&self) -> i8 {
        let sa = if self.a.is_positive() {
            1i8
        } else if self.a.is_negative() {
            -1
        } else {
            0
        };
        let sb = if self.b.is_positive() {
            1i8
        } else if self.b.is_negative() {
            -1
        } else {
            0
        };
        match (sa, sb) {
            (0, s) | (s, 0) => s,
            (x, y) if x == y => x,
            _ => {
                // opposite signs: compare a² with b²·m
                let a2 = self.a.clone() * self.a.clone();
                let b2m = self.b.clone() * self.b.clone() * R::from_integer_u64(self.m);
                match a2.cmp(&b2m) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    // equal is impossible for square-free m ≥ 2 unless zero
                    Ordering::Equal => 0,
                }
            }
        }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        let k = R::from_integer_i64(k);
        Self {
            a: self.a.clone() * k.clone(),
            b: self.b.clone() * k,
            m: if self.b.is_zero() { 0 } else { self.m },
        }
        .renormalize()
    }

    pub fn scale_rational(&self, k: &R) -> Self {
        Self {
            a: self.a.clone() * k.clone(),
            b: self.b.clone() * k.clone(),
            m: self.m,
        }
        .renormalize()
    }

    fn renormalize(mut self) -> Self {
        if self.b.is_zero() {
            self.m = 0;
        }
        self
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().expect("rational out of f64 range");
        let b = self.b.to_f64().expect("rational out of f64 range");
        a + b * (self.m as f64).sqrt()
    }
}

impl QuadNum<Rational> {
    /// n/d as an exact quadratic number.
    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::rational(Rational::new(n.into(), d.into()))
    }

    /// Machine-word mirror for hot exact loops. Succeeds when both
    /// coefficients fit comfortably (headroom for the cross-multiplied
    /// comparisons downstream); falls back to the big lane otherwise.
    pub fn to_small(&self) -> Option<QuadNum<num_rational::Ratio<i128>>> {
        const BOUND: i128 = 1 << 40;
        let conv = |r: &Rational| -> Option<num_rational::Ratio<i128>> {
            let n = r.numer().to_i128()?;
            let d = r.denom().to_i128()?;
            (n.abs() < BOUND && d < BOUND).then(|| num_rational::Ratio::new(n, d))
        };
        Some(QuadNum {
            a: conv(&self.a)?,
            b: conv(&self.b)?,
            m: self.m,
        })
    }
}

impl<R: RationalScalar> num_traits::Zero for QuadNum<R> {
    fn zero() -> Self {
        QuadNum::zero()
    }
    fn is_zero(&self) -> bool {
        QuadNum::is_zero(self)
    }
}

impl<R: RationalScalar> Add for QuadNum<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let m = self.joint_radicand(&rhs);
        Self {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
            m,
        }
        .renormalize()
    }
}

impl<R: RationalScalar> Sub for QuadNum<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<R: RationalScalar> Neg for QuadNum<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
            m: self.m,
        }
    }
}

impl<R: RationalScalar> Mul for QuadNum<R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let m = self.joint_radicand(&rhs);
        let rad = R::from_integer_u64(m);
        Self {
            a: self.a.clone() * rhs.a.clone() + self.b.clone() * rhs.b.clone() * rad,
            b: self.a * rhs.b + self.b * rhs.a,
            m,
        }
        .renormalize()
    }
}

impl<R: RationalScalar> PartialOrd for QuadNum<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<R: RationalScalar> Ord for QuadNum<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self.clone() - other.clone();
        match diff.signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl<R: RationalScalar> fmt::Debug for QuadNum<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{:?}", self.a)
        } else {
            write!(f, "{:?} + {:?} sqrt {}", self.a, self.b, self.m)
        }
    }
}

fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rational(s: &str) -> Result<Rational, QuadError> {
    let s = s.trim();
    let err = || QuadError::Parse(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: num_bigint::BigInt = n.trim().parse().map_err(|_| err())?;
        let d: num_bigint::BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rational::new(n, d))
    } else {
        let n: num_bigint::BigInt = s.parse().map_err(|_| err())?;
        Ok(Rational::from_integer(n))
    }
}

/// Canonical text form `a/b + c/d sqrt m` (or `a/b` for rationals), the
/// format used by field config files. Round-trips losslessly.
impl fmt::Display for QuadNum<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", format_rational(&self.a))
        } else if self.b.is_negative() {
            write!(
                f,
                "{} - {} sqrt {}",
                format_rational(&self.a),
                format_rational(&(-self.b.clone())),
                self.m
            )
        } else {
            write!(
                f,
                "{} + {} sqrt {}",
                format_rational(&self.a),
                format_rational(&self.b),
                self.m
            )
        }
    }
}

impl FromStr for QuadNum<Rational> {
    type Err = QuadError;

    fn from_str(s: &str) -> Result<Self, QuadError> {
        let text = s.trim();
        let err = || QuadError::Parse(text.to_string());
        match text.find("sqrt") {
            None => Ok(QuadNum::rational(parse_rational(text)?)),
            Some(pos) => {
                let m: u64 = text[pos + 4..].trim().parse().map_err(|_| err())?;
                let head = text[..pos].trim();
                // head is "a/b + c/d", "a/b - c/d", or just "c/d"
                // (sign of c/d glued on). Split on the last +/- that is not
                // a leading sign of a number.
                let bytes = head.as_bytes();
                let mut split_at = None;
                for i in (1..bytes.len()).rev() {
                    if (bytes[i] == b'+' || bytes[i] == b'-')
                        && bytes[i - 1].is_ascii_whitespace()
                    {
                        split_at = Some(i);
                        break;
                    }
                }
                let (a, b) = match split_at {
                    Some(i) => {
                        let a = parse_rational(&head[..i])?;
                        let sign = if bytes[i] == b'-' { -1 } else { 1 };
                        let b_txt = head[i + 1..].trim();
                        let b_txt = if b_txt.is_empty() { "1" } else { b_txt };
                        let b = parse_rational(b_txt)?
                            * Rational::from_integer(sign.into());
                        (a, b)
                    }
                    None => {
                        let b_txt = if head.is_empty() { "1" } else { head };
                        (Rational::from_integer(0.into()), parse_rational(b_txt)?)
                    }
                };
                QuadNum::new(a, b, m)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Quad;
    use proptest::prelude::*;

    fn q(a: i64, b: i64, m: u64) -> Quad {
        Quad::new(
            Rational::from_integer(a.into()),
            Rational::from_integer(b.into()),
            m,
        )
        .unwrap()
    }

    #[test]
    fn zero_iff_both_parts_zero() {
        assert!(q(0, 0, 2).is_zero());
        assert!(!q(0, 1, 2).is_zero());
        assert!(!q(1, 0, 2).is_zero());
        // 1 - 1·√2 ≠ 0 even though 1² ... irrationality
        assert!(!(q(1, 0, 2) - q(0, 1, 2)).is_zero());
    }

    #[test]
    fn ordering_uses_exact_signs() {
        // 3 - 2√2 > 0 (since 9 > 8), 2 - 3√2 < 0
        assert_eq!(q(3, -2, 2).signum(), 1);
        assert_eq!(q(2, -3, 2).signum(), -1);
        assert!(q(0, 1, 2) > q(1, 0, 0).scale_int(1)); // √2 > 1
        assert!(q(1, 1, 2) < q(3, 0, 0)); // 1 + √2 < 3
    }

    #[test]
    fn m_equals_one_folds() {
        let v = Quad::new(
            Rational::from_integer(1.into()),
            Rational::from_integer(2.into()),
            1,
        )
        .unwrap();
        assert_eq!(v, q(3, 0, 0));
        assert!(Quad::new(
            Rational::from_integer(0.into()),
            Rational::from_integer(1.into()),
            12
        )
        .is_err());
    }

    #[test]
    fn display_round_trip() {
        for v in [q(0, 0, 0), q(-3, 2, 2), q(5, -7, 3), q(2, 0, 0)] {
            let s = v.to_string();
            let back: Quad = s.parse().unwrap();
            assert_eq!(v, back, "round-trip of {s:?}");
        }
        let parsed: Quad = "1/2 + 3/4 sqrt 5".parse().unwrap();
        assert_eq!(
            parsed,
            Quad::new(Rational::new(1.into(), 2.into()), Rational::new(3.into(), 4.into()), 5)
                .unwrap()
        );
        let bare: Quad = "sqrt 2".parse().unwrap();
        assert_eq!(bare, q(0, 1, 2));
        let neg: Quad = "0/1 - 1/1 sqrt 2".parse().unwrap();
        assert_eq!(neg, q(0, -1, 2));
    }

    proptest! {
        #[test]
        fn ring_identities(
            a1 in -20i64..20, b1 in -20i64..20,
            a2 in -20i64..20, b2 in -20i64..20,
            a3 in -20i64..20, b3 in -20i64..20,
        ) {
            let (x, y, z) = (q(a1, b1, 2), q(a2, b2, 2), q(a3, b3, 2));
            // commutativity / associativity / distributivity
            prop_assert_eq!(x.clone() + y.clone(), y.clone() + x.clone());
            prop_assert_eq!(x.clone() * y.clone(), y.clone() * x.clone());
            prop_assert_eq!(
                (x.clone() * y.clone()) * z.clone(),
                x.clone() * (y.clone() * z.clone())
            );
            prop_assert_eq!(
                x.clone() * (y.clone() + z.clone()),
                x.clone() * y.clone() + x.clone() * z.clone()
            );
            // to_f64 is consistent with exact ordering
            let (fx, fy) = (x.to_f64(), y.to_f64());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(fx < fy, x < y);
            }
        }
    }
}
