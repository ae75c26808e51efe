//! Exact scalar arithmetic: rationals with arbitrary-precision fallback and
//! Gaussian rationals for the complex representation families.
//!
//! Small values stay on an `i64` fast path; any overflow promotes to big
//! integers and demotes back once the value fits again. There is no rounding
//! anywhere in this module.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// Exact rational number. Canonical form: the `Big` variant is used only when
/// the value does not fit in `Rational64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Rat {
    Small(Rational64),
    Big(Box<BigRational>),
}

impl Rat {
    pub fn zero() -> Self {
        Rat::Small(Rational64::zero())
    }

    pub fn one() -> Self {
        Rat::Small(Rational64::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rat::Small(Rational64::from_integer(n))
    }

    /// `num/den` with exact normalization. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rat::Small(Rational64::new(num, den))
    }

    fn big(&self) -> BigRational {
        match self {
            Rat::Small(r) => BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Rat::Big(b) => (**b).clone(),
        }
    }

    /// Re-canonicalize: demote a big value to the i64 fast path when it fits.
    fn from_big(b: BigRational) -> Self {
        if let (Some(n), Some(d)) = (b.numer().to_i64(), b.denom().to_i64()) {
            Rat::Small(Rational64::new_raw(n, d))
        } else {
            Rat::Big(Box::new(b))
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Rat::Small(r) => r.is_zero(),
            Rat::Big(b) => b.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Rat::Small(r) => r.is_one(),
            Rat::Big(b) => b.is_one(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rat::Small(r) => r.is_integer(),
            Rat::Big(b) => b.is_integer(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rat::Small(r) => r.is_negative(),
            Rat::Big(b) => b.is_negative(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "division by zero");
        match self {
            Rat::Small(r) => Rat::Small(r.recip()),
            Rat::Big(b) => Rat::from_big(b.recip()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Crude size measure used by pivot-selection heuristics: digits of
    /// numerator plus denominator.
    pub fn complexity(&self) -> usize {
        match self {
            Rat::Small(r) => {
                let n = r.numer().unsigned_abs().max(1).ilog10() as usize;
                let d = r.denom().unsigned_abs().max(1).ilog10() as usize;
                n + d
            }
            Rat::Big(b) => (b.numer().bits() + b.denom().bits()) as usize / 3,
        }
    }

    /// Renders as `num/den`, or just `num` for integers.
    pub fn to_string_exact(&self) -> String {
        match self {
            Rat::Small(r) => {
                if r.is_integer() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            Rat::Big(b) => {
                if b.is_integer() {
                    b.numer().to_string()
                } else {
                    format!("{}/{}", b.numer(), b.denom())
                }
            }
        }
    }

    /// Parses `num` or `num/den` with optional sign.
    pub fn parse(s: &str) -> Option<Rat> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = n.parse().ok()?;
        let den: BigInt = d.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(Rat::from_big(BigRational::new(num, den)))
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                if let (Rat::Small(a), Rat::Small(b)) = (self, rhs) {
                    if let Some(c) = a.$checked(b) {
                        return Rat::Small(c);
                    }
                }
                Rat::from_big(self.big().$method(rhs.big()))
            }
        }

        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                (&self).$method(&rhs)
            }
        }
    };
}

rat_binop!(Add, add, checked_add);
rat_binop!(Sub, sub, checked_sub);
rat_binop!(Mul, mul, checked_mul);

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        self * &rhs.recip()
    }
}

impl Div for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        &self / &rhs
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self {
            Rat::Small(r) => Rat::Small(-r),
            Rat::Big(b) => Rat::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Rat> for Rat {
    fn mul_assign(&mut self, rhs: &Rat) {
        *self = &*self * rhs;
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_exact())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_exact())
    }
}

/// Exact scalar of the working field: a rational, or a Gaussian rational when
/// the representation is complex. Arithmetic on values with zero imaginary
/// part never touches the imaginary component.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    pub re: Rat,
    pub im: Rat,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar {
            re: Rat::zero(),
            im: Rat::zero(),
        }
    }

    pub fn one() -> Self {
        Scalar {
            re: Rat::one(),
            im: Rat::zero(),
        }
    }

    pub fn i() -> Self {
        Scalar {
            re: Rat::zero(),
            im: Rat::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar {
            re: Rat::from_int(n),
            im: Rat::zero(),
        }
    }

    pub fn from_rat(re: Rat) -> Self {
        Scalar {
            re,
            im: Rat::zero(),
        }
    }

    pub fn new(num: i64, den: i64) -> Self {
        Scalar::from_rat(Rat::new(num, den))
    }

    pub fn complex(re: Rat, im: Rat) -> Self {
        Scalar { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Scalar {
        Scalar {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// |z|^2 as an exact rational.
    pub fn norm_sqr(&self) -> Rat {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn recip(&self) -> Scalar {
        assert!(!self.is_zero(), "division by zero");
        if self.im.is_zero() {
            return Scalar::from_rat(self.re.recip());
        }
        let n = self.norm_sqr();
        Scalar {
            re: &self.re / &n,
            im: &(-&self.im) / &n,
        }
    }

    pub fn to_f64(&self) -> f64 {
        debug_assert!(self.is_real(), "to_f64 on a non-real scalar");
        self.re.to_f64()
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn complexity(&self) -> usize {
        self.re.complexity() + self.im.complexity()
    }

    /// `num/den` for real values, `re+im*i` / `re-im*i` otherwise.
    pub fn to_string_exact(&self) -> String {
        if self.im.is_zero() {
            self.re.to_string_exact()
        } else if self.re.is_zero() {
            format!("{}i", self.im.to_string_exact())
        } else if self.im.is_negative() {
            format!(
                "{}{}i",
                self.re.to_string_exact(),
                self.im.to_string_exact()
            )
        } else {
            format!(
                "{}+{}i",
                self.re.to_string_exact(),
                self.im.to_string_exact()
            )
        }
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Scalar {
                re: &self.re * &rhs.re,
                im: Rat::zero(),
            };
        }
        Scalar {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Scalar {
                re: &self.re / &rhs.re,
                im: Rat::zero(),
            };
        }
        self * &rhs.recip()
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

macro_rules! scalar_owned_ops {
    ($($trait:ident :: $method:ident),*) => {
        $(
            impl $trait for Scalar {
                type Output = Scalar;
                fn $method(self, rhs: Scalar) -> Scalar {
                    (&self).$method(&rhs)
                }
            }
        )*
    };
}

scalar_owned_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_exact())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_exact())
    }
}

/// Small random rational, numerator in `[-9, 9]`, denominator in `{1, 2, 3}`.
pub fn random_rat<R: rand::Rng>(rng: &mut R) -> Rat {
    Rat::new(rng.gen_range(-9..=9), rng.gen_range(1..=3))
}

/// Random scalar of the requested field.
pub fn random_scalar<R: rand::Rng>(rng: &mut R, complex: bool) -> Scalar {
    if complex {
        Scalar::complex(random_rat(rng), random_rat(rng))
    } else {
        Scalar::from_rat(random_rat(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        let third = Rat::new(1, 3);
        let sum = &(&third + &third) + &third;
        assert!(sum.is_one());
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rat::from_int(i64::MAX / 2);
        let doubled = &big * &Rat::from_int(4);
        assert!(matches!(doubled, Rat::Big(_)));
        let back = &doubled / &Rat::from_int(4);
        assert!(matches!(back, Rat::Small(_)));
        assert_eq!(back, big);
    }

    #[test]
    fn gaussian_division() {
        let z = Scalar::complex(Rat::from_int(1), Rat::from_int(2));
        let w = Scalar::complex(Rat::from_int(3), Rat::from_int(-1));
        let q = &z / &w;
        assert_eq!(&q * &w, z);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "-7", "3/4", "-22/7"] {
            let r = Rat::parse(s).unwrap();
            assert_eq!(r.to_string_exact(), s);
        }
        assert!(Rat::parse("1/0").is_none());
    }

    #[test]
    fn complex_string_forms() {
        assert_eq!(Scalar::new(-3, 2).to_string_exact(), "-3/2");
        let z = Scalar::complex(Rat::from_int(1), Rat::new(-1, 2));
        assert_eq!(z.to_string_exact(), "1-1/2i");
        assert_eq!(Scalar::i().to_string_exact(), "1i");
    }
}
