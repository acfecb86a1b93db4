//! Gaussian rational coefficients a + bi with exact arithmetic.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Exact rational, re-exported for convenience.
pub type Rational = BigRational;

/// Element of Q(i): re + im*i with rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gaussian {
    pub re: Rational,
    pub im: Rational,
}

impl Gaussian {
    pub fn new(re: Rational, im: Rational) -> Self {
        Gaussian { re, im }
    }

    pub fn zero() -> Self {
        Gaussian {
            re: Rational::zero(),
            im: Rational::zero(),
        }
    }

    pub fn one() -> Self {
        Gaussian {
            re: Rational::one(),
            im: Rational::zero(),
        }
    }

    /// The imaginary unit i.
    pub fn i() -> Self {
        Gaussian {
            re: Rational::zero(),
            im: Rational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Gaussian {
            re: Rational::from(BigInt::from(n)),
            im: Rational::zero(),
        }
    }

    /// num/den as a real rational. Panics on den = 0.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Gaussian {
            re: Rational::new(BigInt::from(num), BigInt::from(den)),
            im: Rational::zero(),
        }
    }

    pub fn from_rational(r: Rational) -> Self {
        Gaussian {
            re: r,
            im: Rational::zero(),
        }
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

    pub fn conj(&self) -> Self {
        Gaussian {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn inv(&self) -> Self {
        let norm = &self.re * &self.re + &self.im * &self.im;
        assert!(!norm.is_zero(), "division by zero Gaussian rational");
        Gaussian {
            re: &self.re / &norm,
            im: -&self.im / &norm,
        }
    }

    /// i^k for k >= 0.
    pub fn i_pow(k: u32) -> Self {
        match k % 4 {
            0 => Gaussian::one(),
            1 => Gaussian::i(),
            2 => -Gaussian::one(),
            _ => -Gaussian::i(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Gaussian::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for Gaussian {
    type Output = Gaussian;
    fn add(self, rhs: Gaussian) -> Gaussian {
        Gaussian {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl AddAssign for Gaussian {
    fn add_assign(&mut self, rhs: Gaussian) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for Gaussian {
    type Output = Gaussian;
    fn sub(self, rhs: Gaussian) -> Gaussian {
        Gaussian {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl SubAssign for Gaussian {
    fn sub_assign(&mut self, rhs: Gaussian) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

impl Neg for Gaussian {
    type Output = Gaussian;
    fn neg(self) -> Gaussian {
        Gaussian {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for Gaussian {
    type Output = Gaussian;
    fn mul(self, rhs: Gaussian) -> Gaussian {
        Gaussian {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl MulAssign for Gaussian {
    fn mul_assign(&mut self, rhs: Gaussian) {
        *self = self.clone() * rhs;
    }
}

impl Div for Gaussian {
    type Output = Gaussian;
    fn div(self, rhs: Gaussian) -> Gaussian {
        self * rhs.inv()
    }
}

impl fmt::Display for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            if self.im.is_one() {
                write!(f, "i")
            } else if (-self.im.clone()).is_one() {
                write!(f, "-i")
            } else {
                write!(f, "{}*i", self.im)
            }
        } else if self.im.is_positive() {
            write!(f, "{}+{}*i", self.re, self.im)
        } else {
            write!(f, "{}{}*i", self.re, self.im)
        }
    }
}

impl fmt::Debug for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_squared_is_minus_one() {
        assert_eq!(Gaussian::i() * Gaussian::i(), -Gaussian::one());
    }

    #[test]
    fn inverse() {
        let z = Gaussian::new(
            Rational::new(BigInt::from(1), BigInt::from(2)),
            Rational::new(BigInt::from(-3), BigInt::from(4)),
        );
        assert!( (z.clone() * z.inv()).is_one());
    }

    #[test]
    fn i_pow_cycle() {
        assert_eq!(Gaussian::i_pow(2), Gaussian::from_int(-1));
        assert_eq!(Gaussian::i_pow(4), Gaussian::one());
        assert_eq!(Gaussian::i_pow(3), -Gaussian::i());
    }
}
