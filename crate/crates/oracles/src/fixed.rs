//! Signed fixed-point decimals with 80 fractional digits.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

pub const DIGITS: usize = 80;

const PI_100: &str = "3.1415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed(BigInt);

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS as u32)
}

impl Fixed {
    pub fn zero() -> Fixed {
        Fixed(BigInt::zero())
    }

    pub fn one() -> Fixed {
        Fixed(scale())
    }

    pub fn from_int(n: i64) -> Fixed {
        Fixed(BigInt::from(n) * scale())
    }

    /// Parses `-12.345` style decimals, optionally with an `e` exponent.
    pub fn parse(text: &str) -> Fixed {
        let (mantissa, exponent) = match text.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().expect("exponent")),
            None => (text, 0),
        };
        let negative = mantissa.starts_with('-');
        let mantissa = mantissa.trim_start_matches(['-', '+']);
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        let digits = format!("{int_part}{frac_part}");
        let shift = DIGITS as i32 - frac_part.len() as i32 + exponent;
        let mut value: BigInt = digits.parse().expect("decimal digits");
        if shift >= 0 {
            value *= BigInt::from(10u32).pow(shift as u32);
        } else {
            value /= BigInt::from(10u32).pow((-shift) as u32);
        }
        Fixed(if negative { -value } else { value })
    }

    pub fn pi() -> Fixed {
        Fixed::parse(PI_100)
    }

    pub fn div(&self, other: &Fixed) -> Fixed {
        assert!(!other.0.is_zero(), "division by zero");
        Fixed(&self.0 * scale() / &other.0)
    }

    pub fn sqrt(&self) -> Fixed {
        assert!(!self.0.is_negative(), "sqrt of negative");
        Fixed((&self.0 * scale()).sqrt())
    }

    pub fn halve(&self) -> Fixed {
        Fixed(&self.0 / 2)
    }

    /// e^x by halving until |x| < 1/2, a Taylor series, then repeated squaring.
    pub fn exp(&self) -> Fixed {
        let half = Fixed::parse("0.5");
        let mut x = self.clone();
        let mut halvings = 0;
        while x.0.abs() > half.0 {
            x = x.halve();
            halvings += 1;
        }
        let mut sum = Fixed::one();
        let mut term = Fixed::one();
        let mut n = 1i64;
        loop {
            term = (&term * &x).div(&Fixed::from_int(n));
            if term.0.is_zero() {
                break;
            }
            sum = &sum + &term;
            n += 1;
        }
        for _ in 0..halvings {
            sum = &sum * &sum;
        }
        sum
    }

    pub fn to_f64(&self) -> f64 {
        let s = scale();
        let negative = self.0.is_negative();
        let abs = self.0.abs();
        let int_part = &abs / &s;
        let frac_part = &abs % &s;
        let text = format!(
            "{}{}.{:0>width$}",
            if negative { "-" } else { "" },
            int_part,
            frac_part.to_string(),
            width = DIGITS
        );
        text.parse().expect("formatted decimal")
    }

}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        Fixed(&self.0 + &rhs.0)
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        Fixed(&self.0 - &rhs.0)
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        Fixed(&self.0 * &rhs.0 / scale())
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-&self.0)
    }
}
