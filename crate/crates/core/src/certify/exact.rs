//! Exact arithmetic on dyadic rationals `m * 2^e`.
//!
//! Every finite `f64` is a dyadic rational, and sums and products of dyadic
//! rationals stay dyadic, so polynomial identities over stored `f64`
//! coefficients can be checked with no rounding until the final conversion.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::polyring::Monomial;

#[derive(Clone, Debug, PartialEq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    /// Exact conversion; panics on non-finite input.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "non-finite value in exact arithmetic");
        if v == 0.0 {
            return Self::zero();
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & 0x000f_ffff_ffff_ffff;
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), raw_exp - 1075)
        };
        Dyadic {
            mant: BigInt::from(mant) * sign,
            exp,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    fn aligned(&self, exp: i64) -> BigInt {
        debug_assert!(exp <= self.exp);
        &self.mant << ((self.exp - exp) as usize)
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let exp = self.exp.min(other.exp);
        Dyadic {
            mant: self.aligned(exp) + other.aligned(exp),
            exp,
        }
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic {
            mant: &self.mant * &other.mant,
            exp: self.exp + other.exp,
        }
    }

    /// Nearest `f64`. Bits shifted out are folded into a sticky bit so the
    /// final conversion rounds once (results in the subnormal range may be
    /// off by one ulp).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let shift = (bits - 64).max(0);
        let mut m = self.mant.abs() >> (shift as usize);
        if shift > 0 && (&m << (shift as usize)) != self.mant.abs() {
            m |= BigInt::from(1);
        }
        let m = m.to_f64().unwrap_or(f64::INFINITY);
        let m = if self.mant.is_negative() { -m } else { m };
        let e = self.exp + shift;
        // Scale in two steps so intermediate powers stay representable.
        let half = (e / 2).clamp(-1100, 1100) as i32;
        let rest = (e - half as i64).clamp(-1100, 1100) as i32;
        m * 2f64.powi(half) * 2f64.powi(rest)
    }

    pub fn abs_f64(&self) -> f64 {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
        .to_f64()
    }
}

/// Polynomial with exact dyadic coefficients, used only for verification.
#[derive(Clone, Debug, Default)]
pub struct ExactPoly {
    terms: BTreeMap<Monomial, Dyadic>,
}

impl ExactPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, m: Monomial, c: &Dyadic) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => *v = v.add(c),
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Dyadic)> {
        self.terms.iter()
    }

    /// Largest absolute coefficient, rounded to `f64` at the end.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(Dyadic::abs_f64).fold(0.0, f64::max)
    }
}
