use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::Monomial;
use crate::error::{Error, Result};

/// Relative threshold below which coefficients are dropped on canonicalization.
pub const ZERO_THRESHOLD: f64 = 1e-14;

/// Sparse multivariate polynomial with `f64` coefficients.
///
/// Terms are kept in canonical form: sorted by the graded monomial order,
/// no duplicate monomials and no coefficient with
/// `|c| < ZERO_THRESHOLD * max|c|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolynomialRepr", try_from = "PolynomialRepr")]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, [(Monomial::one(nvars), c)])
    }

    /// The polynomial `x_i` (zero-based `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::from_terms(nvars, [(Monomial::var(nvars, i), 1.0)])
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let nvars = m.nvars();
        Self::from_terms(nvars, [(m, c)])
    }

    /// Builds a polynomial, summing repeated monomials and canonicalizing.
    ///
    /// Panics if a monomial has the wrong number of variables; use
    /// [`Polynomial::try_from_terms`] for untrusted input.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        Self::try_from_terms(nvars, terms).expect("monomial length must equal nvars")
    }

    pub fn try_from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (Monomial, f64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            if m.nvars() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: m.nvars(),
                });
            }
            *map.entry(m).or_insert(0.0) += c;
        }
        Ok(Polynomial { nvars, terms: map }.canonicalize())
    }

    /// Drops zero and negligible coefficients. Idempotent.
    pub fn canonicalize(mut self) -> Self {
        let max = self.max_abs_coeff();
        let cut = ZERO_THRESHOLD * max;
        // NaN survives so that bad input stays visible downstream.
        self.terms.retain(|_, c| *c != 0.0 && !(c.abs() < cut));
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` stands for the degree of the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Degree with the zero polynomial mapped to 0.
    pub fn degree_or_zero(&self) -> u32 {
        self.degree().unwrap_or(0)
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Max-coefficient norm `max |c|`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    fn check_nvars(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_nvars(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_insert(0.0) += c;
        }
        Ok(Polynomial {
            nvars: self.nvars,
            terms,
        }
        .canonicalize())
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_nvars(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_insert(0.0) -= c;
        }
        Ok(Polynomial {
            nvars: self.nvars,
            terms,
        }
        .canonicalize())
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_nvars(other)?;
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        Ok(Polynomial {
            nvars: self.nvars,
            terms,
        }
        .canonicalize())
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
        .canonicalize()
    }

    /// Evaluates at `x` with compensated summation over the terms.
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(neumaier_sum(self.terms.iter().map(|(m, c)| c * m.eval(x))))
    }

    /// Like [`Polynomial::try_eval`], panicking on a dimension mismatch.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.try_eval(x).expect("point dimension must equal nvars")
    }

    /// Partial derivative with respect to `x_i` (zero-based).
    pub fn partial(&self, i: usize) -> Polynomial {
        let terms = self.terms.iter().filter_map(|(m, c)| {
            let e = m.exponents()[i];
            if e == 0 {
                return None;
            }
            let mut exps = m.exponents().to_vec();
            exps[i] -= 1;
            Some((Monomial::new(exps), c * e as f64))
        });
        Polynomial::from_terms(self.nvars, terms)
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Symmetric matrix of second partials, row-major.
    pub fn hessian(&self) -> Vec<Vec<Polynomial>> {
        let grad = self.gradient();
        let n = self.nvars;
        let mut h = vec![vec![Polynomial::zero(n); n]; n];
        for i in 0..n {
            for j in i..n {
                let d = grad[i].partial(j);
                h[j][i] = d.clone();
                h[i][j] = d;
            }
        }
        h
    }

    pub fn eval_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient().iter().map(|p| p.eval(x)).collect()
    }

    pub fn eval_hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.hessian()
            .iter()
            .map(|row| row.iter().map(|p| p.eval(x)).collect())
            .collect()
    }
}

/// One `{coeff, exponents}` entry of a serialized polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    nvars: usize,
    terms: Vec<TermEntry>,
}

impl Polynomial {
    pub fn to_entries(&self) -> Vec<TermEntry> {
        self.terms()
            .map(|(m, c)| TermEntry {
                coeff: c,
                exponents: m.exponents().to_vec(),
            })
            .collect()
    }

    pub fn from_entries(nvars: usize, entries: &[TermEntry]) -> Result<Polynomial> {
        if let Some(e) = entries.iter().find(|e| e.exponents.len() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                got: e.exponents.len(),
            });
        }
        Polynomial::try_from_terms(
            nvars,
            entries
                .iter()
                .map(|e| (Monomial::new(e.exponents.clone()), e.coeff)),
        )
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr {
            nvars: p.nvars,
            terms: p.to_entries(),
        }
    }
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = Error;
    fn try_from(r: PolynomialRepr) -> Result<Self> {
        Polynomial::from_entries(r.nvars, &r.terms)
    }
}

/// Neumaier's compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial nvars mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial nvars mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial nvars mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn motzkin() -> Polynomial {
        "x1^4 x2^2 + x1^2 x2^4 - 3 x1^2 x2^2 x3^2 + x3^6".parse().unwrap()
    }

    #[test]
    fn parsed_motzkin_matches_builder() {
        assert_eq!(motzkin(), crate::polyring::motzkin());
    }

    #[test]
    fn motzkin_at_ones() {
        assert_eq!(motzkin().eval(&[1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn zero_polynomial() {
        let z = Polynomial::zero(3);
        assert_eq!(z.eval(&[0.3, -2.0, 7.0]), 0.0);
        assert_eq!(z.degree(), None);
    }

    #[test]
    fn eval_dimension_mismatch() {
        assert!(matches!(
            motzkin().try_eval(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn gradient_power_rule() {
        let p = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        let g = p.gradient();
        assert_eq!(g[0], x(2, 0).scale(2.0));
        assert_eq!(g[1], x(2, 1).scale(2.0));
        let c = Polynomial::constant(2, 5.0);
        assert!(c.gradient().iter().all(Polynomial::is_zero));
    }

    #[test]
    fn hessian_examples() {
        let p = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        let h = p.eval_hessian(&[0.4, -1.0]);
        assert_eq!(h, vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        let q = &x(2, 0) * &x(2, 1);
        let h = q.eval_hessian(&[3.0, 2.0]);
        assert_eq!(h, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn arithmetic_examples() {
        let one = Polynomial::constant(1, 1.0);
        let x1 = x(1, 0);
        let prod = &(&x1 + &one) * &(&x1 - &one);
        assert_eq!(prod, &(&x1 * &x1) - &one);
        let p = motzkin();
        let z = &p + &p.scale(-1.0);
        assert!(z.is_zero());
        assert_eq!((&p * &p).degree(), Some(12));
    }

    #[test]
    fn mismatched_nvars() {
        assert!(x(2, 0).checked_add(&x(3, 0)).is_err());
        assert!(x(2, 0).checked_mul(&x(3, 0)).is_err());
    }

    #[test]
    fn canonicalize_drops_dust() {
        let p = Polynomial::from_terms(
            1,
            [(Monomial::new(vec![0]), 1.0), (Monomial::new(vec![1]), 1e-16)],
        );
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.clone().canonicalize(), p);
    }

    #[test]
    fn json_roundtrip() {
        let p = motzkin().scale(0.1);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Polynomial>(&text).unwrap(), p);
    }

    #[test]
    fn compensated_sum() {
        let s = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }
}
