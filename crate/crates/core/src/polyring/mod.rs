//! Sparse multivariate polynomials over `f64` with calculus helpers and
//! graded monomial bases.

mod basis;
mod monomial;
mod polynomial;
mod text;

pub use basis::{binomial, MonomialBasis};
pub use monomial::Monomial;
pub use polynomial::{neumaier_sum, Polynomial, TermEntry, ZERO_THRESHOLD};
pub use text::{format_coeff, parse_polynomial};

/// `R - (x1^2 + ... + xn^2)`.
pub fn ball_polynomial(nvars: usize, radius_sq: f64) -> Polynomial {
    let mut terms = vec![(Monomial::one(nvars), radius_sq)];
    for i in 0..nvars {
        let mut e = vec![0; nvars];
        e[i] = 2;
        terms.push((Monomial::new(e), -1.0));
    }
    Polynomial::from_terms(nvars, terms)
}

/// The Motzkin polynomial `x1^2 x2^2 (x1^2 + x2^2 - 3 x3^2) + x3^6`.
pub fn motzkin() -> Polynomial {
    Polynomial::from_terms(
        3,
        [
            (Monomial::new(vec![4, 2, 0]), 1.0),
            (Monomial::new(vec![2, 4, 0]), 1.0),
            (Monomial::new(vec![2, 2, 2]), -3.0),
            (Monomial::new(vec![0, 0, 6]), 1.0),
        ],
    )
}
