//! Exact calculus of operator orderings and phase-space symbols.
//!
//! Operators are normal-ordered polynomials in `b†, b` ([`NormalPoly`]); their
//! Wick, anti-Wick and Weyl symbols are polynomials in `zbar, z`
//! ([`PhaseSymbol`]). The three symbol kinds are related by `e^{alpha Δ}`:
//!
//! ```text
//! H_cov = e^{+Δ/2} H_W = e^{+Δ} H_antiwick
//! ```
//!
//! All coefficients are exact rationals; floats only appear when a matrix or
//! a kernel value is requested.

mod parse;
mod poly;
mod symbol;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

pub use parse::{parse_coefficient_list, parse_operator, parse_radial_symbol, parse_rational};
pub use poly::{normal_order, NormalPoly};
pub use symbol::{
    anti_wick_symbol, apply_exp_delta, bose_hubbard_poly, linearized_weyl_bh, normal_poly_from_symbol,
    operator_from_symbol, symbol_of, weyl_symbol, wick_symbol, CompiledSymbol, PhaseSymbol, SymbolKind,
};

pub type Rational = num_rational::BigRational;

/// Exact rational from a finite float (dyadic, no rounding).
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Writes `c*monomial` with sign handling shared by both polynomial types.
pub(crate) fn write_term(f: &mut fmt::Formatter<'_>, c: &Rational, monomial: &str, first: bool) -> fmt::Result {
    let negative = c.is_negative();
    let magnitude = c.abs();
    match (first, negative) {
        (true, true) => write!(f, "-")?,
        (true, false) => {}
        (false, true) => write!(f, " - ")?,
        (false, false) => write!(f, " + ")?,
    }
    if monomial.is_empty() {
        write!(f, "{magnitude}")
    } else if magnitude.is_one() {
        write!(f, "{monomial}")
    } else {
        write!(f, "{magnitude}*{monomial}")
    }
}
