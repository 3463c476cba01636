use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::Rational;
use crate::fock::FockOperator;
use crate::{Error, Result, C64};

/// Operator `sum c_jk (b†)^j b^k` in normal-ordered form.
///
/// Keys are `(j, k)`; zero coefficients are never stored, so two polynomials
/// are equal exactly when they represent the same operator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalPoly {
    coeffs: BTreeMap<(u32, u32), Rational>,
}

pub(crate) fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub(crate) fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

pub(crate) fn insert_term(map: &mut BTreeMap<(u32, u32), Rational>, key: (u32, u32), value: Rational) {
    if value.is_zero() {
        return;
    }
    let entry = map.entry(key).or_insert_with(Rational::zero);
    *entry += value;
    if entry.is_zero() {
        map.remove(&key);
    }
}

impl NormalPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(j: u32, k: u32, c: Rational) -> Self {
        let mut p = Self::zero();
        insert_term(&mut p.coeffs, (j, k), c);
        p
    }

    /// `b`
    pub fn annihilation() -> Self {
        Self::monomial(0, 1, Rational::one())
    }

    /// `b†`
    pub fn creation() -> Self {
        Self::monomial(1, 0, Rational::one())
    }

    /// `n = b†b`
    pub fn number() -> Self {
        Self::monomial(1, 1, Rational::one())
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), Rational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (key, c) in terms {
            insert_term(&mut p.coeffs, key, c);
        }
        p
    }

    pub fn coeff(&self, j: u32, k: u32) -> Rational {
        self.coeffs.get(&(j, k)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `j + k`.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|&(j, k)| j + k).max().unwrap_or(0)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(&key, c)| (key, c * factor)))
    }

    /// Adjoint: `(b†)^j b^k -> (b†)^k b^j`; coefficients are real.
    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(&(j, k), c)| ((k, j), c.clone())))
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    /// Number-conserving: only `j == k` terms.
    pub fn is_number_conserving(&self) -> bool {
        self.coeffs.keys().all(|&(j, k)| j == k)
    }

    /// Product re-ordered with `b^k (b†)^l = sum_r r! C(k,r) C(l,r) (b†)^{l-r} b^{k-r}`.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (&(a, k), c1) in &self.coeffs {
            for (&(l, d), c2) in &other.coeffs {
                let base = c1 * c2;
                for r in 0..=k.min(l) {
                    let weight = factorial(r) * binomial(k, r) * binomial(l, r);
                    let key = (a + l - r, k - r + d);
                    insert_term(&mut out, key, &base * Rational::from_integer(weight));
                }
            }
        }
        Self { coeffs: out }
    }

    pub fn pow(&self, exponent: u32) -> Self {
        (0..exponent).fold(Self::identity(), |acc, _| acc.product(self))
    }

    /// Matrix on the truncated basis.
    ///
    /// Each normal-ordered monomial is filled in from its exact matrix elements,
    /// so the result is the compression of the operator to the first `dim` states.
    pub fn to_matrix(&self, dim: usize) -> Result<FockOperator> {
        if dim == 0 {
            return Err(Error::InvalidDimension { dim, min: 1 });
        }
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (&(j, k), c) in &self.coeffs {
            let c = rational_to_f64(c);
            let (j, k) = (j as usize, k as usize);
            for n in k..dim {
                let row = n - k + j;
                if row >= dim {
                    break;
                }
                // sqrt(n!/(n-k)!) * sqrt(row!/(n-k)!)
                let mut amp = 1.0;
                for i in (n - k + 1)..=n {
                    amp *= (i as f64).sqrt();
                }
                for i in (n - k + 1)..=row {
                    amp *= (i as f64).sqrt();
                }
                m[(row, n)] += C64::new(c * amp, 0.0);
            }
        }
        FockOperator::from_matrix(m)
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Canonical normal-ordered form of the operator product `factors[0] * factors[1] * ...`.
pub fn normal_order(factors: &[NormalPoly]) -> NormalPoly {
    factors.iter().fold(NormalPoly::identity(), |acc, f| acc.product(f))
}

impl Add for &NormalPoly {
    type Output = NormalPoly;
    fn add(self, rhs: &NormalPoly) -> NormalPoly {
        let mut out = self.coeffs.clone();
        for (&key, c) in &rhs.coeffs {
            insert_term(&mut out, key, c.clone());
        }
        NormalPoly { coeffs: out }
    }
}

impl Sub for &NormalPoly {
    type Output = NormalPoly;
    fn sub(self, rhs: &NormalPoly) -> NormalPoly {
        self + &(-rhs)
    }
}

impl Neg for &NormalPoly {
    type Output = NormalPoly;
    fn neg(self) -> NormalPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &NormalPoly {
    type Output = NormalPoly;
    fn mul(self, rhs: &NormalPoly) -> NormalPoly {
        self.product(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for NormalPoly {
            type Output = NormalPoly;
            fn $method(self, rhs: NormalPoly) -> NormalPoly {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for NormalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(j, k), c) in self.coeffs.iter().rev() {
            let word = match (j, k) {
                (0, 0) => String::new(),
                _ => {
                    let mut parts = Vec::new();
                    if j > 0 {
                        parts.push(if j == 1 {
                            "b†".to_string()
                        } else {
                            format!("b†^{j}")
                        });
                    }
                    if k > 0 {
                        parts.push(if k == 1 { "b".to_string() } else { format!("b^{k}") });
                    }
                    parts.join(" ")
                }
            };
            super::write_term(f, c, &word, first)?;
            first = false;
        }
        Ok(())
    }
}
