use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use super::poly::{factorial, insert_term, rational_to_f64, NormalPoly};
use super::Rational;
use crate::fock::FockOperator;
use crate::{Error, Result, C64};

/// Which ordering a phase-space symbol refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    /// Covariant symbol `<z|A|z>`, dual to normal ordering.
    Wick,
    /// Contravariant symbol, the density of `A = ∫ A(z) |z><z| d²z/π`.
    AntiWick,
    /// Symmetric-ordering symbol.
    Weyl,
}

impl SymbolKind {
    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::Wick => "wick",
            SymbolKind::AntiWick => "antiwick",
            SymbolKind::Weyl => "weyl",
        }
    }

    /// `alpha` such that `e^{alpha Δ}` maps a symbol of this kind to the Wick symbol.
    pub fn to_wick_exponent(self) -> Rational {
        match self {
            SymbolKind::Wick => Rational::zero(),
            SymbolKind::Weyl => Rational::new(1.into(), 2.into()),
            SymbolKind::AntiWick => Rational::one(),
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymbolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wick" | "cov" | "covariant" | "normal" => Ok(SymbolKind::Wick),
            "antiwick" | "anti-wick" | "contra" | "contravariant" | "antinormal" => Ok(SymbolKind::AntiWick),
            "weyl" | "symmetric" | "w" => Ok(SymbolKind::Weyl),
            other => Err(Error::InvalidParameter(format!("unknown symbol kind '{other}'"))),
        }
    }
}

/// Polynomial phase-space function `sum s_jk zbar^j z^k` tagged with its ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseSymbol {
    kind: SymbolKind,
    coeffs: BTreeMap<(u32, u32), Rational>,
}

impl PhaseSymbol {
    pub fn zero(kind: SymbolKind) -> Self {
        Self {
            kind,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), Rational)>>(kind: SymbolKind, terms: I) -> Self {
        let mut s = Self::zero(kind);
        for (key, c) in terms {
            insert_term(&mut s.coeffs, key, c);
        }
        s
    }

    /// `sum_k c_k |z|^{2k}`.
    pub fn radial(kind: SymbolKind, coeffs: &[Rational]) -> Self {
        Self::from_terms(
            kind,
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| ((k as u32, k as u32), c.clone())),
        )
    }

    pub fn constant(kind: SymbolKind, c: Rational) -> Self {
        Self::from_terms(kind, [((0, 0), c)])
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: SymbolKind) -> Self {
        self.kind = kind;
        self
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

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|&(j, k)| j + k).max().unwrap_or(0)
    }

    /// The constant term if the symbol is a constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => self.coeffs.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    /// Real observable: `s_jk = conj(s_kj)`, with real coefficients `s_jk = s_kj`.
    pub fn is_hermitian(&self) -> bool {
        self.coeffs.iter().all(|(&(j, k), c)| self.coeff(k, j) == *c)
    }

    /// Invariant under `z -> e^{iφ} z`: only `|z|^{2k}` terms.
    pub fn is_rotation_invariant(&self) -> bool {
        self.coeffs.keys().all(|&(j, k)| j == k)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self::from_terms(self.kind, self.coeffs.iter().map(|(&key, c)| (key, c * factor)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.coeffs.clone();
        for (&key, c) in &other.coeffs {
            insert_term(&mut out, key, c.clone());
        }
        Self {
            kind: self.kind,
            coeffs: out,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    /// Pointwise (commutative) product of phase-space functions.
    pub fn pointwise_product(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (&(a, b), c1) in &self.coeffs {
            for (&(c, d), c2) in &other.coeffs {
                insert_term(&mut out, (a + c, b + d), c1 * c2);
            }
        }
        Self {
            kind: self.kind,
            coeffs: out,
        }
    }

    /// `Δ = ∂²/∂zbar∂z`: `zbar^j z^k -> j k zbar^{j-1} z^{k-1}`.
    pub fn laplacian(&self) -> Self {
        let mut out = BTreeMap::new();
        for (&(j, k), c) in &self.coeffs {
            if j > 0 && k > 0 {
                insert_term(&mut out, (j - 1, k - 1), c * Rational::from_integer((j * k).into()));
            }
        }
        Self {
            kind: self.kind,
            coeffs: out,
        }
    }

    /// Evaluate with `zbar` and `z` as independent complex arguments.
    pub fn eval(&self, zbar: C64, z: C64) -> C64 {
        self.compile().eval(zbar, z)
    }

    pub fn eval_at(&self, z: C64) -> C64 {
        self.compile().eval_at(z)
    }

    /// Floating-point copy for repeated evaluation.
    pub fn compile(&self) -> CompiledSymbol {
        CompiledSymbol {
            terms: self
                .coeffs
                .iter()
                .map(|(&(j, k), c)| (j as i32, k as i32, rational_to_f64(c)))
                .collect(),
        }
    }
}

/// Floating-point coefficients of a [`PhaseSymbol`].
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledSymbol {
    terms: Vec<(i32, i32, f64)>,
}

impl CompiledSymbol {
    pub fn eval(&self, zbar: C64, z: C64) -> C64 {
        self.terms.iter().map(|&(j, k, c)| zbar.powi(j) * z.powi(k) * c).sum()
    }

    /// Value on the diagonal `zbar = conj(z)`.
    pub fn eval_at(&self, z: C64) -> C64 {
        self.eval(z.conj(), z)
    }
}

/// `e^{alpha Δ} s = sum_m alpha^m Δ^m s / m!`, finite because Δ is nilpotent on polynomials.
///
/// The kind tag is carried over unchanged; callers re-tag.
pub fn apply_exp_delta(s: &PhaseSymbol, alpha: &Rational) -> PhaseSymbol {
    let mut out = BTreeMap::new();
    for (&(j, k), c) in &s.coeffs {
        let mut alpha_pow = Rational::one();
        for m in 0..=j.min(k) {
            // Δ^m zbar^j z^k = j!/(j-m)! k!/(k-m)! zbar^{j-m} z^{k-m}
            let falling = (factorial(j) / factorial(j - m)) * (factorial(k) / factorial(k - m));
            let weight = Rational::new(falling, factorial(m));
            insert_term(&mut out, (j - m, k - m), c * &alpha_pow * weight);
            alpha_pow *= alpha;
        }
    }
    PhaseSymbol {
        kind: s.kind,
        coeffs: out,
    }
}

/// Covariant symbol: `(b†)^j b^k -> zbar^j z^k`.
pub fn wick_symbol(op: &NormalPoly) -> PhaseSymbol {
    PhaseSymbol::from_terms(SymbolKind::Wick, op.terms().map(|(&key, c)| (key, c.clone())))
}

/// Symbol of the requested kind: `e^{-alpha Δ}` applied to the Wick symbol.
pub fn symbol_of(op: &NormalPoly, kind: SymbolKind) -> PhaseSymbol {
    let alpha = -kind.to_wick_exponent();
    apply_exp_delta(&wick_symbol(op), &alpha).with_kind(kind)
}

/// `H_W = e^{-Δ/2} H_cov`.
pub fn weyl_symbol(op: &NormalPoly) -> PhaseSymbol {
    symbol_of(op, SymbolKind::Weyl)
}

/// `H_antiwick = e^{-Δ} H_cov`.
pub fn anti_wick_symbol(op: &NormalPoly) -> PhaseSymbol {
    symbol_of(op, SymbolKind::AntiWick)
}

/// Exact inverse of [`symbol_of`]: convert to the Wick symbol, then read off the normal-ordered operator.
pub fn normal_poly_from_symbol(s: &PhaseSymbol) -> NormalPoly {
    let wick = apply_exp_delta(s, &s.kind.to_wick_exponent());
    NormalPoly::from_terms(wick.coeffs)
}

pub fn operator_from_symbol(s: &PhaseSymbol, dim: usize) -> Result<FockOperator> {
    normal_poly_from_symbol(s).to_matrix(dim)
}

/// `(U/2) n(n-1) - mu n` as a normal-ordered polynomial: `(U/2)(b†)²b² - mu b†b`.
pub fn bose_hubbard_poly(u: &Rational, mu: &Rational) -> NormalPoly {
    let two = Rational::from_integer(2.into());
    NormalPoly::from_terms([((2, 2), u / two), ((1, 1), -mu.clone())])
}

/// `½(n_W n_W - n_W)` with `n_W = |z|² - ½`, the pointwise "linearized" Weyl
/// symbol of the Bose-Hubbard interaction at `U = 1`.
pub fn linearized_weyl_bh() -> PhaseSymbol {
    let n_w = weyl_symbol(&NormalPoly::number());
    let half = Rational::new(1.into(), 2.into());
    n_w.pointwise_product(&n_w).sub(&n_w).scale(&half)
}

impl fmt::Display for PhaseSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut keys: Vec<&(u32, u32)> = self.coeffs.keys().collect();
        keys.sort_by_key(|k| std::cmp::Reverse((k.0 + k.1, k.0)));
        let mut first = true;
        for key in keys {
            let (j, k) = *key;
            let monomial = if j == k {
                match j {
                    0 => String::new(),
                    _ => format!("|z|^{}", 2 * j),
                }
            } else {
                let mut parts = Vec::new();
                if j > 0 {
                    parts.push(if j == 1 {
                        "zbar".to_string()
                    } else {
                        format!("zbar^{j}")
                    });
                }
                if k > 0 {
                    parts.push(if k == 1 { "z".to_string() } else { format!("z^{k}") });
                }
                parts.join("*")
            };
            super::write_term(f, &self.coeffs[key], &monomial, first)?;
            first = false;
        }
        Ok(())
    }
}
