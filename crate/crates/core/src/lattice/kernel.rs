//! One-step kernels `<z1| e^{-εH} |z2>` and their naive first-order replacements.
//!
//! `z1` labels the later slice (the bra) and `z2` the earlier one (the ket).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::fock::{coherent_vector, scaled_powers, FockOperator};
use crate::gaussian::Prescription;
use crate::symbols::{CompiledSymbol, PhaseSymbol, SymbolKind};
use crate::{Error, Result, C64};

/// Where a Weyl-tagged symbol is evaluated on a slice pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SymmetricRule {
    /// `½ s(zbar1, z2) + ½ s(zbar2, z2)`: the mean of the Minus and Plus placements.
    #[default]
    Average,
    /// `s(mbar, m)` with `m = (z1 + z2)/2`.
    Midpoint,
}

impl SymmetricRule {
    pub fn name(self) -> &'static str {
        match self {
            SymmetricRule::Average => "average",
            SymmetricRule::Midpoint => "midpoint",
        }
    }
}

impl fmt::Display for SymmetricRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymmetricRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "avg" => Ok(SymmetricRule::Average),
            "midpoint" | "mid" => Ok(SymmetricRule::Midpoint),
            other => Err(Error::InvalidParameter(format!("unknown symmetric rule '{other}'"))),
        }
    }
}

/// The symbol kind a prescription places correctly.
pub fn kind_for(prescription: Prescription) -> SymbolKind {
    match prescription {
        Prescription::Minus => SymbolKind::Wick,
        Prescription::Plus => SymbolKind::AntiWick,
        Prescription::Symmetric => SymbolKind::Weyl,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelMode {
    Exact {
        hamiltonian: FockOperator,
    },
    Naive {
        symbol: PhaseSymbol,
        prescription: Prescription,
        rule: SymmetricRule,
    },
}

/// Kernel definition at inverse temperature `β`; the step is `ε = β/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    mode: KernelMode,
    beta: f64,
}

fn check_beta(beta: f64) -> Result<f64> {
    if beta > 0.0 && beta.is_finite() {
        Ok(beta)
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )))
    }
}

impl KernelSpec {
    pub fn exact(hamiltonian: FockOperator, beta: f64) -> Result<Self> {
        let herm = hamiltonian.matrix().adjoint() - hamiltonian.matrix();
        let scale = hamiltonian.matrix().norm().max(1.0);
        if herm.norm() > 1e-12 * scale {
            return Err(Error::UnsupportedHamiltonian(
                "exact kernel needs a Hermitian Hamiltonian".into(),
            ));
        }
        Ok(Self {
            mode: KernelMode::Exact { hamiltonian },
            beta: check_beta(beta)?,
        })
    }

    /// Naive kernel `exp(zbar1 z2 - ε s)`. The symbol kind must match the prescription.
    pub fn naive(symbol: PhaseSymbol, prescription: Prescription, beta: f64) -> Result<Self> {
        if symbol.kind() != kind_for(prescription) {
            return Err(Error::KindMismatch {
                kind: symbol.kind().name(),
                prescription: prescription.name(),
            });
        }
        Ok(Self {
            mode: KernelMode::Naive {
                symbol,
                prescription,
                rule: SymmetricRule::default(),
            },
            beta: check_beta(beta)?,
        })
    }

    /// Select the Symmetric placement rule; ignored by the other modes.
    pub fn with_rule(mut self, new_rule: SymmetricRule) -> Self {
        if let KernelMode::Naive { rule, .. } = &mut self.mode {
            *rule = new_rule;
        }
        self
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Ok(Self {
            mode: self.mode.clone(),
            beta: check_beta(beta)?,
        })
    }

    pub fn mode(&self) -> &KernelMode {
        &self.mode
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self, slices: usize) -> f64 {
        self.beta / slices as f64
    }

    pub fn fock_dim(&self) -> Option<usize> {
        match &self.mode {
            KernelMode::Exact { hamiltonian } => Some(hamiltonian.dim()),
            KernelMode::Naive { .. } => None,
        }
    }

    /// Kernels that commute with `z -> e^{iθ} z` make the transfer matrix block-circulant.
    pub fn is_rotation_invariant(&self) -> bool {
        match &self.mode {
            KernelMode::Exact { hamiltonian } => hamiltonian.is_diagonal(),
            KernelMode::Naive { symbol, .. } => symbol.is_rotation_invariant(),
        }
    }

    pub(crate) fn evaluator(&self, slices: usize) -> Result<KernelEvaluator> {
        if slices == 0 {
            return Err(Error::InvalidParameter("need at least one slice".into()));
        }
        let eps = self.epsilon(slices);
        Ok(match &self.mode {
            KernelMode::Exact { hamiltonian } => match hamiltonian.real_diagonal() {
                Some(energies) => KernelEvaluator::Diagonal(energies.iter().map(|e| (-eps * e).exp()).collect()),
                None => KernelEvaluator::Dense(propagator(hamiltonian, eps)?),
            },
            KernelMode::Naive {
                symbol,
                prescription,
                rule,
            } => KernelEvaluator::Naive {
                symbol: symbol.compile(),
                prescription: *prescription,
                rule: *rule,
                eps,
            },
        })
    }
}

/// `e^{-εH}` through the Hermitian eigendecomposition.
fn propagator(h: &FockOperator, eps: f64) -> Result<DMatrix<C64>> {
    let eig = SymmetricEigen::new(h.matrix().clone());
    if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numerical("eigendecomposition of the Hamiltonian failed".into()));
    }
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::new((-eps * e).exp(), 0.0)));
    Ok(v * d * v.adjoint())
}

/// The kernel with its `e^{-|z1|²/2 - |z2|²/2}` factors removed.
pub(crate) enum KernelEvaluator {
    Diagonal(Vec<f64>),
    Dense(DMatrix<C64>),
    Naive {
        symbol: CompiledSymbol,
        prescription: Prescription,
        rule: SymmetricRule,
        eps: f64,
    },
}

impl KernelEvaluator {
    pub(crate) fn fock_dim(&self) -> Option<usize> {
        match self {
            KernelEvaluator::Diagonal(d) => Some(d.len()),
            KernelEvaluator::Dense(m) => Some(m.nrows()),
            KernelEvaluator::Naive { .. } => None,
        }
    }

    /// Per-node data: `z^n/√n!` for Fock-space kernels, nothing otherwise.
    pub(crate) fn node_powers(&self, z: C64) -> Vec<C64> {
        match self.fock_dim() {
            Some(d) => scaled_powers(z, d),
            None => Vec::new(),
        }
    }

    pub(crate) fn eval(&self, z1: C64, u1: &[C64], z2: C64, u2: &[C64]) -> C64 {
        match self {
            KernelEvaluator::Diagonal(e) => e
                .iter()
                .zip(u1.iter().zip(u2))
                .map(|(w, (a, b))| a.conj() * b * *w)
                .sum(),
            KernelEvaluator::Dense(m) => {
                let mut acc = C64::new(0.0, 0.0);
                for (r, a) in u1.iter().enumerate() {
                    let row: C64 = u2.iter().enumerate().map(|(c, b)| m[(r, c)] * b).sum();
                    acc += a.conj() * row;
                }
                acc
            }
            KernelEvaluator::Naive {
                symbol,
                prescription,
                rule,
                eps,
            } => {
                let (zb1, zb2) = (z1.conj(), z2.conj());
                let s = match (prescription, rule) {
                    (Prescription::Minus, _) => symbol.eval(zb1, z2),
                    (Prescription::Plus, _) => symbol.eval(zb2, z2),
                    (Prescription::Symmetric, SymmetricRule::Average) => {
                        (symbol.eval(zb1, z2) + symbol.eval(zb2, z2)) * 0.5
                    }
                    (Prescription::Symmetric, SymmetricRule::Midpoint) => {
                        let m = (z1 + z2) * 0.5;
                        symbol.eval(m.conj(), m)
                    }
                };
                (zb1 * z2 - s * *eps).exp()
            }
        }
    }
}

/// `<z1| e^{-εH} |z2>` with coherent states truncated at the dimension of `H`.
///
/// A warning is logged when either state loses more than the truncation tolerance.
pub fn exact_kernel(h: &FockOperator, epsilon: f64, z1: C64, z2: C64) -> Result<C64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let v1 = coherent_vector(z1, h.dim())?;
    let v2 = coherent_vector(z2, h.dim())?;
    let ev = match h.real_diagonal() {
        Some(energies) => KernelEvaluator::Diagonal(energies.iter().map(|e| (-epsilon * e).exp()).collect()),
        None => KernelEvaluator::Dense(propagator(h, epsilon)?),
    };
    Ok(ev.eval(z1, v1.amplitudes().as_slice(), z2, v2.amplitudes().as_slice()))
}

/// `exp(zbar1 z2 - |z1|²/2 - |z2|²/2 - ε s)` for a [`KernelMode::Naive`] spec.
pub fn naive_kernel(spec: &KernelSpec, slices: usize, z1: C64, z2: C64) -> Result<C64> {
    if !matches!(spec.mode, KernelMode::Naive { .. }) {
        return Err(Error::InvalidParameter("naive_kernel needs a naive kernel spec".into()));
    }
    let ev = spec.evaluator(slices)?;
    let prefactor = (-0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp();
    Ok(ev.eval(z1, &[], z2, &[]) * prefactor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{bose_hubbard_hamiltonian, build_ladder, number_operator};
    use crate::symbols::{rational, wick_symbol, NormalPoly};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_hamiltonian_gives_overlap() {
        let h = FockOperator::from_diagonal(&[0.0; 40]).unwrap();
        let (z1, z2) = (c(0.3, -0.4), c(-0.2, 0.7));
        let k = exact_kernel(&h, 0.5, z1, z2).unwrap();
        let want = (z1.conj() * z2 - 0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp();
        assert!((k - want).norm() < 1e-14);
    }

    #[test]
    fn number_operator_kernel() {
        let h = number_operator(60).unwrap();
        let k = exact_kernel(&h, 1.0, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let want = ((-1f64).exp() - 1.0).exp();
        assert!((k.re - want).abs() < 1e-14 && k.im.abs() < 1e-15);
        assert!((k.re - 0.531464).abs() < 1e-6);
    }

    #[test]
    fn non_diagonal_path_matches_taylor_series() {
        let h = bose_hubbard_hamiltonian(1.0, 0.3, 30).unwrap();
        let dense = propagator(&h, 0.2).unwrap();
        for n in 0..30 {
            let e = h.matrix()[(n, n)].re;
            assert!((dense[(n, n)] - (-0.2 * e).exp()).norm() < 1e-12);
        }
        let (b, bd) = build_ladder(30).unwrap();
        let mixed = b.add(&bd).unwrap().add(&number_operator(30).unwrap()).unwrap();
        let eps = 0.1;
        // Σ_k (-εH)^k / k!
        let step = mixed.scale(-eps);
        let mut term = FockOperator::identity(30).unwrap();
        let mut series = term.clone();
        for k in 1..40 {
            term = term.mul(&step).unwrap().scale(1.0 / k as f64);
            series = series.add(&term).unwrap();
        }
        let (z1, z2) = (c(0.5, 0.2), c(-0.3, 0.4));
        let v1 = coherent_vector(z1, 30).unwrap();
        let v2 = coherent_vector(z2, 30).unwrap();
        let want = v1.amplitudes().dotc(&(series.matrix() * v2.amplitudes()));
        let got = exact_kernel(&mixed, eps, z1, z2).unwrap();
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn bose_hubbard_small_step_reduces_to_overlap() {
        let h = bose_hubbard_hamiltonian(1.0, 0.0, 30).unwrap();
        let (z1, z2) = (c(0.6, 0.1), c(0.5, -0.2));
        let overlap = (z1.conj() * z2 - 0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp();
        let e1 = (exact_kernel(&h, 1e-3, z1, z2).unwrap() - overlap).norm();
        let e2 = (exact_kernel(&h, 5e-4, z1, z2).unwrap() - overlap).norm();
        assert!(e1 < 1e-3);
        assert!((e1 / e2 - 2.0).abs() < 1e-2);
    }

    #[test]
    fn naive_placements() {
        let s = PhaseSymbol::from_terms(SymbolKind::Wick, [((1, 1), rational(1, 1)), ((0, 1), rational(1, 2))]);
        let (z1, z2) = (c(0.3, 0.2), c(-0.1, 0.5));
        let strip = |k: C64| k * (0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp();
        let minus = KernelSpec::naive(s.clone(), Prescription::Minus, 1.0).unwrap();
        let k = strip(naive_kernel(&minus, 4, z1, z2).unwrap());
        assert!((k - (z1.conj() * z2 - 0.25 * s.eval(z1.conj(), z2)).exp()).norm() < 1e-15);

        let plus = KernelSpec::naive(s.clone().with_kind(SymbolKind::AntiWick), Prescription::Plus, 1.0).unwrap();
        let k = strip(naive_kernel(&plus, 4, z1, z2).unwrap());
        assert!((k - (z1.conj() * z2 - 0.25 * s.eval_at(z2)).exp()).norm() < 1e-15);

        let weyl = s.clone().with_kind(SymbolKind::Weyl);
        let avg = KernelSpec::naive(weyl.clone(), Prescription::Symmetric, 1.0).unwrap();
        let k = strip(naive_kernel(&avg, 4, z1, z2).unwrap());
        let want = 0.125 * (s.eval(z1.conj(), z2) + s.eval_at(z2));
        assert!((k - (z1.conj() * z2 - want).exp()).norm() < 1e-15);

        let mid = avg.with_rule(SymmetricRule::Midpoint);
        let k = strip(naive_kernel(&mid, 4, z1, z2).unwrap());
        let m = (z1 + z2) * 0.5;
        assert!((k - (z1.conj() * z2 - 0.25 * s.eval_at(m)).exp()).norm() < 1e-15);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let s = wick_symbol(&NormalPoly::number());
        let err = KernelSpec::naive(s, Prescription::Symmetric, 1.0).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { .. }));
        let h = number_operator(10).unwrap();
        assert!(KernelSpec::exact(h.clone(), 0.0).is_err());
        let spec = KernelSpec::exact(h, 1.0).unwrap();
        assert!(naive_kernel(&spec, 4, c(0.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(exact_kernel(&number_operator(5).unwrap(), -1.0, c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn rotation_invariance_detection() {
        let n = NormalPoly::number();
        let spec = KernelSpec::naive(wick_symbol(&n), Prescription::Minus, 1.0).unwrap();
        assert!(spec.is_rotation_invariant());
        let off = NormalPoly::annihilation() + NormalPoly::creation();
        let spec = KernelSpec::naive(wick_symbol(&off), Prescription::Minus, 1.0).unwrap();
        assert!(!spec.is_rotation_invariant());
        assert_eq!("mid".parse::<SymmetricRule>().unwrap(), SymmetricRule::Midpoint);
    }
}
