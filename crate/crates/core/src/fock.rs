//! Truncated single-mode Fock space.
//!
//! Operators are dense `D x D` complex matrices in the number basis
//! `|0>, ..., |D-1>`. The exact partition function of a number-diagonal
//! Hamiltonian is the oracle every lattice result is compared against.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Relative size of an off-diagonal entry that still counts as zero.
const DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Tail weight above which a truncated coherent state is reported as inaccurate.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

/// Dense operator on the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: 0, min: 1 });
        }
        Ok(Self { matrix })
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| C64::new(x, 0.0)));
        Self::from_matrix(DMatrix::from_diagonal(&d))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.map(|x| x * factor),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Real diagonal if the operator is diagonal with real entries.
    pub fn real_diagonal(&self) -> Option<Vec<f64>> {
        let scale = self.matrix.iter().map(|x| x.norm()).fold(0.0_f64, f64::max).max(1.0);
        let tol = DIAGONAL_TOLERANCE * scale;
        let d = self.dim();
        for c in 0..d {
            for r in 0..d {
                let x = self.matrix[(r, c)];
                if r == c {
                    if x.im.abs() > tol {
                        return None;
                    }
                } else if x.norm() > tol {
                    return None;
                }
            }
        }
        Some((0..d).map(|n| self.matrix[(n, n)].re).collect())
    }

    pub fn is_diagonal(&self) -> bool {
        self.real_diagonal().is_some()
    }

    /// Largest entrywise deviation from another operator on the leading `block x block` corner.
    pub fn block_distance(&self, other: &Self, block: usize) -> f64 {
        let b = block.min(self.dim()).min(other.dim());
        let mut worst = 0.0_f64;
        for c in 0..b {
            for r in 0..b {
                worst = worst.max((self.matrix[(r, c)] - other.matrix[(r, c)]).norm());
            }
        }
        worst
    }
}

fn check_ladder_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    Ok(())
}

/// Annihilation and creation operators `(b, b†)`.
pub fn build_ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    check_ladder_dim(dim)?;
    let mut b = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        b[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let b = FockOperator::from_matrix(b)?;
    let bdag = b.adjoint();
    Ok((b, bdag))
}

/// `n = b†b`, with the diagonal filled directly so it is exact.
pub fn number_operator(dim: usize) -> Result<FockOperator> {
    check_ladder_dim(dim)?;
    let diag: Vec<f64> = (0..dim).map(|n| n as f64).collect();
    FockOperator::from_diagonal(&diag)
}

/// Single-site Bose-Hubbard Hamiltonian `(U/2) n(n-1) - mu n`.
pub fn bose_hubbard_hamiltonian(u: f64, mu: f64, dim: usize) -> Result<FockOperator> {
    check_ladder_dim(dim)?;
    let diag: Vec<f64> = (0..dim)
        .map(|n| {
            let n = n as f64;
            0.5 * u * n * (n - 1.0) - mu * n
        })
        .collect();
    FockOperator::from_diagonal(&diag)
}

/// Truncated trace `sum_n exp(-beta E_n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionSum {
    pub value: f64,
    /// `exp(-beta E_{D-1})`, the size of the last retained term.
    pub last_term: f64,
}

pub fn exact_partition(h: &FockOperator, beta: f64) -> Result<PartitionSum> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let energies = h.real_diagonal().ok_or_else(|| {
        Error::UnsupportedHamiltonian("the exact oracle only handles number-diagonal Hamiltonians".into())
    })?;
    let max_exponent = f64::MAX.ln();
    let mut terms = Vec::with_capacity(energies.len());
    for &e in &energies {
        let exponent = -beta * e;
        if exponent >= max_exponent {
            return Err(Error::UnboundedBelow { energy: e, beta });
        }
        terms.push(exponent.exp());
    }
    let last_term = *terms.last().expect("dimension is at least one");
    terms.sort_by(|a, b| b.total_cmp(a));
    let value = terms.iter().sum();
    Ok(PartitionSum { value, last_term })
}

/// Truncation that keeps the Poisson tail of `|z>` negligible for `|z|^2 <= max_abs2`.
pub fn default_truncation(max_abs2: f64) -> usize {
    let m = max_abs2.max(0.0);
    (m + 10.0 * m.sqrt() + 20.0).ceil() as usize
}

/// Truncated coherent state `e^{-|z|^2/2} z^n / sqrt(n!)`, `n < D`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentVector {
    z: C64,
    amplitudes: DVector<C64>,
}

impl CoherentVector {
    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Probability weight lost to the truncation, `1 - <z|z>_D`.
    pub fn tail_weight(&self) -> f64 {
        (1.0 - self.amplitudes.norm_squared()).max(0.0)
    }

    /// `<self|other>` in the truncated space.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `<self|op|self>`.
    pub fn expectation(&self, op: &FockOperator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        let applied = op.matrix() * &self.amplitudes;
        Ok(self.amplitudes.dotc(&applied))
    }
}

/// Unnormalized amplitudes `z^n / sqrt(n!)`, built by recurrence.
pub(crate) fn scaled_powers(z: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut current = C64::new(1.0, 0.0);
    for n in 0..dim {
        if n > 0 {
            current *= z / (n as f64).sqrt();
        }
        out.push(current);
    }
    out
}

pub fn coherent_vector(z: C64, dim: usize) -> Result<CoherentVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension { dim, min: 1 });
    }
    let prefactor = (-0.5 * z.norm_sqr()).exp();
    let amplitudes = DVector::from_iterator(dim, scaled_powers(z, dim).into_iter().map(|a| a * prefactor));
    let v = CoherentVector { z, amplitudes };
    let tail = v.tail_weight();
    if tail > TRUNCATION_TOLERANCE {
        log::warn!(
            "coherent state |z|^2 = {:.3} truncated at D = {dim} loses weight {tail:.3e}",
            z.norm_sqr()
        );
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ladder_two_dimensional() {
        let (b, bdag) = build_ladder(2).unwrap();
        assert_eq!(b.matrix()[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(b.matrix()[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(b.matrix()[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(bdag.matrix()[(1, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn ladder_elements_and_number() {
        let (b, bdag) = build_ladder(3).unwrap();
        assert!(close(b.matrix()[(1, 2)].re, 2f64.sqrt(), 1e-15));
        let (b, bdag4) = build_ladder(4).unwrap();
        let n = bdag4.mul(&b).unwrap();
        let diag = n.real_diagonal().unwrap();
        for (k, x) in diag.iter().enumerate() {
            assert!(close(*x, k as f64, 1e-15));
        }
        assert_eq!(
            number_operator(4).unwrap().real_diagonal().unwrap(),
            vec![0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(bdag.dim(), 3);
    }

    #[test]
    fn ladder_rejects_small_dimension() {
        assert_eq!(build_ladder(1).unwrap_err(), Error::InvalidDimension { dim: 1, min: 2 });
        assert!(bose_hubbard_hamiltonian(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn commutator_is_identity_away_from_the_cutoff() {
        let d = 9;
        let (b, bdag) = build_ladder(d).unwrap();
        let comm = b.mul(&bdag).unwrap().matrix() - bdag.mul(&b).unwrap().matrix();
        for r in 0..d {
            for c in 0..d {
                let want = if r == c && r < d - 1 { 1.0 } else { 0.0 };
                if r < d - 1 && c < d - 1 {
                    assert!((comm[(r, c)] - C64::new(want, 0.0)).norm() < 1e-13);
                }
            }
        }
        // the corrupted corner
        assert!(close(comm[(d - 1, d - 1)].re, -((d - 1) as f64), 1e-12));
    }

    #[test]
    fn bose_hubbard_diagonals() {
        let h = bose_hubbard_hamiltonian(1.0, 0.0, 4).unwrap();
        assert_eq!(h.real_diagonal().unwrap(), vec![0.0, 0.0, 1.0, 3.0]);
        let h = bose_hubbard_hamiltonian(0.0, 1.0, 3).unwrap();
        assert_eq!(h.real_diagonal().unwrap(), vec![0.0, -1.0, -2.0]);
        let h = bose_hubbard_hamiltonian(2.0, 1.0, 3).unwrap();
        assert_eq!(h.real_diagonal().unwrap(), vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn partition_geometric_series() {
        let h = number_operator(60).unwrap();
        let z = exact_partition(&h, 1.0).unwrap();
        let oracle = 1.0 / (1.0 - (-1.0f64).exp());
        assert!(close(z.value, oracle, 1e-12));
        assert!(z.last_term < 1e-25);
    }

    #[test]
    fn partition_bose_hubbard() {
        let h = bose_hubbard_hamiltonian(1.0, 0.0, 12).unwrap();
        let z = exact_partition(&h, 1.0).unwrap();
        let oracle: f64 = (0..12).map(|n| (-(n * (n - 1)) as f64 / 2.0).exp()).sum();
        assert!(close(z.value, oracle, 1e-14));
        assert!(close(z.value, 2.420191, 5e-7));
    }

    #[test]
    fn partition_high_temperature_counts_states() {
        let h = bose_hubbard_hamiltonian(1.0, 0.3, 10).unwrap();
        let z = exact_partition(&h, 1e-14).unwrap();
        assert!(close(z.value, 10.0, 1e-9));
    }

    #[test]
    fn partition_errors() {
        let (b, _) = build_ladder(4).unwrap();
        assert!(matches!(
            exact_partition(&b, 1.0),
            Err(Error::UnsupportedHamiltonian(_))
        ));
        let h = FockOperator::from_diagonal(&[0.0, -1000.0]).unwrap();
        assert!(matches!(exact_partition(&h, 1.0), Err(Error::UnboundedBelow { .. })));
        let h = number_operator(3).unwrap();
        assert!(exact_partition(&h, 0.0).is_err());
    }

    #[test]
    fn coherent_vacuum_and_norm() {
        let v = coherent_vector(C64::new(0.0, 0.0), 5).unwrap();
        assert_eq!(v.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(v.amplitudes().iter().skip(1).all(|a| a.norm() == 0.0));
        let v = coherent_vector(C64::new(1.0, 0.0), 30).unwrap();
        // Poisson tail sum_{n>=30} e^{-1}/n! is far below 1e-12
        assert!(close(v.norm(), 1.0, 1e-12));
        let short = coherent_vector(C64::new(2.0, 0.0), 4).unwrap();
        assert!(short.norm() < 1.0);
        assert!(short.tail_weight() > TRUNCATION_TOLERANCE);
    }

    #[test]
    fn coherent_overlap_formula() {
        let a = coherent_vector(C64::new(1.0, 0.0), 40).unwrap();
        let b = coherent_vector(C64::new(0.0, 1.0), 40).unwrap();
        let got = a.overlap(&b).unwrap();
        let za = a.z();
        let zb = b.z();
        let want = (za.conj() * zb - 0.5 * za.norm_sqr() - 0.5 * zb.norm_sqr()).exp();
        assert!((got - want).norm() < 1e-10);
    }

    #[test]
    fn number_moments_converge() {
        let z = C64::new(1.3, -0.7);
        let a2 = z.norm_sqr();
        let d = default_truncation(a2);
        let v = coherent_vector(z, d).unwrap();
        let n = number_operator(d).unwrap();
        let n1 = v.expectation(&n).unwrap().re;
        let n2 = v.expectation(&n.mul(&n).unwrap()).unwrap().re;
        assert!(((n1 - a2) / a2).abs() < 1e-8);
        assert!(((n2 - (a2 * a2 + a2)) / (a2 * a2 + a2)).abs() < 1e-8);
        assert!(close(n2 - n1 * n1, a2, 1e-8));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn oracle_matches_scalar_loop(diag in prop::collection::vec(-2.0f64..20.0, 2..25), beta in 0.01f64..3.0) {
            let h = FockOperator::from_diagonal(&diag).unwrap();
            let z = exact_partition(&h, beta).unwrap().value;
            let mut s = 0.0;
            for e in &diag {
                s += (-beta * e).exp();
            }
            prop_assert!((z - s).abs() <= 1e-12 * s);
        }

        #[test]
        fn truncation_is_monotone(u in 0.0f64..3.0, beta in 0.1f64..3.0, d in 2usize..30) {
            let z1 = exact_partition(&bose_hubbard_hamiltonian(u, 0.0, d).unwrap(), beta).unwrap().value;
            let z2 = exact_partition(&bose_hubbard_hamiltonian(u, 0.0, d + 1).unwrap(), beta).unwrap().value;
            prop_assert!(z2 >= z1);
        }

        #[test]
        fn coherent_norm_bounded(re in -3.0f64..3.0, im in -3.0f64..3.0, d in 1usize..40) {
            let v = coherent_vector(C64::new(re, im), d).unwrap();
            prop_assert!(v.norm() <= 1.0 + 1e-14);
        }
    }
}
