//! Lattice partition functions of the single-site Bose-Hubbard model for three
//! kernel choices, side by side with the exact trace.

use std::fmt;

use rayon::prelude::*;

use super::grid::QuadratureGrid;
use super::kernel::{KernelSpec, SymmetricRule};
use super::transfer::lattice_partition;
use crate::fock::{bose_hubbard_hamiltonian, exact_partition};
use crate::gaussian::Prescription;
use crate::symbols::{bose_hubbard_poly, linearized_weyl_bh, rational_from_f64, weyl_symbol, PhaseSymbol, Rational};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnomalyCase {
    /// `<z'|e^{-εH}|z>` with the exact Fock-space propagator.
    ExactBaseline,
    /// The Weyl symbol of `(U/2) n(n-1)` in a Symmetric naive kernel.
    WeylCorrect,
    /// `(U/2)(n_W n_W - n_W)`, which sits `U/8` above the Weyl symbol.
    WeylLinearized,
}

impl AnomalyCase {
    pub const ALL: [AnomalyCase; 3] = [
        AnomalyCase::ExactBaseline,
        AnomalyCase::WeylCorrect,
        AnomalyCase::WeylLinearized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyCase::ExactBaseline => "exact-kernel",
            AnomalyCase::WeylCorrect => "weyl-correct",
            AnomalyCase::WeylLinearized => "weyl-linearized",
        }
    }

    pub fn prescription(self) -> Prescription {
        match self {
            AnomalyCase::ExactBaseline => Prescription::Minus,
            _ => Prescription::Symmetric,
        }
    }

    /// `Z_lattice / Z_exact` as expected from the constant-offset argument,
    /// taking the linearized symbol to be anomaly free.
    pub fn expected_ratio(self, beta: f64, u: f64) -> f64 {
        match self {
            AnomalyCase::WeylCorrect => (beta * u / 8.0).exp(),
            _ => 1.0,
        }
    }
}

impl fmt::Display for AnomalyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyRow {
    pub case: AnomalyCase,
    /// The symbol used, or `exact` for the baseline.
    pub symbol: String,
    pub prescription: Prescription,
    pub slices: usize,
    pub z_lattice: f64,
    pub z_exact: f64,
    pub ratio: f64,
    pub expected_ratio: f64,
    pub residual: Option<f64>,
    pub imag_relative: f64,
    pub radial_order: usize,
    pub angular_order: usize,
    pub fock_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyReport {
    pub beta: f64,
    pub u: f64,
    pub rule: SymmetricRule,
    pub rows: Vec<AnomalyRow>,
    /// `Z(weyl-correct) / Z(weyl-linearized)` for each slice count.
    pub weyl_over_linearized: Vec<(usize, f64)>,
}

impl AnomalyReport {
    /// `e^{βU/8}`, the factor the constant offset predicts for [`Self::weyl_over_linearized`].
    pub fn anomaly_factor(&self) -> f64 {
        (self.beta * self.u / 8.0).exp()
    }

    pub fn row(&self, case: AnomalyCase, slices: usize) -> Option<&AnomalyRow> {
        self.rows.iter().find(|r| r.case == case && r.slices == slices)
    }
}

/// Weyl symbols `(correct, linearized)` of `(U/2) n(n-1)`.
pub fn bose_hubbard_weyl_symbols(u: &Rational) -> (PhaseSymbol, PhaseSymbol) {
    let zero = Rational::from_integer(0.into());
    let correct = weyl_symbol(&bose_hubbard_poly(u, &zero));
    let linearized = linearized_weyl_bh().scale(u);
    (correct, linearized)
}

pub fn anomaly_report(
    beta: f64,
    u: f64,
    slices: &[usize],
    grid: &QuadratureGrid,
    fock_dim: usize,
    rule: SymmetricRule,
) -> Result<AnomalyReport> {
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "U must be positive and finite, got {u}"
        )));
    }
    if slices.is_empty() || slices.contains(&0) {
        return Err(Error::InvalidParameter(
            "slice list must be non-empty and positive".into(),
        ));
    }
    let u_exact =
        rational_from_f64(u).ok_or_else(|| Error::InvalidParameter(format!("U = {u} is not representable")))?;
    let h = bose_hubbard_hamiltonian(u, 0.0, fock_dim)?;
    let z_exact = exact_partition(&h, beta)?.value;
    let (correct, linearized) = bose_hubbard_weyl_symbols(&u_exact);
    let specs = [
        (
            AnomalyCase::ExactBaseline,
            "exact".to_string(),
            KernelSpec::exact(h, beta)?,
        ),
        (
            AnomalyCase::WeylCorrect,
            correct.to_string(),
            KernelSpec::naive(correct, Prescription::Symmetric, beta)?.with_rule(rule),
        ),
        (
            AnomalyCase::WeylLinearized,
            linearized.to_string(),
            KernelSpec::naive(linearized, Prescription::Symmetric, beta)?.with_rule(rule),
        ),
    ];
    let jobs: Vec<(usize, usize)> = slices
        .iter()
        .flat_map(|&n| (0..specs.len()).map(move |k| (n, k)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, k)| {
            let (case, label, spec) = &specs[k];
            let r = lattice_partition(spec, n, grid)?;
            Ok(AnomalyRow {
                case: *case,
                symbol: label.clone(),
                prescription: case.prescription(),
                slices: n,
                z_lattice: r.z,
                z_exact,
                ratio: r.z / z_exact,
                expected_ratio: case.expected_ratio(beta, u),
                residual: r.residual,
                imag_relative: r.imag_relative,
                radial_order: r.radial_order,
                angular_order: r.angular_order,
                fock_dim,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let weyl_over_linearized = slices
        .iter()
        .map(|&n| {
            let find = |case| {
                rows.iter()
                    .find(|r: &&AnomalyRow| r.case == case && r.slices == n)
                    .map(|r| r.z_lattice)
            };
            let w = find(AnomalyCase::WeylCorrect).expect("row computed above");
            let l = find(AnomalyCase::WeylLinearized).expect("row computed above");
            (n, w / l)
        })
        .collect();
    Ok(AnomalyReport {
        beta,
        u,
        rule,
        rows,
        weyl_over_linearized,
    })
}
