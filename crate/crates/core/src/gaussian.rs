//! The Gaussian coherent-state path integral `∫ DzbarDz exp(-∫ zbar(∂_τ + μ)z dτ)`.
//!
//! Its `μ`-dependence is fixed by the Green function at coinciding times,
//! which is discontinuous; each [`Prescription`] resolves the jump differently
//! and yields a different ratio `I_μ / I_μ0`. The same three choices are
//! realized on an explicit `N`-slice periodic lattice by one-step kernels
//! whose determinants converge to the continuum results.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::quadrature::{gauss_legendre, integrate_interval};
use crate::{Error, Result};

/// Equal-time value of the step function in the Green function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prescription {
    /// Covariant (Wick): `G(0) = G(0^-)`.
    Minus,
    /// Contravariant (anti-Wick): `G(0) = G(0^+)`.
    Plus,
    /// Weyl: `G(0) = (G(0^+) + G(0^-))/2`.
    Symmetric,
}

impl Prescription {
    pub const ALL: [Prescription; 3] = [Prescription::Minus, Prescription::Plus, Prescription::Symmetric];

    pub fn theta0(self) -> f64 {
        match self {
            Prescription::Minus => 0.0,
            Prescription::Plus => 1.0,
            Prescription::Symmetric => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Prescription::Minus => "minus",
            Prescription::Plus => "plus",
            Prescription::Symmetric => "symmetric",
        }
    }
}

impl fmt::Display for Prescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Prescription {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minus" | "covariant" | "cov" | "wick" => Ok(Prescription::Minus),
            "plus" | "contravariant" | "contra" | "antiwick" | "anti-wick" => Ok(Prescription::Plus),
            "symmetric" | "sym" | "weyl" => Ok(Prescription::Symmetric),
            other => Err(Error::InvalidParameter(format!("unknown prescription '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    beta: f64,
    mu: f64,
    mu0: f64,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

impl GaussianParams {
    pub fn new(beta: f64, mu: f64, mu0: f64) -> Result<Self> {
        Ok(Self {
            beta: positive("beta", beta)?,
            mu: positive("mu", mu)?,
            mu0: positive("mu0", mu0)?,
        })
    }

    /// Parameters for quantities that involve only one chemical potential.
    pub fn single(beta: f64, mu: f64) -> Result<Self> {
        Self::new(beta, mu, mu)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }
}

/// `1/(e^{βμ} - 1)`
pub fn bose_factor(beta: f64, mu: f64) -> f64 {
    1.0 / (beta * mu).exp_m1()
}

/// `G(τ1 - τ2) = [n_B + θ(τ1 - τ2)] e^{-μ(τ1 - τ2)}` for `τ1 ≠ τ2` in `[0, β)`.
pub fn green_function(tau1: f64, tau2: f64, p: &GaussianParams) -> Result<f64> {
    for tau in [tau1, tau2] {
        if !(0.0..p.beta).contains(&tau) {
            return Err(Error::InvalidParameter(format!(
                "imaginary time {tau} outside [0, {})",
                p.beta
            )));
        }
    }
    if tau1 == tau2 {
        return Err(Error::EqualTimeAmbiguity);
    }
    let diff = tau1 - tau2;
    let theta = if diff > 0.0 { 1.0 } else { 0.0 };
    Ok((bose_factor(p.beta, p.mu) + theta) * (-p.mu * diff).exp())
}

pub fn green_at_zero(prescription: Prescription, p: &GaussianParams) -> f64 {
    bose_factor(p.beta, p.mu) + prescription.theta0()
}

/// `I_μ / I_μ0` in closed form.
pub fn ratio_closed(prescription: Prescription, p: &GaussianParams) -> f64 {
    let (b, mu, mu0) = (p.beta, p.mu, p.mu0);
    // (1 - e^{-βμ0}) / (1 - e^{-βμ})
    let base = (-b * mu0).exp_m1() / (-b * mu).exp_m1();
    base * (-prescription.theta0() * b * (mu - mu0)).exp()
}

/// Relative change between the `n`- and `2n`-point rules that counts as converged.
pub const INTEGRATION_TOLERANCE: f64 = 1e-12;

/// `exp(-∫_{μ0}^{μ} β G(0; μ') dμ')` by Gauss-Legendre quadrature.
///
/// The rule is doubled once; if the two estimates disagree by more than
/// [`INTEGRATION_TOLERANCE`] the result is rejected.
pub fn ratio_by_integration(prescription: Prescription, p: &GaussianParams, quad_points: usize) -> Result<f64> {
    if quad_points < 8 {
        return Err(Error::InvalidParameter(format!(
            "need at least 8 quadrature points, got {quad_points}"
        )));
    }
    if p.mu == p.mu0 {
        return Ok(1.0);
    }
    let integrand = |mu: f64| p.beta * green_at_zero(prescription, &p.with_mu(mu));
    let coarse = integrate_interval(&gauss_legendre(quad_points)?, p.mu0, p.mu, integrand);
    let fine = integrate_interval(&gauss_legendre(2 * quad_points)?, p.mu0, p.mu, integrand);
    let (r_coarse, r_fine) = ((-coarse).exp(), (-fine).exp());
    let change = ((r_fine - r_coarse) / r_fine).abs();
    if change > INTEGRATION_TOLERANCE {
        return Err(Error::NoConvergence(format!(
            "Green-function integral changed by {change:.3e} between {quad_points} and {} points",
            2 * quad_points
        )));
    }
    Ok(r_fine)
}

/// Determinant of the `N`-slice periodic kernel and its continuum target.
///
/// For [`Prescription::Plus`] the raw determinant `(1+εμ)^N - 1` is divided by
/// `normalization = (1+εμ)^N`; `determinant * normalization` recovers it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeDeterminant {
    pub prescription: Prescription,
    pub slices: usize,
    pub determinant: f64,
    pub normalization: f64,
    pub limit: f64,
    pub limit_normalization: f64,
}

impl LatticeDeterminant {
    pub fn relative_error(&self) -> f64 {
        ((self.determinant - self.limit) / self.limit).abs()
    }

    pub fn raw(&self) -> f64 {
        self.determinant * self.normalization
    }

    pub fn raw_limit(&self) -> f64 {
        self.limit * self.limit_normalization
    }

    /// Lattice partition function `1/raw determinant`.
    pub fn partition(&self) -> f64 {
        1.0 / self.raw()
    }
}

fn lattice_step(p: &GaussianParams, slices: usize) -> Result<f64> {
    if slices < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 slices, got {slices}")));
    }
    let x = p.beta * p.mu / slices as f64;
    if x >= 1.0 {
        return Err(Error::StepTooLarge(x));
    }
    Ok(x)
}

/// `(diagonal, cyclic subdiagonal)` of the normalized one-step kernel.
fn kernel_entries(prescription: Prescription, x: f64) -> (f64, f64) {
    match prescription {
        // zbar_{k+1} couples to z_k with weight (1 - εμ)
        Prescription::Minus => (1.0, -(1.0 - x)),
        // (1 + εμ) on the diagonal, divided through
        Prescription::Plus => (1.0, -1.0 / (1.0 + x)),
        Prescription::Symmetric => (1.0 + 0.5 * x, -(1.0 - 0.5 * x)),
    }
}

/// Closed-form determinant of the periodic first-order difference kernel.
pub fn lattice_determinant(
    prescription: Prescription,
    p: &GaussianParams,
    slices: usize,
) -> Result<LatticeDeterminant> {
    let x = lattice_step(p, slices)?;
    let n = slices as f64;
    let bm = p.beta * p.mu;
    let (determinant, normalization, limit, limit_normalization) = match prescription {
        Prescription::Minus => (-(n * (-x).ln_1p()).exp_m1(), 1.0, -(-bm).exp_m1(), 1.0),
        Prescription::Plus => (
            -(-n * x.ln_1p()).exp_m1(),
            (n * x.ln_1p()).exp(),
            -(-bm).exp_m1(),
            bm.exp(),
        ),
        Prescription::Symmetric => (
            (n * (0.5 * x).ln_1p()).exp() - (n * (-0.5 * x).ln_1p()).exp(),
            1.0,
            2.0 * (0.5 * bm).sinh(),
            1.0,
        ),
    };
    Ok(LatticeDeterminant {
        prescription,
        slices,
        determinant,
        normalization,
        limit,
        limit_normalization,
    })
}

/// The explicit `N x N` kernel (normalized as in [`lattice_determinant`]).
pub fn lattice_kernel_matrix(prescription: Prescription, p: &GaussianParams, slices: usize) -> Result<DMatrix<f64>> {
    let x = lattice_step(p, slices)?;
    let (diag, sub) = kernel_entries(prescription, x);
    let mut m = DMatrix::<f64>::zeros(slices, slices);
    for k in 0..slices {
        m[(k, k)] += diag;
        m[((k + 1) % slices, k)] += sub;
    }
    Ok(m)
}

/// Determinant by dense LU, an independent route to [`lattice_determinant`].
pub fn lattice_determinant_dense(prescription: Prescription, p: &GaussianParams, slices: usize) -> Result<f64> {
    Ok(lattice_kernel_matrix(prescription, p, slices)?.lu().determinant())
}

/// Inverse of the covariant (Minus) kernel: the discrete Green function `<z_a zbar_b>`.
pub fn lattice_green_matrix(p: &GaussianParams, slices: usize) -> Result<DMatrix<f64>> {
    lattice_kernel_matrix(Prescription::Minus, p, slices)?
        .try_inverse()
        .ok_or_else(|| Error::Numerical("covariant lattice kernel is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_ladder, exact_partition, number_operator, FockOperator};
    use crate::C64;

    fn params() -> GaussianParams {
        GaussianParams::new(1.0, 1.0, 2.0).unwrap()
    }

    /// `Tr(e^{-(β-τ)μn} b e^{-τμn} b†)/Z` in a truncated Fock space.
    fn thermal_correlator(beta: f64, mu: f64, tau: f64, swap: bool, d: usize) -> f64 {
        let (b, bdag) = build_ladder(d).unwrap();
        let prop = |t: f64| {
            let diag: Vec<C64> = (0..d).map(|n| C64::new((-t * mu * n as f64).exp(), 0.0)).collect();
            FockOperator::from_matrix(nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))).unwrap()
        };
        let (first, second) = if swap { (&bdag, &b) } else { (&b, &bdag) };
        let t = tau.abs();
        let m = prop(beta - t)
            .mul(first)
            .unwrap()
            .mul(&prop(t))
            .unwrap()
            .mul(second)
            .unwrap();
        let z = exact_partition(&number_operator(d).unwrap().scale(mu), beta)
            .unwrap()
            .value;
        m.matrix().trace().re / z
    }

    #[test]
    fn green_function_matches_fock_correlator() {
        let p = GaussianParams::single(1.0, 1.0).unwrap();
        let forward = green_function(0.3, 0.0, &p).unwrap();
        assert!((forward - thermal_correlator(1.0, 1.0, 0.3, false, 60)).abs() < 1e-12);
        assert!((forward - 1.171957).abs() < 1e-6);
        let backward = green_function(0.0, 0.3, &p).unwrap();
        assert!((backward - thermal_correlator(1.0, 1.0, 0.3, true, 60)).abs() < 1e-12);
        assert!((backward - 0.785586).abs() < 1e-6);
    }

    #[test]
    fn green_function_errors_and_limits() {
        let p = params();
        assert_eq!(green_function(0.2, 0.2, &p), Err(Error::EqualTimeAmbiguity));
        assert!(green_function(1.0, 0.2, &p).is_err());
        let heavy = GaussianParams::single(1.0, 200.0).unwrap();
        let g = green_function(0.01, 0.0, &heavy).unwrap();
        assert!((g - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn green_at_zero_values() {
        let p = GaussianParams::single(1.0, 1.0).unwrap();
        let bose = 1.0 / (1f64.exp() - 1.0);
        assert!((green_at_zero(Prescription::Minus, &p) - bose).abs() < 1e-15);
        assert!((green_at_zero(Prescription::Plus, &p) - (bose + 1.0)).abs() < 1e-15);
        assert!((green_at_zero(Prescription::Symmetric, &p) - 1.081977).abs() < 1e-6);
        // thermal <b†b> from the Fock trace
        let d = 60;
        let n = number_operator(d).unwrap();
        let z = exact_partition(&n, 1.0).unwrap().value;
        let occ: f64 = (0..d).map(|k| k as f64 * (-(k as f64)).exp()).sum::<f64>() / z;
        assert!((green_at_zero(Prescription::Minus, &p) - occ).abs() < 1e-12);
        let sym = Prescription::Symmetric.theta0();
        assert_eq!(sym, 0.5 * (Prescription::Minus.theta0() + Prescription::Plus.theta0()));
    }

    #[test]
    fn closed_ratios() {
        let p = params();
        let e = 1f64.exp();
        assert!((ratio_closed(Prescription::Minus, &p) - (1.0 + 1.0 / e)).abs() < 1e-14);
        assert!((ratio_closed(Prescription::Plus, &p) - (e + 1.0)).abs() < 1e-14);
        assert!((ratio_closed(Prescription::Symmetric, &p) - (e.sqrt() + 1.0 / e.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn integration_matches_closed() {
        let p = params();
        for pr in Prescription::ALL {
            let a = ratio_by_integration(pr, &p, 64).unwrap();
            assert!((a - ratio_closed(pr, &p)).abs() < 1e-10, "{pr}");
        }
        let same = GaussianParams::new(1.0, 1.5, 1.5).unwrap();
        assert_eq!(ratio_by_integration(Prescription::Plus, &same, 8).unwrap(), 1.0);
        assert!(ratio_by_integration(Prescription::Plus, &p, 4).is_err());
    }

    #[test]
    fn integration_convergence_is_checked() {
        // a huge μ range with few points cannot resolve the Bose pole region
        let p = GaussianParams::new(1.0, 60.0, 1e-3).unwrap();
        assert!(matches!(
            ratio_by_integration(Prescription::Minus, &p, 8),
            Err(Error::NoConvergence(_))
        ));
    }

    #[test]
    fn determinant_examples() {
        let p = GaussianParams::single(1.0, 1.0).unwrap();
        let minus = lattice_determinant(Prescription::Minus, &p, 2).unwrap();
        assert!((minus.determinant - 0.75).abs() < 1e-15);
        let sym = lattice_determinant(Prescription::Symmetric, &p, 2).unwrap();
        assert!((sym.determinant - 1.0).abs() < 1e-15);
        // brute-force 2x2: [[1.25, -0.75], [-0.75, 1.25]]
        let brute = 1.25 * 1.25 - 0.75 * 0.75;
        assert!((lattice_determinant_dense(Prescription::Symmetric, &p, 2).unwrap() - brute).abs() < 1e-15);
        assert!((sym.limit - 1.042191).abs() < 1e-6);
        let fine = lattice_determinant(Prescription::Minus, &p, 4096).unwrap();
        assert!((fine.determinant - 0.632121).abs() < 2e-4);
        assert!(matches!(
            lattice_determinant(Prescription::Minus, &GaussianParams::single(4.0, 1.0).unwrap(), 2),
            Err(Error::StepTooLarge(_))
        ));
        assert!(lattice_determinant(Prescription::Minus, &p, 1).is_err());
    }

    #[test]
    fn dense_and_closed_determinants_agree() {
        let p = GaussianParams::single(1.3, 0.7).unwrap();
        for pr in Prescription::ALL {
            for n in [2usize, 3, 7, 64, 257] {
                let closed = lattice_determinant(pr, &p, n).unwrap().determinant;
                let dense = lattice_determinant_dense(pr, &p, n).unwrap();
                assert!(((closed - dense) / closed).abs() < 1e-11, "{pr} N={n}");
            }
        }
    }

    #[test]
    fn lattice_partition_matches_ordered_traces() {
        let p = GaussianParams::single(1.0, 1.0).unwrap();
        let z = |pr| lattice_determinant(pr, &p, 4096).unwrap().partition();
        let e = 1f64.exp();
        let zn = 1.0 / (1.0 - 1.0 / e);
        assert!(((z(Prescription::Minus) - zn) / zn).abs() < 1e-3);
        assert!(((z(Prescription::Plus) - zn / e) / (zn / e)).abs() < 1e-3);
        assert!(((z(Prescription::Symmetric) - zn / e.sqrt()) / (zn / e.sqrt())).abs() < 1e-3);
    }

    #[test]
    fn first_order_convergence() {
        let p = GaussianParams::single(1.0, 1.0).unwrap();
        for pr in Prescription::ALL {
            let mut n = 256;
            while n <= 4096 {
                let e1 = lattice_determinant(pr, &p, n).unwrap().relative_error();
                let e2 = lattice_determinant(pr, &p, 2 * n).unwrap().relative_error();
                let rate = e1 / e2;
                assert!((1.8..=2.2).contains(&rate), "{pr} N={n} rate={rate}");
                n *= 2;
            }
        }
    }

    #[test]
    fn discrete_green_function_is_one_slice_offset() {
        let p = GaussianParams::single(1.0, 1.0).unwrap();
        let n = 2000;
        let g = lattice_green_matrix(&p, n).unwrap();
        let eps = p.beta() / n as f64;
        let plus = green_at_zero(Prescription::Plus, &p);
        let minus = green_at_zero(Prescription::Minus, &p);
        for k in [0usize, 17, n - 2] {
            // <z_k zbar_k>: the bar field sits on the same slice, which is G(0^+)
            assert!((g[(k, k)] - plus).abs() < 2e-3);
            // <z_k zbar_{k+1}>: the covariant pairing, G(0^-)
            assert!((g[(k, k + 1)] - minus).abs() < 2e-3);
            // <z_{k+1} zbar_k> = G(ε)
            assert!((g[(k + 1, k)] - plus * (-p.mu() * eps).exp()).abs() < 2e-3);
        }
    }

    #[test]
    fn prescription_parsing() {
        assert_eq!("weyl".parse::<Prescription>().unwrap(), Prescription::Symmetric);
        assert_eq!("covariant".parse::<Prescription>().unwrap(), Prescription::Minus);
        assert!("sideways".parse::<Prescription>().is_err());
        assert!(GaussianParams::new(1.0, 0.0, 1.0).is_err());
        assert!(GaussianParams::new(-1.0, 1.0, 1.0).is_err());
    }
}
