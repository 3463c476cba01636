//! `Z = Tr T^N` for the grid-discretized one-step kernel.
//!
//! `T_pq = √ω_p k(zbar_p, z_q) √ω_q`. For rotation-invariant kernels `T` is
//! block-circulant in the angular index and splits into `Q_a` blocks of size
//! `Q_r` after a discrete Fourier transform; otherwise the dense `P x P`
//! matrix is powered directly.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::grid::{build_grid, QuadratureGrid};
use super::kernel::{KernelEvaluator, KernelSpec};
use crate::{Error, Result, C64};

/// Relative imaginary part tolerated in a trace before a warning is logged.
pub const IMAG_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TransferMethod {
    /// Blocked when the kernel allows it, dense otherwise.
    #[default]
    Auto,
    Dense,
    Blocked,
}

impl TransferMethod {
    pub fn name(self) -> &'static str {
        match self {
            TransferMethod::Auto => "auto",
            TransferMethod::Dense => "dense",
            TransferMethod::Blocked => "blocked",
        }
    }
}

impl fmt::Display for TransferMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransferMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(TransferMethod::Auto),
            "dense" => Ok(TransferMethod::Dense),
            "blocked" | "block" => Ok(TransferMethod::Blocked),
            other => Err(Error::InvalidParameter(format!("unknown transfer method '{other}'"))),
        }
    }
}

/// One lattice partition function with its convergence knobs.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePartition {
    pub z: f64,
    /// `|Im Tr T^N| / Re Tr T^N`.
    pub imag_relative: f64,
    pub slices: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    pub fock_dim: Option<usize>,
    pub method: TransferMethod,
    /// `|Z(N) - Z(N/2)| / Z(N)` when it was computed.
    pub residual: Option<f64>,
}

struct Prepared {
    ev: KernelEvaluator,
    powers: Vec<Vec<C64>>,
    sqrt_w: Vec<f64>,
}

fn prepare(spec: &KernelSpec, slices: usize, grid: &QuadratureGrid) -> Result<Prepared> {
    let ev = spec.evaluator(slices)?;
    if let Some(d) = ev.fock_dim() {
        if !grid.is_exact_pair(d - 1, 0) || 2 * grid.radial_order() < d {
            log::warn!(
                "a {}x{} grid does not resolve the identity on D = {d}; exact kernels will not compose exactly",
                grid.radial_order(),
                grid.angular_order()
            );
        }
    }
    let powers = grid.nodes().iter().map(|&z| ev.node_powers(z)).collect();
    let sqrt_w = grid.weights().iter().map(|w| w.sqrt()).collect();
    Ok(Prepared { ev, powers, sqrt_w })
}

impl Prepared {
    fn entry(&self, grid: &QuadratureGrid, p: usize, q: usize) -> C64 {
        let nodes = grid.nodes();
        self.ev.eval(nodes[p], &self.powers[p], nodes[q], &self.powers[q]) * (self.sqrt_w[p] * self.sqrt_w[q])
    }
}

/// The dense `P x P` transfer matrix.
pub fn transfer_matrix(spec: &KernelSpec, slices: usize, grid: &QuadratureGrid) -> Result<DMatrix<C64>> {
    let prep = prepare(spec, slices, grid)?;
    let p = grid.len();
    let rows: Vec<Vec<C64>> = (0..p)
        .into_par_iter()
        .map(|r| (0..p).map(|c| prep.entry(grid, r, c)).collect())
        .collect();
    Ok(DMatrix::from_fn(p, p, |r, c| rows[r][c]))
}

/// Fourier blocks `T_m(i,j) = Σ_c T((i,c),(j,0)) e^{-2πimc/Q_a}`, `m = 0..Q_a`.
pub fn transfer_blocks(spec: &KernelSpec, slices: usize, grid: &QuadratureGrid) -> Result<Vec<DMatrix<C64>>> {
    if !spec.is_rotation_invariant() {
        return Err(Error::InvalidParameter(
            "block diagonalization needs a rotation-invariant kernel".into(),
        ));
    }
    let prep = prepare(spec, slices, grid)?;
    let (qr, qa) = (grid.radial_order(), grid.angular_order());
    // g[c][(i, j)] = T((i,c),(j,0))
    let g: Vec<DMatrix<C64>> = (0..qa)
        .into_par_iter()
        .map(|c| DMatrix::from_fn(qr, qr, |i, j| prep.entry(grid, grid.index(i, c), grid.index(j, 0))))
        .collect();
    let blocks = (0..qa)
        .into_par_iter()
        .map(|m| {
            let mut block = DMatrix::<C64>::zeros(qr, qr);
            for (c, gc) in g.iter().enumerate() {
                let angle = -std::f64::consts::TAU * ((m * c) % qa) as f64 / qa as f64;
                block += gc * C64::from_polar(1.0, angle);
            }
            block
        })
        .collect();
    Ok(blocks)
}

/// `Tr M^n` by repeated squaring.
pub fn trace_of_power(m: &DMatrix<C64>, n: usize) -> C64 {
    if n == 0 {
        return C64::new(m.nrows() as f64, 0.0);
    }
    let mut base = m.clone();
    let mut acc: Option<DMatrix<C64>> = None;
    let mut k = n;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a * &base,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = &base * &base;
    }
    acc.expect("n > 0 sets at least one bit").trace()
}

fn resolve(spec: &KernelSpec, method: TransferMethod) -> Result<TransferMethod> {
    match method {
        TransferMethod::Auto if spec.is_rotation_invariant() => Ok(TransferMethod::Blocked),
        TransferMethod::Auto => Ok(TransferMethod::Dense),
        TransferMethod::Blocked if !spec.is_rotation_invariant() => Err(Error::InvalidParameter(
            "blocked transfer requested for a kernel that is not rotation invariant".into(),
        )),
        other => Ok(other),
    }
}

/// `Tr T^N` and the method that produced it.
pub fn lattice_trace(
    spec: &KernelSpec,
    slices: usize,
    grid: &QuadratureGrid,
    method: TransferMethod,
) -> Result<(C64, TransferMethod)> {
    let method = resolve(spec, method)?;
    let trace = match method {
        TransferMethod::Blocked => {
            let traces: Vec<C64> = transfer_blocks(spec, slices, grid)?
                .par_iter()
                .map(|b| trace_of_power(b, slices))
                .collect();
            // fixed summation order keeps the result independent of the thread count
            traces.iter().sum()
        }
        _ => trace_of_power(&transfer_matrix(spec, slices, grid)?, slices),
    };
    Ok((trace, method))
}

fn checked_partition(
    spec: &KernelSpec,
    slices: usize,
    grid: &QuadratureGrid,
    method: TransferMethod,
) -> Result<(f64, f64, TransferMethod)> {
    let (trace, method) = lattice_trace(spec, slices, grid, method)?;
    if !(trace.re.is_finite() && trace.re > 0.0) {
        return Err(Error::Numerical(format!(
            "lattice trace {} + {}i at N = {slices} is not a positive number",
            trace.re, trace.im
        )));
    }
    let imag_relative = trace.im.abs() / trace.re;
    if imag_relative > IMAG_TOLERANCE {
        log::warn!("lattice trace at N = {slices} has relative imaginary part {imag_relative:.3e}");
    }
    Ok((trace.re, imag_relative, method))
}

/// `Z = Tr T^N` with the automatically chosen method.
///
/// For even `N` the residual against `N/2` slices is included.
pub fn lattice_partition(spec: &KernelSpec, slices: usize, grid: &QuadratureGrid) -> Result<LatticePartition> {
    lattice_partition_with(spec, slices, grid, TransferMethod::Auto)
}

pub fn lattice_partition_with(
    spec: &KernelSpec,
    slices: usize,
    grid: &QuadratureGrid,
    method: TransferMethod,
) -> Result<LatticePartition> {
    let (z, imag_relative, method) = checked_partition(spec, slices, grid, method)?;
    let residual = if slices >= 2 && slices.is_multiple_of(2) {
        let (half, _, _) = checked_partition(spec, slices / 2, grid, method)?;
        Some(((z - half) / z).abs())
    } else {
        None
    };
    Ok(LatticePartition {
        z,
        imag_relative,
        slices,
        radial_order: grid.radial_order(),
        angular_order: grid.angular_order(),
        fock_dim: spec.fock_dim(),
        method,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementOptions {
    pub start_slices: usize,
    pub max_slices: usize,
    /// Stop once `|Z(2N) - Z(N)| / Z(2N)` falls below this.
    pub tolerance: f64,
    /// Repeat the final `N` on a grid with both orders doubled.
    pub check_grid: bool,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        Self {
            start_slices: 16,
            max_slices: 4096,
            tolerance: 1e-3,
            check_grid: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCheck {
    pub refined: LatticePartition,
    pub relative_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub steps: Vec<LatticePartition>,
    pub converged: bool,
    pub grid_check: Option<GridCheck>,
}

impl Refinement {
    pub fn last(&self) -> &LatticePartition {
        self.steps.last().expect("refinement has at least one step")
    }

    /// `log2(r(N/2) / r(N))` for consecutive residuals: about 1 for O(1/N) convergence.
    pub fn empirical_orders(&self) -> Vec<(usize, f64)> {
        self.steps
            .windows(2)
            .filter_map(|w| match (w[0].residual, w[1].residual) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((w[1].slices, (a / b).log2())),
                _ => None,
            })
            .collect()
    }

    pub fn residuals_decrease(&self) -> bool {
        let r: Vec<f64> = self.steps.iter().filter_map(|s| s.residual).collect();
        r.windows(2).all(|w| w[1] < w[0])
    }
}

/// Double `N` until the residual drops below the tolerance or the cap is reached,
/// then optionally repeat the last `N` with `2 Q_r` and `2 Q_a`.
///
/// The angular order matters as much as the radial one: for naive kernels an
/// under-resolved angular grid lets aliased modes grow at large `N`.
pub fn refine_partition(spec: &KernelSpec, grid: &QuadratureGrid, options: &RefinementOptions) -> Result<Refinement> {
    if options.start_slices == 0 || options.max_slices < options.start_slices {
        return Err(Error::InvalidParameter(format!(
            "invalid slice range {}..{}",
            options.start_slices, options.max_slices
        )));
    }
    let method = resolve(spec, TransferMethod::Auto)?;
    let mut steps: Vec<LatticePartition> = Vec::new();
    let mut slices = options.start_slices;
    let mut converged = false;
    loop {
        let (z, imag_relative, _) = checked_partition(spec, slices, grid, method)?;
        let residual = steps.last().map(|prev| ((z - prev.z) / z).abs());
        steps.push(LatticePartition {
            z,
            imag_relative,
            slices,
            radial_order: grid.radial_order(),
            angular_order: grid.angular_order(),
            fock_dim: spec.fock_dim(),
            method,
            residual,
        });
        if residual.is_some_and(|r| r < options.tolerance) {
            converged = true;
            break;
        }
        if slices * 2 > options.max_slices {
            break;
        }
        slices *= 2;
    }
    if !converged {
        log::warn!(
            "lattice partition did not reach residual {:.1e} by N = {}",
            options.tolerance,
            slices
        );
    }
    let grid_check = if options.check_grid {
        let finer = build_grid(2 * grid.radial_order(), 2 * grid.angular_order())?;
        let refined = lattice_partition_with(spec, slices, &finer, method)?;
        let last_z = steps.last().expect("loop runs at least once").z;
        let relative_change = ((refined.z - last_z) / last_z).abs();
        Some(GridCheck {
            refined,
            relative_change,
        })
    } else {
        None
    };
    Ok(Refinement {
        steps,
        converged,
        grid_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{bose_hubbard_hamiltonian, exact_partition, number_operator, FockOperator};
    use crate::gaussian::{ratio_closed, GaussianParams, Prescription};
    use crate::lattice::SymmetricRule;
    use crate::symbols::{
        bose_hubbard_poly, linearized_weyl_bh, rational, weyl_symbol, NormalPoly, PhaseSymbol, SymbolKind,
    };

    fn bh_exact() -> f64 {
        let h = bose_hubbard_hamiltonian(1.0, 0.0, 30).unwrap();
        exact_partition(&h, 1.0).unwrap().value
    }

    #[test]
    fn trace_of_power_small() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5, 0.0),
                C64::new(0.2, 0.0),
                C64::new(0.2, 0.0),
                C64::new(0.1, 0.0),
            ],
        );
        let mut direct = DMatrix::identity(2, 2);
        for _ in 0..13 {
            direct = &direct * &m;
        }
        assert!((trace_of_power(&m, 13) - direct.trace()).norm() < 1e-15);
        assert_eq!(trace_of_power(&m, 0), C64::new(2.0, 0.0));
    }

    #[test]
    fn dense_and_blocked_agree() {
        let grid = build_grid(8, 8).unwrap();
        let h = bose_hubbard_hamiltonian(1.0, 0.0, 20).unwrap();
        let exact = KernelSpec::exact(h, 1.0).unwrap();
        let weyl = weyl_symbol(&bose_hubbard_poly(&rational(1, 1), &rational(0, 1)));
        let naive = KernelSpec::naive(weyl, Prescription::Symmetric, 1.0).unwrap();
        for spec in [&exact, &naive] {
            for n in [1usize, 3, 8] {
                let (d, _) = lattice_trace(spec, n, &grid, TransferMethod::Dense).unwrap();
                let (b, _) = lattice_trace(spec, n, &grid, TransferMethod::Blocked).unwrap();
                assert!((d - b).norm() < 1e-11 * d.norm(), "N={n}: {d} vs {b}");
            }
        }
    }

    #[test]
    fn exact_kernel_reproduces_oracle_for_every_n() {
        let grid = build_grid(24, 32).unwrap();
        let h = bose_hubbard_hamiltonian(1.0, 0.0, 30).unwrap();
        let spec = KernelSpec::exact(h, 1.0).unwrap();
        let want = bh_exact();
        assert!((want - 2.420191).abs() < 1e-6);
        let mut values = Vec::new();
        for n in [1usize, 2, 4, 16, 64] {
            let r = lattice_partition(&spec, n, &grid).unwrap();
            assert_eq!(r.method, TransferMethod::Blocked);
            assert!((r.z - want).abs() < 1e-10, "N={n}: {}", r.z);
            values.push(r.z);
        }
        assert!(values.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-8));
    }

    #[test]
    fn constant_shift_is_exact() {
        let grid = build_grid(16, 16).unwrap();
        let base = linearized_weyl_bh();
        let shifted = base.add(&PhaseSymbol::constant(SymbolKind::Weyl, rational(-1, 8)));
        for n in [4usize, 32] {
            let a = lattice_partition(
                &KernelSpec::naive(base.clone(), Prescription::Symmetric, 1.0).unwrap(),
                n,
                &grid,
            )
            .unwrap();
            let b = lattice_partition(
                &KernelSpec::naive(shifted.clone(), Prescription::Symmetric, 1.0).unwrap(),
                n,
                &grid,
            )
            .unwrap();
            assert!((b.z / a.z - 0.125f64.exp()).abs() < 1e-12 * 0.125f64.exp());
        }
    }

    #[test]
    fn gaussian_cross_check() {
        let grid = build_grid(24, 64).unwrap();
        let p = GaussianParams::new(1.0, 1.0, 2.0).unwrap();
        let kinds = [
            (Prescription::Minus, SymbolKind::Wick),
            (Prescription::Plus, SymbolKind::AntiWick),
            (Prescription::Symmetric, SymbolKind::Weyl),
        ];
        for (pr, kind) in kinds {
            let z_at = |mu: i64| {
                let s = PhaseSymbol::from_terms(kind, [((1, 1), rational(mu, 1))]);
                lattice_partition(&KernelSpec::naive(s, pr, 1.0).unwrap(), 512, &grid)
                    .unwrap()
                    .z
            };
            let ratio = z_at(1) / z_at(2);
            let want = ratio_closed(pr, &p);
            assert!(((ratio - want) / want).abs() < 1e-2, "{pr}: {ratio} vs {want}");
        }
    }

    #[test]
    fn midpoint_rule_shifts_the_equal_time_value() {
        // the midpoint couples zbar_{k} to z_{k+1} as well, which acts like θ(0) = 3/4
        let grid = build_grid(24, 64).unwrap();
        let s = PhaseSymbol::from_terms(SymbolKind::Weyl, [((1, 1), rational(1, 1))]);
        let spec = KernelSpec::naive(s, Prescription::Symmetric, 1.0)
            .unwrap()
            .with_rule(SymmetricRule::Midpoint);
        let z = lattice_partition(&spec, 4096, &grid).unwrap().z;
        let want = (-0.75f64).exp() / (1.0 - (-1f64).exp());
        assert!(((z - want) / want).abs() < 5e-4, "{z} vs {want}");
    }

    #[test]
    fn weyl_number_symbol_matches_fock() {
        let grid = build_grid(24, 64).unwrap();
        let s = weyl_symbol(&NormalPoly::number());
        let spec = KernelSpec::naive(s, Prescription::Symmetric, 1.0).unwrap();
        let z = lattice_partition(&spec, 512, &grid).unwrap().z;
        let want = exact_partition(&number_operator(80).unwrap(), 1.0).unwrap().value;
        assert!(((z - want) / want).abs() < 1e-2, "{z} vs {want}");
    }

    #[test]
    fn non_rotation_invariant_uses_dense() {
        let grid = build_grid(4, 6).unwrap();
        let mut diag = vec![0.0; 12];
        for (n, d) in diag.iter_mut().enumerate() {
            *d = n as f64;
        }
        let mut m = FockOperator::from_diagonal(&diag).unwrap().into_matrix();
        m[(0, 1)] = C64::new(0.1, 0.0);
        m[(1, 0)] = C64::new(0.1, 0.0);
        let spec = KernelSpec::exact(FockOperator::from_matrix(m).unwrap(), 1.0).unwrap();
        assert!(!spec.is_rotation_invariant());
        let r = lattice_partition(&spec, 2, &grid).unwrap();
        assert_eq!(r.method, TransferMethod::Dense);
        assert!(lattice_trace(&spec, 2, &grid, TransferMethod::Blocked).is_err());
    }

    #[test]
    fn refinement_stops_and_checks_grid() {
        let grid = build_grid(12, 64).unwrap();
        let spec = KernelSpec::naive(linearized_weyl_bh(), Prescription::Symmetric, 1.0).unwrap();
        let opts = RefinementOptions {
            start_slices: 8,
            max_slices: 256,
            tolerance: 1e-4,
            check_grid: true,
        };
        let r = refine_partition(&spec, &grid, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.last().slices, 256);
        assert!(r.residuals_decrease());
        for (_, order) in r.empirical_orders() {
            assert!(order > 0.5 && order < 1.5, "{order}");
        }
        assert!(r.grid_check.unwrap().relative_change < 1e-6);
        let loose = RefinementOptions { tolerance: 0.5, ..opts };
        assert!(refine_partition(&spec, &grid, &loose).unwrap().converged);
    }

    #[test]
    fn bitwise_deterministic() {
        let grid = build_grid(12, 16).unwrap();
        let spec = KernelSpec::naive(linearized_weyl_bh(), Prescription::Symmetric, 1.0).unwrap();
        let a = lattice_partition(&spec, 64, &grid).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| lattice_partition(&spec, 64, &grid).unwrap());
        assert_eq!(a.z.to_bits(), b.z.to_bits());
    }
}
