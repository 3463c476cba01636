//! Resolved parameters and the computation behind each subcommand.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use cspath::fock::exact_partition;
use cspath::gaussian::{
    lattice_determinant, lattice_determinant_dense, ratio_by_integration, ratio_closed, GaussianParams, Prescription,
};
use cspath::lattice::{
    anomaly_report, build_grid, kind_for, lattice_partition_with, refine_partition, KernelSpec, LatticePartition,
    RefinementOptions, SymmetricRule, TransferMethod,
};
use cspath::spin::{product_symbol_gap, product_symbol_gap_closed, Spin};
use cspath::symbols::{
    normal_poly_from_symbol, parse_coefficient_list, parse_operator, parse_radial_symbol, symbol_of, NormalPoly,
    PhaseSymbol, SymbolKind,
};

use crate::config::CliError;
use crate::output::{Cell, Table};

/// Tolerance for the constant-shift identity between the two Weyl rows.
pub const ANOMALY_TOLERANCE: f64 = 1e-10;
/// Tolerance for the spin gap against its closed form.
pub const SPIN_TOLERANCE: f64 = 1e-12;
/// Tolerance for the quadrature identity in its exact range.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Largest `N` for which the dense LU determinant is also reported.
const DENSE_LIMIT: usize = 1024;

pub const META_COLUMNS: [&str; 5] = ["N", "Q_r", "Q_a", "D", "residual"];

/// A computed table and, if a check failed, the reason (exit code 3).
pub struct Outcome {
    pub table: Table,
    pub failure: Option<String>,
}

fn meta(n: Option<usize>, qr: Option<usize>, qa: Option<usize>, d: Option<usize>, residual: Option<f64>) -> Vec<Cell> {
    vec![n.into(), qr.into(), qa.into(), d.into(), residual.into()]
}

fn with_meta(cols: &[&'static str]) -> Vec<&'static str> {
    cols.iter().copied().chain(META_COLUMNS).collect()
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn prescriptions(spec: &str) -> Result<Vec<Prescription>, CliError> {
    if spec.eq_ignore_ascii_case("all") {
        Ok(Prescription::ALL.to_vec())
    } else {
        Ok(vec![spec.parse()?])
    }
}

fn kinds(spec: &str) -> Result<Vec<SymbolKind>, CliError> {
    if spec.eq_ignore_ascii_case("all") {
        Ok(vec![SymbolKind::Wick, SymbolKind::AntiWick, SymbolKind::Weyl])
    } else {
        Ok(vec![spec.parse()?])
    }
}

fn doubling(start: usize, end: usize) -> Vec<usize> {
    std::iter::successors(Some(start), |n| Some(n * 2))
        .take_while(|n| *n <= end)
        .collect()
}

// ---------------------------------------------------------------- gaussian-ratio

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GaussianRatioParams {
    pub beta: f64,
    pub mu: f64,
    pub mu0: f64,
    pub prescription: String,
    /// closed, integral, or lattice
    pub method: String,
    pub quad_points: usize,
    pub slices: usize,
}

impl Default for GaussianRatioParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mu: 1.0,
            mu0: 2.0,
            prescription: "all".into(),
            method: "closed".into(),
            quad_points: 64,
            slices: 4096,
        }
    }
}

fn lattice_ratio(pr: Prescription, p: &GaussianParams, slices: usize) -> Result<f64, CliError> {
    let at = |mu: f64| -> Result<f64, CliError> {
        let q = GaussianParams::single(p.beta(), mu)?;
        Ok(lattice_determinant(pr, &q, slices)?.raw())
    };
    // I_μ / I_μ0 = det(μ0) / det(μ)
    Ok(at(p.mu0())? / at(p.mu())?)
}

pub fn gaussian_ratio(p: &GaussianRatioParams) -> Result<Outcome, CliError> {
    let params = GaussianParams::new(p.beta, p.mu, p.mu0)?;
    let method = p.method.to_ascii_lowercase();
    let mut table = Table::new(with_meta(&[
        "prescription",
        "method",
        "beta",
        "mu",
        "mu0",
        "value",
        "closed_form",
        "abs_diff",
    ]));
    for pr in prescriptions(&p.prescription)? {
        let closed = ratio_closed(pr, &params);
        let (value, n, residual) = match method.as_str() {
            "closed" => (closed, None, None),
            "integral" => (ratio_by_integration(pr, &params, p.quad_points)?, None, None),
            "lattice" => {
                if p.slices < 4 {
                    return Err(bad("lattice method needs at least 4 slices"));
                }
                let v = lattice_ratio(pr, &params, p.slices)?;
                let half = lattice_ratio(pr, &params, p.slices / 2)?;
                (v, Some(p.slices), Some(((v - half) / v).abs()))
            }
            other => return Err(bad(format!("unknown method '{other}' (closed, integral, lattice)"))),
        };
        let mut row: Vec<Cell> = vec![
            pr.name().into(),
            method.as_str().into(),
            p.beta.into(),
            p.mu.into(),
            p.mu0.into(),
            value.into(),
            closed.into(),
            (value - closed).abs().into(),
        ];
        row.extend(meta(n, None, None, None, residual));
        table.push(row);
    }
    Ok(Outcome { table, failure: None })
}

// ---------------------------------------------------------------- gaussian-lattice

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GaussianLatticeParams {
    pub beta: f64,
    pub mu: f64,
    pub prescription: String,
    pub slices: Vec<usize>,
    pub dense_check: bool,
}

impl Default for GaussianLatticeParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mu: 1.0,
            prescription: "all".into(),
            slices: doubling(16, 4096),
            dense_check: false,
        }
    }
}

pub fn gaussian_lattice(p: &GaussianLatticeParams) -> Result<Outcome, CliError> {
    let params = GaussianParams::single(p.beta, p.mu)?;
    if p.slices.is_empty() {
        return Err(bad("slice list is empty"));
    }
    let mut table = Table::new(with_meta(&[
        "prescription",
        "determinant",
        "normalization",
        "limit",
        "relative_error",
        "error_ratio",
        "dense_determinant",
    ]));
    for pr in prescriptions(&p.prescription)? {
        let mut prev: Option<(usize, f64, f64)> = None;
        for &n in &p.slices {
            let d = lattice_determinant(pr, &params, n)?;
            let err = d.relative_error();
            // error(N/2) / error(N) when the previous entry is exactly N/2
            let (error_ratio, residual) = match prev {
                Some((m, e, det)) if 2 * m == n => (Some(e / err), Some(((d.determinant - det) / d.determinant).abs())),
                _ => (None, None),
            };
            let dense = if p.dense_check && n <= DENSE_LIMIT {
                Some(lattice_determinant_dense(pr, &params, n)?)
            } else {
                None
            };
            let mut row: Vec<Cell> = vec![
                pr.name().into(),
                d.determinant.into(),
                d.normalization.into(),
                d.limit.into(),
                err.into(),
                error_ratio.into(),
                dense.into(),
            ];
            row.extend(meta(Some(n), None, None, None, residual));
            table.push(row);
            prev = Some((n, err, d.determinant));
        }
    }
    Ok(Outcome { table, failure: None })
}

// ---------------------------------------------------------------- symbol

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SymbolParams {
    /// Operator polynomial in `n`.
    pub op: Option<String>,
    /// Radial symbol polynomial in `|z|^2`.
    pub symbol: Option<String>,
    /// Monomial list `j,k:c; ...` for `zbar^j z^k`.
    pub coeffs: Option<String>,
    /// Kind of `symbol` / `coeffs`.
    pub from: String,
    /// Target kind or `all`.
    pub to: String,
}

impl Default for SymbolParams {
    fn default() -> Self {
        Self {
            op: None,
            symbol: None,
            coeffs: None,
            from: "wick".into(),
            to: "all".into(),
        }
    }
}

fn input_operator(p: &SymbolParams) -> Result<NormalPoly, CliError> {
    let from: SymbolKind = p.from.parse()?;
    match (&p.op, &p.symbol, &p.coeffs) {
        (Some(op), None, None) => Ok(parse_operator(op)?),
        (None, Some(s), None) => Ok(normal_poly_from_symbol(&parse_radial_symbol(s, from)?)),
        (None, None, Some(c)) => Ok(normal_poly_from_symbol(&PhaseSymbol::from_terms(
            from,
            parse_coefficient_list(c)?,
        ))),
        _ => Err(bad("give exactly one of --op, --symbol, --coeffs")),
    }
}

pub fn symbol(p: &SymbolParams) -> Result<Outcome, CliError> {
    let op = input_operator(p)?;
    let targets = kinds(&p.to)?;
    let mut table = Table::new(vec!["kind", "symbol", "normal_ordered"]);
    let mut lines = Vec::new();
    for kind in &targets {
        let s = symbol_of(&op, *kind).to_string();
        lines.push(if targets.len() == 1 {
            s.clone()
        } else {
            format!("{}: {s}", kind.name())
        });
        table.push(vec![kind.name().into(), s.into(), op.to_string().into()]);
    }
    table.plain_text = Some(lines);
    Ok(Outcome { table, failure: None })
}

// ---------------------------------------------------------------- lattice-z

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct LatticeZParams {
    /// exact or naive
    pub kernel: String,
    /// Operator polynomial in `n`; defaults to `n*(n-1)/2`.
    pub op: Option<String>,
    /// Radial symbol for the naive kernel; defaults to the matching symbol of `op`.
    pub symbol: Option<String>,
    pub coeffs: Option<String>,
    pub prescription: String,
    pub rule: String,
    pub beta: f64,
    pub slices: usize,
    pub qr: usize,
    pub qa: usize,
    pub dim: usize,
    pub method: String,
    pub refine: bool,
    pub start_slices: usize,
    pub max_slices: usize,
    pub tolerance: f64,
}

impl Default for LatticeZParams {
    fn default() -> Self {
        Self {
            kernel: "naive".into(),
            op: None,
            symbol: None,
            coeffs: None,
            prescription: "symmetric".into(),
            rule: "average".into(),
            beta: 1.0,
            slices: 256,
            qr: cspath::lattice::DEFAULT_RADIAL_ORDER,
            qa: cspath::lattice::DEFAULT_ANGULAR_ORDER,
            dim: cspath::lattice::DEFAULT_FOCK_DIM,
            method: "auto".into(),
            refine: false,
            start_slices: 16,
            max_slices: 4096,
            tolerance: 1e-3,
        }
    }
}

const DEFAULT_OPERATOR: &str = "n*(n-1)/2";

fn lattice_row(
    p: &LatticeZParams,
    label: &str,
    stage: &str,
    r: &LatticePartition,
    z_exact: Option<f64>,
    converged: Option<bool>,
) -> Vec<Cell> {
    let mut row: Vec<Cell> = vec![
        p.kernel.as_str().into(),
        label.into(),
        p.prescription.as_str().into(),
        p.rule.as_str().into(),
        stage.into(),
        r.z.into(),
        z_exact.into(),
        z_exact.map(|e| r.z / e).into(),
        r.imag_relative.into(),
        r.method.name().into(),
        converged.into(),
    ];
    let d = r.fock_dim.or(z_exact.map(|_| p.dim));
    row.extend(meta(
        Some(r.slices),
        Some(r.radial_order),
        Some(r.angular_order),
        d,
        r.residual,
    ));
    row
}

pub fn lattice_z(p: &LatticeZParams) -> Result<Outcome, CliError> {
    let prescription: Prescription = p.prescription.parse()?;
    let rule: SymmetricRule = p.rule.parse()?;
    let method: TransferMethod = p.method.parse()?;
    let grid = build_grid(p.qr, p.qa)?;
    let (spec, label, reference) = match p.kernel.to_ascii_lowercase().as_str() {
        "exact" => {
            if p.symbol.is_some() || p.coeffs.is_some() {
                return Err(bad("the exact kernel takes --op, not a symbol"));
            }
            let op = parse_operator(p.op.as_deref().unwrap_or(DEFAULT_OPERATOR))?;
            let h = op.to_matrix(p.dim)?;
            (KernelSpec::exact(h.clone(), p.beta)?, "exact".to_string(), Some(h))
        }
        "naive" => {
            let kind = kind_for(prescription);
            let s = match (&p.op, &p.symbol, &p.coeffs) {
                (_, Some(src), None) => parse_radial_symbol(src, kind)?,
                (_, None, Some(c)) => PhaseSymbol::from_terms(kind, parse_coefficient_list(c)?),
                (op, None, None) => symbol_of(&parse_operator(op.as_deref().unwrap_or(DEFAULT_OPERATOR))?, kind),
                _ => return Err(bad("give at most one of --symbol, --coeffs")),
            };
            let h = normal_poly_from_symbol(&s).to_matrix(p.dim)?;
            let label = s.to_string();
            (
                KernelSpec::naive(s, prescription, p.beta)?.with_rule(rule),
                label,
                Some(h),
            )
        }
        other => return Err(bad(format!("unknown kernel '{other}' (exact, naive)"))),
    };
    // the exact trace is available whenever the operator is number-diagonal
    let z_exact = match reference {
        Some(h) if h.is_diagonal() => Some(exact_partition(&h, p.beta)?.value),
        _ => None,
    };
    let mut table = Table::new(with_meta(&[
        "kernel",
        "symbol",
        "prescription",
        "rule",
        "stage",
        "z",
        "z_exact",
        "ratio",
        "imag_relative",
        "method",
        "converged",
    ]));
    let mut failure = None;
    if p.refine {
        if method == TransferMethod::Dense {
            return Err(bad("refinement always uses the automatic transfer method"));
        }
        let opts = RefinementOptions {
            start_slices: p.start_slices,
            max_slices: p.max_slices,
            tolerance: p.tolerance,
            check_grid: true,
        };
        let r = refine_partition(&spec, &grid, &opts)?;
        for s in &r.steps {
            let ok = s.residual.is_some_and(|x| x < p.tolerance);
            table.push(lattice_row(p, &label, "refine", s, z_exact, Some(ok)));
        }
        if let Some(g) = &r.grid_check {
            table.push(lattice_row(
                p,
                &label,
                "grid-check",
                &g.refined,
                z_exact,
                Some(g.relative_change < p.tolerance),
            ));
            if g.relative_change >= p.tolerance {
                failure = Some(format!(
                    "doubling the grid changed Z by {:.3e} (tolerance {:.1e})",
                    g.relative_change, p.tolerance
                ));
            }
        }
        if !r.converged {
            failure = Some(format!(
                "no convergence to residual {:.1e} by N = {}",
                p.tolerance,
                r.last().slices
            ));
        }
    } else {
        let r = lattice_partition_with(&spec, p.slices, &grid, method)?;
        table.push(lattice_row(p, &label, "single", &r, z_exact, None));
    }
    Ok(Outcome { table, failure })
}

// ---------------------------------------------------------------- anomaly

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct AnomalyParams {
    pub beta: f64,
    pub u: f64,
    pub slices: Vec<usize>,
    pub qr: usize,
    pub qa: usize,
    pub dim: usize,
    pub rule: String,
}

impl Default for AnomalyParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            u: 1.0,
            slices: vec![64, 128, 256],
            qr: cspath::lattice::DEFAULT_RADIAL_ORDER,
            qa: cspath::lattice::DEFAULT_ANGULAR_ORDER,
            dim: cspath::lattice::DEFAULT_FOCK_DIM,
            rule: "average".into(),
        }
    }
}

pub fn anomaly(p: &AnomalyParams) -> Result<Outcome, CliError> {
    let rule: SymmetricRule = p.rule.parse()?;
    let grid = build_grid(p.qr, p.qa)?;
    let rep = anomaly_report(p.beta, p.u, &p.slices, &grid, p.dim, rule)?;
    let factor = rep.anomaly_factor();
    let mut table = Table::new(with_meta(&[
        "case",
        "symbol",
        "prescription",
        "z_lattice",
        "z_exact",
        "ratio",
        "expected_ratio",
        "weyl_over_linearized",
        "anomaly_factor",
        "imag_relative",
    ]));
    let mut failure = None;
    for &n in &p.slices {
        let wl = rep
            .weyl_over_linearized
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, r)| *r)
            .expect("report covers every slice count");
        if ((wl - factor) / factor).abs() > ANOMALY_TOLERANCE {
            failure = Some(format!(
                "N = {n}: weyl/linearized = {wl} differs from e^(βU/8) = {factor}"
            ));
        }
        for case in cspath::lattice::AnomalyCase::ALL {
            let r = rep.row(case, n).expect("report covers every case");
            let mut row: Vec<Cell> = vec![
                case.name().into(),
                r.symbol.as_str().into(),
                r.prescription.name().into(),
                r.z_lattice.into(),
                r.z_exact.into(),
                r.ratio.into(),
                r.expected_ratio.into(),
                wl.into(),
                factor.into(),
                r.imag_relative.into(),
            ];
            row.extend(meta(
                Some(n),
                Some(r.radial_order),
                Some(r.angular_order),
                Some(r.fock_dim),
                r.residual,
            ));
            table.push(row);
        }
    }
    Ok(Outcome { table, failure })
}

// ---------------------------------------------------------------- spin-gap

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SpinGapParams {
    pub spins: Vec<String>,
    pub points: usize,
    pub zmax: f64,
    pub phase: f64,
}

impl Default for SpinGapParams {
    fn default() -> Self {
        Self {
            spins: ["1/2", "1", "3/2", "2", "5"].map(String::from).to_vec(),
            points: 100,
            zmax: 10.0,
            phase: 0.0,
        }
    }
}

pub fn spin_gap(p: &SpinGapParams) -> Result<Outcome, CliError> {
    if p.points < 2 {
        return Err(bad("need at least 2 grid points"));
    }
    if !(p.zmax.is_finite() && p.zmax > 0.0) {
        return Err(bad("zmax must be positive and finite"));
    }
    let spins = p
        .spins
        .iter()
        .map(|s| s.parse::<Spin>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(with_meta(&["s", "abs_z", "phase", "gap", "closed_form", "abs_diff"]));
    let mut failure = None;
    for s in spins {
        for k in 0..p.points {
            let r = p.zmax * k as f64 / (p.points - 1) as f64;
            let z = Complex64::from_polar(r, p.phase);
            let gap = product_symbol_gap(s, z)?;
            let closed = product_symbol_gap_closed(s, z);
            let diff = (gap - closed).abs();
            if diff > SPIN_TOLERANCE || (r > 0.0 && gap <= 0.0) {
                failure = Some(format!("s = {s}, |z| = {r}: gap {gap} vs closed form {closed}"));
            }
            let mut row: Vec<Cell> = vec![
                s.to_string().into(),
                r.into(),
                p.phase.into(),
                gap.into(),
                closed.into(),
                diff.into(),
            ];
            row.extend(meta(None, None, None, Some(s.dim()), None));
            table.push(row);
        }
    }
    Ok(Outcome { table, failure })
}

// ---------------------------------------------------------------- identity-check

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct IdentityParams {
    pub qr: usize,
    pub qa: usize,
    pub max_index: usize,
    pub list_aliased: bool,
}

impl Default for IdentityParams {
    fn default() -> Self {
        Self {
            qr: 20,
            qa: 32,
            max_index: 15,
            list_aliased: false,
        }
    }
}

pub fn identity_check(p: &IdentityParams) -> Result<Outcome, CliError> {
    let grid = build_grid(p.qr, p.qa)?;
    let check = grid.identity_check(p.max_index);
    let mut table = Table::new(with_meta(&["entry", "m", "n", "deviation", "count", "flagged"]));
    let d = Some(p.max_index + 1);
    let mut push = |entry: &str, m: Option<usize>, n: Option<usize>, dev: Option<f64>, count: usize, flagged: bool| {
        let mut row: Vec<Cell> = vec![
            entry.into(),
            m.into(),
            n.into(),
            dev.into(),
            count.into(),
            flagged.into(),
        ];
        row.extend(meta(None, Some(p.qr), Some(p.qa), d, None));
        table.push(row);
    };
    let exact_ok = check.passes(IDENTITY_TOLERANCE);
    push("exact-range", None, None, Some(check.exact_deviation), 1, !exact_ok);
    match check.worst_aliased() {
        Some(w) => push(
            "aliased-worst",
            Some(w.m),
            Some(w.n),
            Some(w.deviation),
            check.aliased.len(),
            true,
        ),
        None => push("aliased-worst", None, None, None, 0, false),
    }
    if p.list_aliased {
        for e in &check.aliased {
            push("aliased", Some(e.m), Some(e.n), Some(e.deviation), 1, true);
        }
    }
    let failure = (!exact_ok).then(|| {
        format!(
            "identity deviation {:.3e} in the exact range exceeds {IDENTITY_TOLERANCE:.0e}",
            check.exact_deviation
        )
    });
    Ok(Outcome { table, failure })
}
