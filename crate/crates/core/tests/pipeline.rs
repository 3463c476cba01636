//! Parsed operators through symbols, kernels and the transfer matrix.

use cspath::fock::exact_partition;
use cspath::gaussian::Prescription;
use cspath::lattice::{build_grid, lattice_partition, KernelSpec};
use cspath::symbols::{parse_operator, parse_radial_symbol, symbol_of, weyl_symbol, wick_symbol, SymbolKind};
use cspath::Error;

#[test]
fn parsed_operator_exact_kernel_matches_trace() {
    let op = parse_operator("n*(n-1)/4 - n/2").unwrap();
    let h = op.to_matrix(30).unwrap();
    let z_exact = exact_partition(&h, 1.0).unwrap().value;
    let spec = KernelSpec::exact(h, 1.0).unwrap();
    let grid = build_grid(24, 32).unwrap();
    for n in [2, 8] {
        let z = lattice_partition(&spec, n, &grid).unwrap().z;
        assert!(((z - z_exact) / z_exact).abs() < 1e-8, "N={n}: {z} vs {z_exact}");
    }
}

#[test]
fn wick_number_symbol_on_minus_lattice() {
    // 1 / (1 - e^{-1}) for H = n at beta = 1
    let target = 1.0 / (1.0 - (-1.0f64).exp());
    let s = wick_symbol(&parse_operator("n").unwrap());
    let spec = KernelSpec::naive(s, Prescription::Minus, 1.0).unwrap();
    let grid = build_grid(24, 64).unwrap();
    let z = lattice_partition(&spec, 512, &grid).unwrap().z;
    assert!(((z - target) / target).abs() < 1e-2, "{z} vs {target}");
}

#[test]
fn parsed_symbol_matches_computed_symbol() {
    let op = parse_operator("n*(n-1)/2").unwrap();
    let parsed = parse_radial_symbol("1/2*|z|^4 - |z|^2 + 1/4", SymbolKind::Weyl).unwrap();
    assert_eq!(weyl_symbol(&op), parsed);
    assert_eq!(symbol_of(&op, SymbolKind::Weyl), parsed);
}

#[test]
fn kind_mismatch_is_an_error() {
    let s = wick_symbol(&parse_operator("n").unwrap());
    let r = KernelSpec::naive(s, Prescription::Symmetric, 1.0);
    assert!(matches!(r, Err(Error::KindMismatch { .. })), "{r:?}");
}
