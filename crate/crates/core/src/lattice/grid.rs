//! Phase-space quadrature for `∫ d²z/π |z><z|`.
//!
//! Nodes sit at `z = √t_i e^{iφ_a}` with `t_i` the Gauss-Laguerre abscissae
//! and `φ_a = 2πa/Q_a`. The coherent-state factors `e^{-|z|²/2}` of two
//! neighbouring kernels cancel the raw measure `e^{+t_i}`, leaving the folded
//! weights `ω = w_i / Q_a`, which never overflow.

use crate::fock::scaled_powers;
use crate::quadrature::gauss_laguerre;
use crate::{Error, Result, C64};

/// Deviation above which an identity entry outside the exact range is reported.
pub const ALIAS_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    radial_order: usize,
    angular_order: usize,
    radii_sq: Vec<f64>,
    nodes: Vec<C64>,
    weights: Vec<f64>,
}

pub fn build_grid(radial_order: usize, angular_order: usize) -> Result<QuadratureGrid> {
    if radial_order < 2 {
        return Err(Error::InvalidDimension {
            dim: radial_order,
            min: 2,
        });
    }
    if angular_order < 2 {
        return Err(Error::InvalidDimension {
            dim: angular_order,
            min: 2,
        });
    }
    let rule = gauss_laguerre(radial_order)?;
    let mut nodes = Vec::with_capacity(radial_order * angular_order);
    let mut weights = Vec::with_capacity(radial_order * angular_order);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        for a in 0..angular_order {
            let phi = std::f64::consts::TAU * a as f64 / angular_order as f64;
            nodes.push(C64::from_polar(t.sqrt(), phi));
            weights.push(w / angular_order as f64);
        }
    }
    Ok(QuadratureGrid {
        radial_order,
        angular_order,
        radii_sq: rule.nodes,
        nodes,
        weights,
    })
}

impl QuadratureGrid {
    pub fn radial_order(&self) -> usize {
        self.radial_order
    }

    pub fn angular_order(&self) -> usize {
        self.angular_order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node `p = i * Q_a + a`.
    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    /// Folded weights `ω_p`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|z|²` of the radial rings.
    pub fn radii_sq(&self) -> &[f64] {
        &self.radii_sq
    }

    pub fn index(&self, ring: usize, angle: usize) -> usize {
        ring * self.angular_order + angle
    }

    /// Raw measure `w_i e^{t_i} / Q_a` of ring `i`, as a logarithm.
    pub fn log_raw_weight(&self, ring: usize) -> f64 {
        (self.weights[self.index(ring, 0)]).ln() + self.radii_sq[ring]
    }

    /// Whether `<m| (Σ ω |z><z|) |n>` is exact by construction.
    pub fn is_exact_pair(&self, m: usize, n: usize) -> bool {
        m.max(n) < 2 * self.radial_order && m.abs_diff(n) < self.angular_order
    }

    /// Matrix of the discrete resolution of identity for `m, n <= max_index`.
    pub fn identity_matrix(&self, max_index: usize) -> Vec<Vec<C64>> {
        let dim = max_index + 1;
        let mut out = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        for (z, &w) in self.nodes.iter().zip(&self.weights) {
            let u = scaled_powers(*z, dim);
            for m in 0..dim {
                let left = u[m].conj() * w;
                for n in 0..dim {
                    out[m][n] += left * u[n];
                }
            }
        }
        out
    }

    pub fn identity_check(&self, max_index: usize) -> IdentityCheck {
        let r = self.identity_matrix(max_index);
        let mut exact_deviation: f64 = 0.0;
        let mut aliased = Vec::new();
        for (m, row) in r.iter().enumerate() {
            for (n, value) in row.iter().enumerate() {
                let target = if m == n { 1.0 } else { 0.0 };
                let deviation = (value - target).norm();
                if self.is_exact_pair(m, n) {
                    exact_deviation = exact_deviation.max(deviation);
                } else if deviation > ALIAS_TOLERANCE {
                    aliased.push(AliasedEntry { m, n, deviation });
                }
            }
        }
        IdentityCheck {
            radial_order: self.radial_order,
            angular_order: self.angular_order,
            max_index,
            exact_deviation,
            aliased,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AliasedEntry {
    pub m: usize,
    pub n: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub radial_order: usize,
    pub angular_order: usize,
    pub max_index: usize,
    /// Largest `|R_mn - δ_mn|` over pairs the rule integrates exactly.
    pub exact_deviation: f64,
    /// Pairs outside the exact range whose deviation exceeds [`ALIAS_TOLERANCE`].
    pub aliased: Vec<AliasedEntry>,
}

impl IdentityCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.exact_deviation < tolerance
    }

    pub fn worst_aliased(&self) -> Option<AliasedEntry> {
        self.aliased
            .iter()
            .copied()
            .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
    }
}
