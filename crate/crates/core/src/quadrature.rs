//! Gauss-Laguerre and Gauss-Legendre rules.
//!
//! Nodes start from the eigenvalues of the Jacobi matrix (Golub-Welsch) and
//! are polished by Newton iteration on the three-term recurrence. Weights come
//! from the closed derivative formulas rather than eigenvector components, so
//! the tiny Laguerre weights at large nodes keep full relative accuracy.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

const NEWTON_STEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn jacobi_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `(L_n(x), L_{n-1}(x))` for the Laguerre polynomials.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    if n == 0 {
        return (prev, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Nodes and weights for `∫_0^∞ e^{-t} f(t) dt`, exact for polynomials of degree `≤ 2n-1`.
pub fn gauss_laguerre(n: usize) -> Result<GaussRule> {
    if n == 0 {
        return Err(Error::InvalidParameter("Gauss-Laguerre order must be positive".into()));
    }
    let diag: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64).collect();
    let off: Vec<f64> = (1..n).map(|i| i as f64).collect();
    let mut nodes = jacobi_eigenvalues(&diag, &off);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for x in nodes.iter_mut() {
        for _ in 0..NEWTON_STEPS {
            let (ln, lm1) = laguerre_pair(n, *x);
            let deriv = nf * (ln - lm1) / *x;
            let step = ln / deriv;
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        // w = x / ((n+1)^2 L_{n+1}(x)^2)
        let (ln1, _) = laguerre_pair(n + 1, *x);
        weights.push(*x / ((nf + 1.0).powi(2) * ln1 * ln1));
    }
    check_rule(&nodes, &weights, "Gauss-Laguerre")?;
    Ok(GaussRule { nodes, weights })
}

/// `(P_n(x), P_n'(x))` for the Legendre polynomials.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    let deriv = nf * (x * cur - prev) / (x * x - 1.0);
    (cur, deriv)
}

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    if n == 0 {
        return Err(Error::InvalidParameter("Gauss-Legendre order must be positive".into()));
    }
    if n == 1 {
        return Ok(GaussRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let mut nodes = jacobi_eigenvalues(&diag, &off);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..NEWTON_STEPS {
            let (p, dp) = legendre_with_derivative(n, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, *x);
        weights.push(2.0 / ((1.0 - *x * *x) * dp * dp));
    }
    check_rule(&nodes, &weights, "Gauss-Legendre")?;
    Ok(GaussRule { nodes, weights })
}

/// Integrate over `[a, b]` with a Legendre rule.
pub fn integrate_interval<F: Fn(f64) -> f64>(rule: &GaussRule, a: f64, b: f64, f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    half * rule.integrate(|x| f(mid + half * x))
}

fn check_rule(nodes: &[f64], weights: &[f64], name: &str) -> Result<()> {
    let ok = nodes.iter().all(|x| x.is_finite())
        && weights.iter().all(|w| w.is_finite() && *w > 0.0)
        && nodes.windows(2).all(|p| p[0] < p[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "{name} node computation failed for order {}",
            nodes.len()
        )))
    }
}
