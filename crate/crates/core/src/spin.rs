//! SU(2) coherent states and covariant symbols.
//!
//! States are labelled by the stereographic coordinate `z`,
//! `|z> ∝ e^{z S_-} |s, s>`. The covariant symbol of `S_z²` is not the square
//! of the covariant symbol of `S_z`; the difference is the binomial variance
//! `2s|z|²/(1+|z|²)²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::symbols::{parse_rational, Rational};
use crate::{Error, Result, C64};

/// Spin quantum number `s`, stored as `2s ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidParameter("spin must be at least 1/2".into()));
        }
        Ok(Self { twice })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// `2m` for basis index `k`, where index 0 is `m = s`.
    fn twice_m(self, k: usize) -> i64 {
        self.twice as i64 - 2 * k as i64
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for Spin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let r = parse_rational(s)?;
        let twice = r * Rational::from_integer(2.into());
        if !twice.is_integer() || twice <= Rational::zero() {
            return Err(Error::InvalidParameter(format!("'{s}' is not a positive half-integer")));
        }
        let t: u32 = twice
            .to_integer()
            .try_into()
            .map_err(|_| Error::InvalidParameter(format!("spin '{s}' is too large")))?;
        Self::from_twice(t)
    }
}

/// `S_z`, `S_+`, `S_-` in the basis `|s,s>, |s,s-1>, ..., |s,-s>`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinRep {
    spin: Spin,
    sz: DMatrix<f64>,
    splus: DMatrix<f64>,
    sminus: DMatrix<f64>,
}

/// `4 (s(s+1) - m(m-1))` as an integer, for `2m = tm`.
fn lowering_sq_times4(twice: i64, tm: i64) -> i64 {
    twice * (twice + 2) - tm * (tm - 2)
}

impl SpinRep {
    pub fn new(spin: Spin) -> Self {
        let d = spin.dim();
        let t = spin.twice as i64;
        let sz = DMatrix::from_fn(d, d, |r, c| if r == c { spin.twice_m(r) as f64 / 2.0 } else { 0.0 });
        // S_-|m> = sqrt(s(s+1) - m(m-1)) |m-1>
        let sminus = DMatrix::from_fn(d, d, |r, c| {
            if r == c + 1 {
                (lowering_sq_times4(t, spin.twice_m(c)) as f64).sqrt() / 2.0
            } else {
                0.0
            }
        });
        let splus = sminus.transpose();
        Self {
            spin,
            sz,
            splus,
            sminus,
        }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn sz(&self) -> &DMatrix<f64> {
        &self.sz
    }

    pub fn splus(&self) -> &DMatrix<f64> {
        &self.splus
    }

    pub fn sminus(&self) -> &DMatrix<f64> {
        &self.sminus
    }

    pub fn sz_squared(&self) -> DMatrix<f64> {
        &self.sz * &self.sz
    }

    /// Check the algebra. The squared matrix elements are rationals, so
    /// `[S_+, S_-] = 2 S_z` and `S² = s(s+1)` are verified exactly on them;
    /// the floating-point matrices are then compared against the same identities.
    pub fn verify_algebra(&self, tolerance: f64) -> Result<()> {
        let t = self.spin.twice as i64;
        let d = self.spin.dim();
        let q = |n: i64| Rational::new(n.into(), 4.into());
        // |<m-1|S_-|m>|² for basis index k, zero past the bottom state
        let lower_sq = |k: usize| {
            if k + 1 < d {
                q(lowering_sq_times4(t, self.spin.twice_m(k)))
            } else {
                Rational::zero()
            }
        };
        let raise_sq = |k: usize| if k > 0 { lower_sq(k - 1) } else { Rational::zero() };
        let casimir = q(t * (t + 2));
        for k in 0..d {
            let m = Rational::new(self.spin.twice_m(k).into(), 2.into());
            // <m|[S_+,S_-]|m> = |S_-|m>|² - |S_+|m>|²
            if lower_sq(k) - raise_sq(k) != m.clone() * Rational::from_integer(2.into()) {
                return Err(Error::Numerical(format!("[S+,S-] != 2Sz at index {k}")));
            }
            // S² = S_z² - S_z + S_+ S_-
            if m.clone() * m.clone() - m + lower_sq(k) != casimir {
                return Err(Error::Numerical(format!("Casimir fails at index {k}")));
            }
        }
        let comm = &self.splus * &self.sminus - &self.sminus * &self.splus;
        let checks = [
            ("[S+,S-] - 2Sz", (comm - &self.sz * 2.0).amax()),
            (
                "[Sz,S+] - S+",
                (&self.sz * &self.splus - &self.splus * &self.sz - &self.splus).amax(),
            ),
            (
                "[Sz,S-] + S-",
                (&self.sz * &self.sminus - &self.sminus * &self.sz + &self.sminus).amax(),
            ),
            (
                "S² - s(s+1)",
                (self.sz_squared() + (&self.splus * &self.sminus + &self.sminus * &self.splus) * 0.5
                    - DMatrix::identity(d, d) * (self.spin.value() * (self.spin.value() + 1.0)))
                    .amax(),
            ),
        ];
        for (name, err) in checks {
            if err > tolerance {
                return Err(Error::Numerical(format!("{name} off by {err:.3e}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinCoherent {
    z: C64,
    amplitudes: DVector<C64>,
}

impl SpinCoherent {
    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.nrows() != self.amplitudes.len() || op.ncols() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                got: op.nrows(),
            });
        }
        Ok(self.amplitudes.dotc(&(op * &self.amplitudes)))
    }
}

/// Normalized `e^{z S_-} |s,s>`; the series stops after `2s` terms.
pub fn spin_coherent(rep: &SpinRep, z: C64) -> Result<SpinCoherent> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite stereographic coordinate {z}"
        )));
    }
    let d = rep.spin.dim();
    let lower = rep.sminus.map(|x| C64::new(x, 0.0));
    let mut term = DVector::<C64>::zeros(d);
    term[0] = C64::new(1.0, 0.0);
    let mut sum = term.clone();
    for k in 1..d {
        term = (&lower * term) * (z / k as f64);
        sum += &term;
    }
    let norm = sum.norm();
    Ok(SpinCoherent {
        z,
        amplitudes: sum / C64::new(norm, 0.0),
    })
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// `<z| op |z>` for an operator on the spin-`s` space.
pub fn spin_cov_symbol(op: &DMatrix<C64>, spin: Spin, z: C64) -> Result<C64> {
    if op.nrows() != spin.dim() || op.ncols() != spin.dim() {
        return Err(Error::DimensionMismatch {
            expected: spin.dim(),
            got: op.nrows().max(op.ncols()),
        });
    }
    spin_coherent(&SpinRep::new(spin), z)?.expectation(op)
}

/// `(S_z²)_cov - ((S_z)_cov)²` from the matrices.
pub fn product_symbol_gap(spin: Spin, z: C64) -> Result<f64> {
    let rep = SpinRep::new(spin);
    let state = spin_coherent(&rep, z)?;
    let sz = state.expectation(&complexify(rep.sz()))?.re;
    let sz2 = state.expectation(&complexify(&rep.sz_squared()))?.re;
    Ok(sz2 - sz * sz)
}

/// `2s|z|²/(1+|z|²)²`
pub fn product_symbol_gap_closed(spin: Spin, z: C64) -> f64 {
    let a = z.norm_sqr();
    spin.twice as f64 * a / ((1.0 + a) * (1.0 + a))
}

/// `s(1-|z|²)/(1+|z|²)`
pub fn sz_symbol_closed(spin: Spin, z: C64) -> f64 {
    let a = z.norm_sqr();
    spin.value() * (1.0 - a) / (1.0 + a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spin(s: &str) -> Spin {
        s.parse().unwrap()
    }

    fn spins() -> Vec<Spin> {
        ["1/2", "1", "3/2", "2", "5"].iter().map(|s| spin(s)).collect()
    }

    #[test]
    fn parsing_and_display() {
        assert_eq!(spin("3/2").twice(), 3);
        assert_eq!(spin("1.5"), spin("3/2"));
        assert_eq!(spin("2").to_string(), "2");
        assert_eq!(spin("1/2").to_string(), "1/2");
        assert!("1/3".parse::<Spin>().is_err());
        assert!("0".parse::<Spin>().is_err());
        assert!("-1/2".parse::<Spin>().is_err());
    }

    #[test]
    fn algebra_holds() {
        for s in spins().into_iter().chain([Spin::from_twice(13).unwrap()]) {
            SpinRep::new(s).verify_algebra(1e-12).unwrap();
        }
    }

    #[test]
    fn spin_one_matrices() {
        let rep = SpinRep::new(spin("1"));
        let r2 = 2f64.sqrt();
        assert!((rep.sminus()[(1, 0)] - r2).abs() < 1e-15);
        assert!((rep.sminus()[(2, 1)] - r2).abs() < 1e-15);
        assert_eq!(rep.sz()[(2, 2)], -1.0);
    }

    #[test]
    fn coherent_state_amplitudes_are_binomial() {
        let s = spin("3/2");
        let z = C64::new(0.4, -0.7);
        let st = spin_coherent(&SpinRep::new(s), z).unwrap();
        let a = z.norm_sqr();
        let binom = [1.0f64, 3.0, 3.0, 1.0];
        for (k, b) in binom.iter().enumerate() {
            let want = f64::sqrt(*b) * z.powi(k as i32) / (1.0 + a).powf(1.5);
            assert!((st.amplitudes()[k] - want).norm() < 1e-14);
        }
        let top = spin_coherent(&SpinRep::new(s), C64::new(0.0, 0.0)).unwrap();
        assert_eq!(top.amplitudes()[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn symbol_examples() {
        for s in spins() {
            let rep = SpinRep::new(s);
            let sz = complexify(rep.sz());
            let v = spin_cov_symbol(&sz, s, C64::new(0.0, 0.0)).unwrap();
            assert!((v.re - s.value()).abs() < 1e-14);
        }
        let one = spin("1");
        let sz = complexify(SpinRep::new(one).sz());
        let v = spin_cov_symbol(&sz, one, C64::new(0.6, 0.8)).unwrap();
        assert!(v.norm() < 1e-14);
        let half = spin("1/2");
        let sz2 = complexify(&SpinRep::new(half).sz_squared());
        for z in [C64::new(0.0, 0.0), C64::new(3.0, -2.0)] {
            assert!((spin_cov_symbol(&sz2, half, z).unwrap().re - 0.25).abs() < 1e-14);
        }
        assert!(matches!(
            spin_cov_symbol(&sz2, one, C64::new(0.0, 0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gap_examples() {
        let unit = C64::new(1.0, 0.0);
        assert!((product_symbol_gap(spin("1/2"), unit).unwrap() - 0.25).abs() < 1e-14);
        assert!((product_symbol_gap(spin("1"), unit).unwrap() - 0.5).abs() < 1e-14);
        for s in spins() {
            assert!(product_symbol_gap(s, C64::new(0.0, 0.0)).unwrap().abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn gap_matches_closed_form(twice in 1u32..12, r in 0.0f64..10.0, phi in 0.0f64..std::f64::consts::TAU) {
            let s = Spin::from_twice(twice).unwrap();
            let z = C64::from_polar(r, phi);
            let gap = product_symbol_gap(s, z).unwrap();
            prop_assert!((gap - product_symbol_gap_closed(s, z)).abs() < 1e-12);
            let sz = spin_cov_symbol(&complexify(SpinRep::new(s).sz()), s, z).unwrap();
            prop_assert!((sz.re - sz_symbol_closed(s, z)).abs() < 1e-12);
            if r > 1e-3 {
                prop_assert!(gap > 0.0);
            }
        }
    }
}
