//! Limiting moment hierarchy in closed form.
//!
//! Each limiting moment process solves
//!
//! ```text
//! m_k' = -k m_k + k [ (alpha + k - 1) m_{k-1} + c sum_{i<k} m_i m_{k-1-i} ],   m_k(0) = a_k
//! ```
//!
//! with `m_0 = 1`. By induction the forcing is an exponential polynomial with
//! frequencies `0..k`, so `m_k(t) = C_{k,0} + sum_{i=1}^k C_{k,i} e^{-it}`. All
//! coefficients are computed in exact rational arithmetic.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exp_neg, int, rational_from_f64, rational_to_f64};

/// Relative tolerance for the Hankel PSD test: `min eig >= -tol * trace / n`.
pub const PSD_RELATIVE_TOL: f64 = 1e-8;

/// `t -> C[0] + sum_{i>=1} C[i] e^{-i t}` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPolynomial {
    coeffs: Vec<BigRational>,
}

impl ExpPolynomial {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    /// Coefficient of `e^{-i t}`; zero beyond the stored degree.
    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Highest frequency present.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Value at `t = 0`, the sum of all coefficients.
    pub fn initial_value(&self) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |acc, c| acc + c)
    }

    /// Limit as `t -> infinity`.
    pub fn limit(&self) -> BigRational {
        self.coeff(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Termwise time derivative: `C_i e^{-it} -> -i C_i e^{-it}`.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| -(c * int(i as i64)))
                .collect(),
        )
    }

    /// Double-precision Horner evaluation in `x = e^{-t}`.
    ///
    /// Loses relative accuracy for high orders at small `t`, where large
    /// alternating coefficients cancel; see [`Self::eval_precise`].
    pub fn eval_f64(&self, t: f64) -> f64 {
        let x = (-t).exp();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }

    /// Exact Horner evaluation at an extended-precision `e^{-t}`.
    pub fn eval_rational(&self, t: f64, bits: u32) -> BigRational {
        let x = exp_neg(&rational_from_f64(t), bits);
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * &x + c)
    }

    /// Evaluation correct to double precision regardless of cancellation.
    pub fn eval_precise(&self, t: f64) -> f64 {
        if t == 0.0 {
            return rational_to_f64(&self.initial_value());
        }
        rational_to_f64(&self.eval_rational(t, 160))
    }
}

impl fmt::Display for ExpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}")?;
                    }
                    if i == 1 {
                        write!(f, "e^(-t)")?;
                    } else {
                        write!(f, "e^(-{i}t)")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Evaluates `p` at `t` in double precision (extended-precision internally).
pub fn eval_moment(p: &ExpPolynomial, t: f64) -> f64 {
    p.eval_precise(t)
}

/// Solved hierarchy `m_0, ..., m_K` for fixed `(alpha, c, a)`.
#[derive(Debug, Clone)]
pub struct MomentHierarchy {
    pub alpha: BigRational,
    pub c: BigRational,
    polys: Vec<ExpPolynomial>,
}

impl MomentHierarchy {
    /// `m_k`; index 0 is the constant 1.
    pub fn moment(&self, k: usize) -> &ExpPolynomial {
        &self.polys[k]
    }

    pub fn polys(&self) -> &[ExpPolynomial] {
        &self.polys
    }

    pub fn max_order(&self) -> usize {
        self.polys.len() - 1
    }

    /// `m_0(t), ..., m_K(t)` as doubles.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval_precise(t)).collect()
    }

    /// `m_0(t), ..., m_K(t)` as extended-precision rationals.
    pub fn eval_all_rational(&self, t: f64, bits: u32) -> Vec<BigRational> {
        self.polys.iter().map(|p| p.eval_rational(t, bits)).collect()
    }
}

/// Right-hand side forcing of the k-th equation built from lower orders:
/// `k (alpha + k - 1) m_{k-1} + k c sum_{i<k} m_i m_{k-1-i}`.
fn forcing(polys: &[ExpPolynomial], alpha: &BigRational, c: &BigRational, k: usize) -> ExpPolynomial {
    let kk = int(k as i64);
    let linear = polys[k - 1].scale(&(&kk * (alpha + int(k as i64 - 1))));
    let mut conv = ExpPolynomial::zero();
    // Symmetric convolution: pair (i, k-1-i) with its mirror.
    for i in 0..k {
        let j = k - 1 - i;
        if i > j {
            break;
        }
        let prod = polys[i].mul(&polys[j]);
        conv = conv.add(&if i == j { prod } else { prod.scale(&int(2)) });
    }
    linear.add(&conv.scale(&(&kk * c)))
}

/// Solves the hierarchy up to order `k_max` exactly.
///
/// `a[k-1]` is the initial moment `a_k`.
pub fn solve_hierarchy(
    alpha: &BigRational,
    c: &BigRational,
    a: &[BigRational],
    k_max: usize,
) -> Result<MomentHierarchy> {
    if a.len() < k_max {
        return Err(Error::Domain(format!(
            "need {k_max} initial moments, got {}",
            a.len()
        )));
    }
    let mut polys = vec![ExpPolynomial::constant(BigRational::one())];
    for k in 1..=k_max {
        let g = forcing(&polys, alpha, c, k);
        debug_assert!(g.degree() < k || g.is_zero());
        // m' = -k m + sum_j g_j e^{-jt}: particular part g_j / (k - j) e^{-jt};
        // the homogeneous e^{-kt} term fixes m_k(0) = a_k.
        let mut coeffs: Vec<BigRational> = (0..k)
            .map(|j| g.coeff(j) / int((k - j) as i64))
            .collect();
        let particular_at_zero = coeffs.iter().fold(BigRational::zero(), |acc, x| acc + x);
        coeffs.push(&a[k - 1] - particular_at_zero);
        polys.push(ExpPolynomial::new(coeffs));
    }
    Ok(MomentHierarchy {
        alpha: alpha.clone(),
        c: c.clone(),
        polys,
    })
}

/// Convenience front door for double-precision parameters; every `f64` is an
/// exact dyadic rational so no precision is lost.
pub fn solve_hierarchy_f64(alpha: f64, c: f64, a: &[f64], k_max: usize) -> Result<MomentHierarchy> {
    let a: Vec<BigRational> = a.iter().map(|&x| rational_from_f64(x)).collect();
    solve_hierarchy(&rational_from_f64(alpha), &rational_from_f64(c), &a, k_max)
}

/// `m_k' + k m_k - forcing_k`, which must be the zero exponential polynomial.
pub fn ode_residual(h: &MomentHierarchy, k: usize) -> ExpPolynomial {
    let m = h.moment(k);
    let lhs = m.derivative().add(&m.scale(&int(k as i64)));
    lhs.add(&forcing(h.polys(), &h.alpha, &h.c, k).scale(&int(-1)))
}

/// Finite moment sequence with `m[0] = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSequence<T = f64> {
    values: Vec<T>,
}

impl<T> MomentSequence<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl MomentSequence<f64> {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        match values.first() {
            Some(&m0) if (m0 - 1.0).abs() <= 1e-12 => Ok(Self { values }),
            _ => Err(Error::Domain("moment sequences start with m_0 = 1".into())),
        }
    }
}

impl MomentSequence<BigRational> {
    pub fn new_exact(values: Vec<BigRational>) -> Result<Self> {
        match values.first() {
            Some(m0) if m0.is_one() => Ok(Self { values }),
            _ => Err(Error::Domain("moment sequences start with m_0 = 1".into())),
        }
    }

    pub fn to_f64(&self) -> MomentSequence<f64> {
        MomentSequence {
            values: self.values.iter().map(rational_to_f64).collect(),
        }
    }
}

/// Extracts `C_{k,0}` from each solved moment and checks them against the
/// stationary recursion.
pub fn limiting_constants(h: &MomentHierarchy) -> Result<MomentSequence<BigRational>> {
    let extracted: Vec<BigRational> = h.polys().iter().map(ExpPolynomial::limit).collect();
    let recursion = crate::spectrum::self_convolutive_moments(&h.alpha, &h.c, h.max_order());
    if let Some(k) = (0..extracted.len()).find(|&k| extracted[k] != recursion.values()[k]) {
        return Err(Error::Consistency(format!(
            "C_{{{k},0}} = {} but the recursion gives {}",
            extracted[k],
            recursion.values()[k]
        )));
    }
    MomentSequence::new_exact(extracted)
}

/// Upper bounds `Lambda_1..=Lambda_K`, stored as logarithms so that very
/// high orders do not overflow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSequence {
    log_values: Vec<f64>,
}

impl BoundSequence {
    /// `Lambda_k` for `k >= 1`.
    pub fn value(&self, k: usize) -> f64 {
        self.log_values[k - 1].exp()
    }

    pub fn log_value(&self, k: usize) -> f64 {
        self.log_values[k - 1]
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    /// Checks `max_t m_k(t) <= Lambda_k` on `grid` for every order in both.
    pub fn check_conformance(&self, h: &MomentHierarchy, grid: &[f64]) -> Result<()> {
        for k in 1..=self.len().min(h.max_order()) {
            let bound = self.value(k);
            for &t in grid {
                let v = eval_moment(h.moment(k), t);
                if v > bound * (1.0 + 1e-12) {
                    return Err(Error::Consistency(format!(
                        "m_{k}({t}) = {v} exceeds Lambda_{k} = {bound}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `Lambda_1 = max(alpha + c, a_1)`, `Lambda_k = max((alpha + k - 1 + c k) Lambda_{k-1}, a_k)`.
///
/// Orders past the end of `a` treat `a_k` as zero.
pub fn lambda_bounds(alpha: f64, c: f64, a: &[f64], k_max: usize) -> BoundSequence {
    let log_a = |k: usize| a.get(k - 1).map_or(f64::NEG_INFINITY, |x| x.ln());
    let mut log_values = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let grown = if k == 1 {
            (alpha + c).ln()
        } else {
            (alpha + k as f64 - 1.0 + c * k as f64).ln() + log_values[k - 2]
        };
        log_values.push(grown.max(log_a(k)));
    }
    BoundSequence { log_values }
}

/// Partial sums of `Lambda_k^{-1/(2k)}`; divergence is the determinacy criterion.
pub fn carleman_diagnostic(bounds: &BoundSequence) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=bounds.len())
        .map(|k| {
            acc += (-bounds.log_value(k) / (2.0 * k as f64)).exp();
            acc
        })
        .collect()
}

/// Time grid for bound and product checks: uniform and geometric halves on `[0, 15]`.
pub fn conformance_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..128).map(|j| 15.0 * j as f64 / 127.0).collect();
    let (lo, hi) = (1e-4f64, 15.0f64);
    grid.extend((0..128).map(|j| lo * (hi / lo).powf(j as f64 / 127.0)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Result of a Hankel positivity test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdReport {
    pub passed: bool,
    /// Smallest eigenvalue seen across all tested matrices.
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue divided by the allowed slack `tol * trace / n`.
    pub worst_ratio: f64,
    /// Largest Hankel order tested.
    pub max_order: usize,
}

fn hankel_min_eig(m: &[f64], shift: usize, order: usize) -> (f64, f64) {
    let n = order + 1;
    let h = DMatrix::from_fn(n, n, |i, j| m[i + j + shift]);
    let trace = h.trace().abs();
    let min = SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (min, trace / n as f64)
}

/// Tests `(m_{i+j})` and `(m_{i+j+1})` for positive semidefiniteness at every
/// order the sequence supports.
pub fn hankel_psd_check(m: &[f64], tol: f64) -> PsdReport {
    let mut report = PsdReport {
        passed: true,
        min_eigenvalue: f64::INFINITY,
        worst_ratio: f64::INFINITY,
        max_order: 0,
    };
    if m.is_empty() {
        return report;
    }
    for shift in 0..2 {
        let mut order = 0;
        while 2 * order + shift < m.len() {
            let (min, scale) = hankel_min_eig(m, shift, order);
            let slack = tol * scale;
            report.min_eigenvalue = report.min_eigenvalue.min(min);
            if min < 0.0 {
                let ratio = if slack > 0.0 { min / slack } else { f64::NEG_INFINITY };
                report.worst_ratio = report.worst_ratio.min(ratio);
            }
            if min < -slack || !min.is_finite() {
                report.passed = false;
            }
            report.max_order = report.max_order.max(order);
            order += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(k: usize) -> Vec<BigRational> {
        vec![BigRational::one(); k]
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn worked_example_alpha_c_one() {
        let h = solve_hierarchy(&int(1), &int(1), &ones(5), 5).unwrap();
        assert_eq!(h.moment(1).coeffs(), ints(&[2, -1]).as_slice());
        assert_eq!(h.moment(2).coeffs(), ints(&[8, -8, 1]).as_slice());
        assert_eq!(h.moment(3).coeffs(), ints(&[44, -66, 18, 5]).as_slice());
        assert_eq!(h.moment(4).coeffs(), ints(&[296, -592, 256, 112, -71]).as_slice());
        assert_eq!(
            h.moment(5).coeffs(),
            ints(&[2312, -5780, 3460, 1880, -2530, 659]).as_slice()
        );
        // The m_4 constant is forced by m_4(0) = 1.
        assert_eq!(h.moment(4).initial_value(), int(1));
    }

    #[test]
    fn pure_relaxation_when_uncoupled() {
        let alpha = BigRational::new(3.into(), 2.into());
        let a1 = int(5);
        let h = solve_hierarchy(&alpha, &int(0), std::slice::from_ref(&a1), 1).unwrap();
        assert_eq!(h.moment(1).coeffs(), &[alpha.clone(), a1 - alpha]);
    }

    #[test]
    fn short_initial_data_is_rejected() {
        assert!(solve_hierarchy(&int(1), &int(1), &ones(2), 3).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let h = solve_hierarchy(&int(1), &int(1), &ones(2), 2).unwrap();
        assert_eq!(eval_moment(h.moment(1), 0.0), 1.0);
        assert!((eval_moment(h.moment(1), 60.0) - 2.0).abs() < 1e-15);
        assert!((eval_moment(h.moment(2), 2f64.ln()) - 4.25).abs() < 1e-14);
    }

    #[test]
    fn display_is_readable() {
        let h = solve_hierarchy(&int(1), &int(1), &ones(2), 2).unwrap();
        assert_eq!(h.moment(2).to_string(), "8 - 8e^(-t) + e^(-2t)");
        assert_eq!(ExpPolynomial::zero().to_string(), "0");
    }

    #[test]
    fn residual_vanishes() {
        let h = solve_hierarchy(&int(2), &int(3), &ones(6), 6).unwrap();
        for k in 1..=6 {
            assert!(ode_residual(&h, k).is_zero(), "k={k}");
        }
    }

    #[test]
    fn constants_match_recursion() {
        let h = solve_hierarchy(&int(1), &int(1), &ones(5), 5).unwrap();
        let c = limiting_constants(&h).unwrap();
        assert_eq!(c.values(), ints(&[1, 2, 8, 44, 296, 2312]).as_slice());
    }

    #[test]
    fn bounds_recursion() {
        let b = lambda_bounds(1.0, 1.0, &[1.0; 3], 3);
        assert!((b.value(1) - 2.0).abs() < 1e-12);
        assert!((b.value(2) - 8.0).abs() < 1e-12);
        assert!((b.value(3) - 48.0).abs() < 1e-12);
        let h = solve_hierarchy(&int(1), &int(1), &ones(3), 3).unwrap();
        b.check_conformance(&h, &conformance_grid()).unwrap();
    }

    #[test]
    fn large_initial_moment_dominates_bound() {
        let b = lambda_bounds(1.0, 1.0, &[10.0], 1);
        assert!((b.value(1) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn carleman_partial_sums() {
        let b = lambda_bounds(1.0, 1.0, &[1.0; 3], 3);
        let s = carleman_diagnostic(&b);
        let t1 = 2f64.powf(-0.5);
        let t2 = t1 + 8f64.powf(-0.25);
        let expected = [t1, t2, t2 + 48f64.powf(-1.0 / 6.0)];
        for (x, e) in s.iter().zip(expected) {
            assert!((x - e).abs() < 1e-6, "{x} vs {e}");
        }
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn carleman_divergence_trend() {
        let b = lambda_bounds(1.0, 1.0, &vec![1.0; 10_000], 10_000);
        let s = carleman_diagnostic(&b);
        assert!(s.last().unwrap() > &5.0);
    }

    #[test]
    fn psd_examples() {
        assert!(hankel_psd_check(&[1.0; 8], PSD_RELATIVE_TOL).passed);
        let nu = [1.0, 2.0, 8.0, 44.0, 296.0, 2312.0];
        assert!(hankel_psd_check(&nu, PSD_RELATIVE_TOL).passed);
        let bad = hankel_psd_check(&[1.0, 0.0, -1.0], PSD_RELATIVE_TOL);
        assert!(!bad.passed);
        assert!(bad.min_eigenvalue < 0.0);
    }

    #[test]
    fn grid_covers_both_scales() {
        let g = conformance_grid();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 15.0);
        assert!(g.len() >= 250);
        assert!(g.iter().any(|&t| t > 0.0 && t < 1e-3));
    }
}
