//! The high-temperature limit measure `nu_{alpha,c}`.
//!
//! Three routes to the same moments: the self-convolutive recursion, powers
//! of the Jacobi operator `J = L L^T`, and Gaussian quadrature from its
//! truncations. A Chebyshev-algorithm inversion takes a moment sequence back
//! to a Jacobi operator, which represents `mu_t` at fixed `t`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{int, rational_from_f64, rational_to_f64, round_bits};
use crate::hierarchy::MomentSequence;

/// Bits carried through the moment-to-recurrence inversion (beyond quad-double).
pub const RECURRENCE_PRECISION_BITS: u32 = 256;

/// Default quadrature size for density pictures and CDF comparisons.
pub const DEFAULT_QUADRATURE_SIZE: usize = 400;

/// `u_0 = 1`, `u_k = (alpha + k - 1) u_{k-1} + c sum_{i<k} u_i u_{k-1-i}`.
pub fn self_convolutive_moments(
    alpha: &BigRational,
    c: &BigRational,
    k_max: usize,
) -> MomentSequence<BigRational> {
    let mut u: Vec<BigRational> = vec![BigRational::one()];
    for k in 1..=k_max {
        let mut conv = BigRational::zero();
        for i in 0..k {
            conv += &u[i] * &u[k - 1 - i];
        }
        let next = (alpha + int(k as i64 - 1)) * &u[k - 1] + c * conv;
        u.push(next);
    }
    MomentSequence::new_exact(u).expect("u_0 = 1")
}

pub fn self_convolutive_moments_f64(alpha: f64, c: f64, k_max: usize) -> Vec<f64> {
    let mut u = vec![1.0];
    for k in 1..=k_max {
        let conv: f64 = (0..k).map(|i| u[i] * u[k - 1 - i]).sum();
        u.push((alpha + k as f64 - 1.0) * u[k - 1] + c * conv);
    }
    u
}

/// Symmetric tridiagonal operator (finite truncation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiOperator {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiOperator {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::Domain(format!(
                "need n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        if let Some(b) = offdiag.iter().find(|&&b| !(b > 0.0)) {
            return Err(Error::Domain(format!("off-diagonal entries must be positive, got {b}")));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Leading `n x n` block.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.size() {
            return Err(Error::Domain(format!(
                "cannot truncate a size-{} operator to {n}",
                self.size()
            )));
        }
        Ok(Self {
            diag: self.diag[..n].to_vec(),
            offdiag: self.offdiag[..n - 1].to_vec(),
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.offdiag[i]
            } else if j + 1 == i {
                self.offdiag[j]
            } else {
                0.0
            }
        })
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.size();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.offdiag[i] * v[i + 1];
            }
            out[i] = s;
        }
    }
}

/// Squared entries of `J_{alpha,c}`, exact: `(diagonal, offdiagonal^2)`.
///
/// With `L[k][k] = sqrt(alpha + c + k - 1)` and `L[k][k-1] = sqrt(c + k - 1)`
/// (1-based), `J = L L^T` has `J[k][k] = L[k][k]^2 + L[k][k-1]^2` and
/// `J[k][k+1]^2 = L[k+1][k]^2 L[k][k]^2`.
pub fn jacobi_entries_exact(
    alpha: &BigRational,
    c: &BigRational,
    n: usize,
) -> (Vec<BigRational>, Vec<BigRational>) {
    let ac = alpha + c;
    let diag = (1..=n)
        .map(|k| {
            let main = &ac + int(k as i64 - 1);
            if k == 1 {
                main
            } else {
                main + c + int(k as i64 - 1)
            }
        })
        .collect();
    let off_sq = (1..n)
        .map(|k| (c + int(k as i64)) * (&ac + int(k as i64 - 1)))
        .collect();
    (diag, off_sq)
}

fn check_limit_params(alpha: f64, c: f64) -> Result<()> {
    if !(alpha > 0.5 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must exceed 1/2, got {alpha}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// The `n x n` truncation of `J_{alpha,c}` assembled from its bidiagonal factor.
pub fn build_jacobi(alpha: f64, c: f64, n: usize) -> Result<JacobiOperator> {
    check_limit_params(alpha, c)?;
    if n == 0 {
        return Err(Error::Domain("Jacobi truncation needs n >= 1".into()));
    }
    let l_diag: Vec<f64> = (0..n).map(|k| (alpha + c + k as f64).sqrt()).collect();
    // l_sub[k] sits at row k + 1, column k.
    let l_sub: Vec<f64> = (0..n - 1).map(|k| (c + k as f64 + 1.0).sqrt()).collect();
    let diag = (0..n)
        .map(|k| {
            let below = if k == 0 { 0.0 } else { l_sub[k - 1] * l_sub[k - 1] };
            l_diag[k] * l_diag[k] + below
        })
        .collect();
    let offdiag = (0..n - 1).map(|k| l_sub[k] * l_diag[k]).collect();
    JacobiOperator::new(diag, offdiag)
}

/// `(J^k)(1,1)` by repeated application to the first basis vector.
///
/// The band structure makes the leading `floor(k/2) + 1` block sufficient.
pub fn jacobi_moment(j: &JacobiOperator, k: usize) -> Result<f64> {
    let needed = k / 2 + 1;
    if j.size() < needed {
        return Err(Error::Domain(format!(
            "(J^{k})(1,1) needs a truncation of size {needed}, got {}",
            j.size()
        )));
    }
    let n = j.size().min(needed + 1);
    let j = j.truncate(n)?;
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    let mut w = vec![0.0; n];
    // Apply k/2 times from each side: (J^k)_{11} = <J^{k/2} e1, J^{k - k/2} e1>.
    let half = k / 2;
    for _ in 0..half {
        j.apply(&v, &mut w);
        std::mem::swap(&mut v, &mut w);
    }
    // k - half is half or half + 1.
    let right = if k % 2 == 1 {
        j.apply(&v, &mut w);
        &w
    } else {
        &v
    };
    Ok(v.iter().zip(right).map(|(a, b)| a * b).sum())
}

/// `(J_{alpha,c}^k)(1,1)` for `k = 0..=k_max`, exact, by summing weighted
/// Motzkin paths (each off-diagonal is traversed up and down, so only its
/// square enters).
pub fn jacobi_moments_exact(alpha: &BigRational, c: &BigRational, k_max: usize) -> Vec<BigRational> {
    let levels = k_max / 2 + 1;
    let (diag, off_sq) = jacobi_entries_exact(alpha, c, levels + 1);
    // paths[l] = weighted count of paths of the current length from level 0 to level l,
    // where reaching level l from l+1 contributes off_sq[l].
    let mut paths = vec![BigRational::zero(); levels + 1];
    paths[0] = BigRational::one();
    let mut out = vec![BigRational::one()];
    for _ in 1..=k_max {
        let mut next = vec![BigRational::zero(); levels + 1];
        for l in 0..=levels {
            if paths[l].is_zero() {
                continue;
            }
            next[l] += &paths[l] * &diag[l];
            if l < levels {
                next[l + 1] += &paths[l];
            }
            if l > 0 {
                next[l - 1] += &paths[l] * &off_sq[l - 1];
            }
        }
        paths = next;
        out.push(paths[0].clone());
    }
    out
}

/// Nonnegative atoms with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Sorts atoms and clamps round-off negatives; rejects bad weights.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::Domain("nodes and weights must be nonempty and equal length".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        if nodes.iter().any(|&x| !(x >= -crate::model::CLAMP_TOLERANCE)) {
            return Err(Error::Domain("nodes must be nonnegative".into()));
        }
        let mut atoms: Vec<(f64, f64)> = nodes.into_iter().map(|x| x.max(0.0)).zip(weights).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = atoms.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    /// Uniform weights on the given points.
    pub fn empirical(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let mut weights = vec![w; points.len()];
        // Exact normalization regardless of rounding in 1/N.
        let excess: f64 = weights.iter().sum::<f64>() - 1.0;
        if let Some(last) = weights.last_mut() {
            *last -= excess;
        }
        Self::new(points.to_vec(), weights)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * x.powi(k as i32))
            .sum()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.nodes.partition_point(|&n| n <= x);
        self.weights[..idx].iter().sum::<f64>().min(1.0)
    }

    /// `sum w_i / (x_i - z)`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w / (x - z))
            .sum()
    }

    pub fn mean_and_std(&self) -> (f64, f64) {
        let mean = self.moment(1);
        let var = (self.moment(2) - mean * mean).max(0.0);
        (mean, var.sqrt())
    }

    /// Continuous CDF through the jump midpoints, anchored at `(0, 0)` and one
    /// node spacing past the last atom.
    pub fn interpolated_cdf(&self, x: f64) -> f64 {
        let knots = self.midpoint_knots();
        if x <= knots[0].0 {
            return 0.0;
        }
        let last = knots[knots.len() - 1];
        if x >= last.0 {
            return 1.0;
        }
        let i = knots.partition_point(|k| k.0 <= x);
        let (x0, y0) = knots[i - 1];
        let (x1, y1) = knots[i];
        if x1 == x0 {
            y1
        } else {
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }

    fn midpoint_knots(&self) -> Vec<(f64, f64)> {
        let mut knots = Vec::with_capacity(self.len() + 2);
        knots.push((0.0f64.min(self.nodes[0]), 0.0));
        let mut below = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            knots.push((x, below + w / 2.0));
            below += w;
        }
        let n = self.len();
        let spacing = if n > 1 {
            self.nodes[n - 1] - self.nodes[n - 2]
        } else {
            self.nodes[0].max(1.0)
        };
        knots.push((self.nodes[n - 1] + spacing.max(f64::MIN_POSITIVE), 1.0));
        knots
    }

    /// Gaussian kernel smoothing with bandwidth `1.06 sigma n^{-1/5}` by default.
    pub fn smoothed_density(&self, x: f64, bandwidth: Option<f64>) -> f64 {
        let h = bandwidth.unwrap_or_else(|| {
            let (_, sigma) = self.mean_and_std();
            1.06 * sigma * (self.len() as f64).powf(-0.2)
        });
        let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&xi, &w)| {
                let u = (x - xi) / h;
                w * norm * (-0.5 * u * u).exp()
            })
            .sum()
    }
}

/// Sup distance between right-continuous step CDFs.
pub fn kolmogorov_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut sup = 0.0f64;
    while i < a.len() || j < b.len() {
        let x = match (a.nodes.get(i), b.nodes.get(j)) {
            (Some(&xa), Some(&xb)) => xa.min(xb),
            (Some(&xa), None) => xa,
            (None, Some(&xb)) => xb,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a.nodes[i] == x {
            fa += a.weights[i];
            i += 1;
        }
        while j < b.len() && b.nodes[j] == x {
            fb += b.weights[j];
            j += 1;
        }
        sup = sup.max((fa - fb).abs());
    }
    sup
}

/// Sup distance between the continuous midpoint-interpolated CDFs.
///
/// Both CDFs are piecewise linear, so the sup is attained at a knot of one of them.
pub fn interpolated_kolmogorov_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    a.midpoint_knots()
        .iter()
        .chain(b.midpoint_knots().iter())
        .map(|&(x, _)| (a.interpolated_cdf(x) - b.interpolated_cdf(x)).abs())
        .fold(0.0, f64::max)
}

/// Gaussian quadrature of the leading `n x n` block: eigenvalues as nodes,
/// squared first eigenvector components as weights.
pub fn quadrature_from_jacobi(j: &JacobiOperator, n: usize) -> Result<DiscreteMeasure> {
    let block = j.truncate(n)?;
    let eig = SymmetricEigen::try_new(block.to_dense(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("no convergence for size {n}")))?;
    let nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut weights: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(0, i)].powi(2)).collect();
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && (total - 1.0).abs() < 1e-10) {
        return Err(Error::Eigen(format!("first components have squared norm {total}")));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    DiscreteMeasure::new(nodes, weights)
}

/// `(J - z)^{-1}(1,1)` of a truncation by backward continued fraction.
pub fn resolvent(j: &JacobiOperator, z: Complex64) -> Complex64 {
    let n = j.size();
    let mut tail = Complex64::new(j.diag[n - 1], 0.0) - z;
    for k in (0..n - 1).rev() {
        let b2 = j.offdiag[k] * j.offdiag[k];
        tail = Complex64::new(j.diag[k], 0.0) - z - b2 / tail;
    }
    1.0 / tail
}

/// Stieltjes transform of `nu_{alpha,c}` approximated at continued-fraction depth `depth`.
pub fn stieltjes_resolvent(alpha: f64, c: f64, z: Complex64, depth: usize) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::Domain("z must be off the real axis".into()));
    }
    let j = build_jacobi(alpha, c, depth.max(1))?;
    Ok(resolvent(&j, z))
}

/// Jacobi operator recovered from moments, with a conditioning estimate.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveredRecurrence {
    pub jacobi: JacobiOperator,
    /// Decimal digits of the input moments consumed by the Hankel factorization.
    pub digits_lost: f64,
}

/// Three-term recurrence from double-precision moments `m_0..m_{2n}`.
///
/// The inputs are converted exactly and the factorization runs at
/// [`RECURRENCE_PRECISION_BITS`]; the conditioning budget is the 53-bit input.
pub fn recurrence_from_moments(m: &MomentSequence<f64>) -> Result<RecoveredRecurrence> {
    let exact: Vec<BigRational> = m.values().iter().map(|&x| rational_from_f64(x)).collect();
    chebyshev_algorithm(&exact, f64::MANTISSA_DIGITS)
}

/// Same as [`recurrence_from_moments`] for moments known to `input_bits` bits.
pub fn recurrence_from_exact_moments(m: &[BigRational], input_bits: u32) -> Result<RecoveredRecurrence> {
    chebyshev_algorithm(m, input_bits)
}

fn chebyshev_algorithm(m: &[BigRational], input_bits: u32) -> Result<RecoveredRecurrence> {
    if m.len() < 3 {
        return Err(Error::Domain("need at least m_0, m_1, m_2".into()));
    }
    if !m[0].is_positive() {
        return Err(Error::Domain("m_0 must be positive".into()));
    }
    let n = (m.len() - 1) / 2;
    let prec = RECURRENCE_PRECISION_BITS;
    let r = |x: BigRational| round_bits(&x, prec);
    let available = input_bits as f64 * std::f64::consts::LOG10_2;

    let mut a: Vec<BigRational> = Vec::with_capacity(n);
    let mut b: Vec<BigRational> = Vec::with_capacity(n);
    // sigma[k][l] = integral of pi_k x^l, l = k..2n-k-1.
    let width = 2 * n;
    let mut prev: Vec<BigRational> = vec![BigRational::zero(); width];
    let mut cur: Vec<BigRational> = m[..width].to_vec();
    a.push(r(&m[1] / &m[0]));
    b.push(m[0].clone());
    let mut digits_lost = 0.0f64;
    for k in 1..n {
        let mut next = vec![BigRational::zero(); width];
        for l in k..(width - k) {
            next[l] = r(&cur[l + 1] - &a[k - 1] * &cur[l] - &b[k - 1] * &prev[l]);
        }
        if !next[k].is_positive() {
            return Err(Error::Conditioning {
                digits_lost: f64::INFINITY,
                available,
            });
        }
        let ak = r(&next[k + 1] / &next[k] - &cur[k] / &cur[k - 1]);
        let bk = r(&next[k] / &cur[k - 1]);
        // Relative size of the k-th Cholesky pivot of the Hankel matrix.
        let lost = (rational_to_f64(&m[2 * k]).log10() - big_log10(&next[k])).max(0.0);
        digits_lost = digits_lost.max(lost);
        a.push(ak);
        b.push(bk);
        prev = cur;
        cur = next;
    }
    if digits_lost >= available {
        return Err(Error::Conditioning {
            digits_lost,
            available,
        });
    }
    let diag = a.iter().map(rational_to_f64).collect();
    let offdiag = b[1..].iter().map(|x| rational_to_f64(x).sqrt()).collect();
    Ok(RecoveredRecurrence {
        jacobi: JacobiOperator::new(diag, offdiag)?,
        digits_lost,
    })
}

fn big_log10(x: &BigRational) -> f64 {
    let v = rational_to_f64(x);
    if v > 0.0 && v.is_finite() {
        return v.log10();
    }
    // Out of f64 range: use bit lengths.
    let bits = x.numer().bits() as f64 - x.denom().bits() as f64;
    bits * std::f64::consts::LOG10_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn self_convolutive_alpha_c_one() {
        let u = self_convolutive_moments(&int(1), &int(1), 5);
        assert_eq!(u.values(), ints(&[1, 2, 8, 44, 296, 2312]).as_slice());
    }

    #[test]
    fn self_convolutive_first_moment_and_gamma_limit() {
        let alpha = BigRational::new(7.into(), 3.into());
        let c = BigRational::new(2.into(), 5.into());
        let u = self_convolutive_moments(&alpha, &c, 1);
        assert_eq!(u.values()[1], &alpha + &c);
        let g = self_convolutive_moments(&alpha, &BigRational::zero(), 4);
        let mut pochhammer = BigRational::one();
        for k in 0..4 {
            pochhammer *= &alpha + int(k);
            assert_eq!(g.values()[k as usize + 1], pochhammer);
        }
    }

    #[test]
    fn jacobi_entries() {
        let j = build_jacobi(1.0, 1.0, 3).unwrap();
        assert!((j.diag()[0] - 2.0).abs() < 1e-14);
        assert!((j.diag()[1] - 5.0).abs() < 1e-14);
        assert!((j.offdiag()[0] - 2.0).abs() < 1e-14);
        assert!(build_jacobi(0.5, 1.0, 3).is_err());
        assert!(build_jacobi(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn jacobi_moments_small() {
        let j = build_jacobi(1.0, 1.0, 4).unwrap();
        assert_eq!(jacobi_moment(&j, 0).unwrap(), 1.0);
        assert!((jacobi_moment(&j, 1).unwrap() - 2.0).abs() < 1e-14);
        assert!((jacobi_moment(&j, 5).unwrap() - 2312.0).abs() < 1e-9);
        assert!(jacobi_moment(&j, 8).is_err());
        assert_eq!(
            jacobi_moments_exact(&int(1), &int(1), 5),
            ints(&[1, 2, 8, 44, 296, 2312])
        );
    }

    #[test]
    fn one_point_quadrature() {
        let q = quadrature_from_jacobi(&build_jacobi(1.0, 1.0, 5).unwrap(), 1).unwrap();
        assert!((q.nodes()[0] - 2.0).abs() < 1e-14);
        assert_eq!(q.weights(), &[1.0]);
    }

    #[test]
    fn quadrature_weights_and_mean() {
        let j = build_jacobi(1.0, 1.0, 10).unwrap();
        for n in 1..=10 {
            let q = quadrature_from_jacobi(&j, n).unwrap();
            assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((q.moment(1) - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn resolvent_agrees_with_quadrature() {
        let j = build_jacobi(1.5, 0.5, 12).unwrap();
        let q = quadrature_from_jacobi(&j, 12).unwrap();
        for z in [Complex64::new(1.0, 0.5), Complex64::new(-3.0, 2.0), Complex64::new(20.0, -1.0)] {
            let a = resolvent(&j, z);
            let b = q.stieltjes(z);
            assert!((a - b).norm() < 1e-10 * b.norm(), "{a} vs {b}");
        }
        assert!(stieltjes_resolvent(1.0, 1.0, Complex64::new(1.0, 0.0), 5).is_err());
    }

    #[test]
    fn point_mass_recurrence() {
        let m = MomentSequence::new(vec![1.0, 1.0, 1.0]).unwrap();
        let rec = recurrence_from_moments(&m).unwrap();
        assert_eq!(rec.jacobi.diag(), &[1.0]);
        assert!(rec.jacobi.offdiag().is_empty());
    }

    #[test]
    fn recurrence_rejects_indefinite_moments() {
        let m = MomentSequence::new(vec![1.0, 1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(recurrence_from_moments(&m), Err(Error::Conditioning { .. })));
    }

    #[test]
    fn kolmogorov_between_steps() {
        let a = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::new(vec![0.5], vec![1.0]).unwrap();
        assert_eq!(kolmogorov_distance(&a, &b), 0.5);
        assert_eq!(kolmogorov_distance(&a, &a), 0.0);
        let shifted = DiscreteMeasure::new(vec![1e-9, 1.0 + 1e-9], vec![0.5, 0.5]).unwrap();
        assert_eq!(kolmogorov_distance(&a, &shifted), 0.5);
        assert!(interpolated_kolmogorov_distance(&a, &shifted) < 1e-6);
    }

    #[test]
    fn discrete_measure_validation() {
        assert!(DiscreteMeasure::new(vec![1.0], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(vec![-1.0], vec![1.0]).is_err());
        let m = DiscreteMeasure::new(vec![-1e-12, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.nodes()[0], 0.0);
        assert_eq!(m.cdf(1.0), 0.5);
        assert_eq!(m.cdf(2.0), 1.0);
    }

    #[test]
    fn density_integrates_to_one() {
        let q = quadrature_from_jacobi(&build_jacobi(1.0, 1.0, 60).unwrap(), 60).unwrap();
        let h = 0.01;
        let total: f64 = (0..20_000).map(|i| q.smoothed_density(-20.0 + i as f64 * h, None) * h).sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
