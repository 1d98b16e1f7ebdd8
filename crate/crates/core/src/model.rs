//! Shared domain types: model parameters, ensemble states, initial data and
//! moment traces.
//!
//! The high-temperature coupling ties the inverse temperature to the system
//! size through `beta = 2c / N`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries more negative than this are treated as a broken integration step
/// rather than round-off.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Parameters `(alpha, c, N)` with the derived `beta = 2c / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    alpha: f64,
    c: f64,
    n_particles: usize,
    beta: f64,
}

impl ModelParams {
    /// Validates the parameter triple.
    ///
    /// Requires `alpha > 1/2`, `c > 0` and `n >= 1`.
    pub fn new(alpha: f64, c: f64, n: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.5) {
            return Err(Error::Domain(format!("alpha must exceed 1/2, got {alpha}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("c must be positive, got {c}")));
        }
        if n < 1 {
            return Err(Error::Domain("n_particles must be at least 1".into()));
        }
        Ok(Self {
            alpha,
            c,
            n_particles: n,
            beta: 2.0 * c / n as f64,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Multiplicity of the short roots of the type-B radial process, `alpha - 1/2`.
    pub fn k1(&self) -> f64 {
        self.alpha - 0.5
    }

    /// Multiplicity of the long roots, `beta / 2`.
    pub fn k2(&self) -> f64 {
        self.beta / 2.0
    }

    /// Same `alpha` and `c`, different system size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.alpha, self.c, n)
    }
}

/// Convenience wrapper matching the operation name used throughout the docs.
pub fn validate_params(alpha: f64, c: f64, n: usize) -> Result<ModelParams> {
    ModelParams::new(alpha, c, n)
}

/// A time-stamped particle configuration `0 <= lambda_1 <= ... <= lambda_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    time: f64,
    lambdas: Vec<f64>,
}

impl EnsembleState {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn into_lambdas(self) -> Vec<f64> {
        self.lambdas
    }

    /// Empirical moment `(1/N) sum lambda_i^k`.
    pub fn moment(&self, k: u32) -> f64 {
        if self.lambdas.is_empty() {
            return 0.0;
        }
        let s: f64 = self.lambdas.iter().map(|x| x.powi(k as i32)).sum();
        s / self.lambdas.len() as f64
    }

    /// Empirical moments of orders `0..=k_max`.
    pub fn moments(&self, k_max: usize) -> Vec<f64> {
        let n = self.lambdas.len() as f64;
        let mut sums = vec![0.0; k_max + 1];
        for &x in &self.lambdas {
            let mut p = 1.0;
            for s in sums.iter_mut() {
                *s += p;
                p *= x;
            }
        }
        sums.iter_mut().for_each(|s| *s /= n);
        sums[0] = 1.0;
        sums
    }

    pub(crate) fn check_invariants(&self) -> bool {
        self.lambdas.iter().all(|&x| x >= 0.0)
            && self.lambdas.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Clamps round-off negatives to zero and sorts ascending.
///
/// Any entry below `-CLAMP_TOLERANCE` (or non-finite) is rejected.
pub fn normalize_state(raw: Vec<f64>, t: f64) -> Result<EnsembleState> {
    let mut lambdas = raw;
    for (i, x) in lambdas.iter_mut().enumerate() {
        if !x.is_finite() {
            return Err(Error::Integration(format!("particle {i} is not finite ({x})")));
        }
        if *x < 0.0 {
            if *x < -CLAMP_TOLERANCE {
                return Err(Error::Integration(format!(
                    "particle {i} is negative ({x}) beyond the clamp tolerance"
                )));
            }
            *x = 0.0;
        }
    }
    lambdas.sort_by(f64::total_cmp);
    let state = EnsembleState { time: t, lambdas };
    debug_assert!(state.check_invariants());
    Ok(state)
}

/// Distribution used to place initial particles deterministically at the
/// quantiles `(i - 1/2) / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDistribution {
    PointMass { at: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InitialDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::PointMass { at } if at.is_finite() && at >= 0.0 => Ok(()),
            Self::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi => {
                Ok(())
            }
            other => Err(Error::Domain(format!("invalid initial distribution {other:?}"))),
        }
    }

    /// k-th moment, exact in rational arithmetic (every f64 is a dyadic rational).
    pub fn moment_exact(&self, k: usize) -> BigRational {
        match *self {
            Self::PointMass { at } => pow_rational(&crate::exact::rational_from_f64(at), k),
            Self::Uniform { lo, hi } => {
                // (hi^{k+1} - lo^{k+1}) / ((k+1)(hi - lo))
                let lo = crate::exact::rational_from_f64(lo);
                let hi = crate::exact::rational_from_f64(hi);
                let num = pow_rational(&hi, k + 1) - pow_rational(&lo, k + 1);
                let den = BigRational::from_integer((k as i64 + 1).into()) * (&hi - &lo);
                num / den
            }
        }
    }

    pub fn moment(&self, k: usize) -> f64 {
        crate::exact::rational_to_f64(&self.moment_exact(k))
    }

    fn quantile(&self, p: f64) -> f64 {
        match *self {
            Self::PointMass { at } => at,
            Self::Uniform { lo, hi } => lo + p * (hi - lo),
        }
    }

    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.quantile((i as f64 + 0.5) / n as f64))
            .collect()
    }
}

fn pow_rational(x: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}

/// Initial particle configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Explicit sorted nonnegative configuration.
    ExplicitLambdas(Vec<f64>),
    /// Limiting moments `a_1, a_2, ...` together with the distribution the
    /// particles are placed from.
    TargetMoments {
        moments: Vec<f64>,
        distribution: InitialDistribution,
    },
}

impl InitialCondition {
    /// Point mass at `x`, carrying its first `k_max` moments.
    pub fn point_mass(x: f64, k_max: usize) -> Self {
        Self::from_distribution(InitialDistribution::PointMass { at: x }, k_max)
    }

    pub fn from_distribution(distribution: InitialDistribution, k_max: usize) -> Self {
        let moments = (1..=k_max).map(|k| distribution.moment(k)).collect();
        Self::TargetMoments {
            moments,
            distribution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ExplicitLambdas(l) => {
                if l.is_empty() {
                    return Err(Error::Domain("empty initial configuration".into()));
                }
                if l.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                    return Err(Error::Domain("initial lambdas must be nonnegative".into()));
                }
                if l.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Domain("initial lambdas must be sorted".into()));
                }
                Ok(())
            }
            Self::TargetMoments {
                moments,
                distribution,
            } => {
                distribution.validate()?;
                let mut seq = Vec::with_capacity(moments.len() + 1);
                seq.push(1.0);
                seq.extend_from_slice(moments);
                let report = crate::hierarchy::hankel_psd_check(&seq, crate::hierarchy::PSD_RELATIVE_TOL);
                if !report.passed {
                    return Err(Error::Domain(format!(
                        "initial moments fail the Stieltjes Hankel test (min eigenvalue {:e})",
                        report.min_eigenvalue
                    )));
                }
                for (k, &a) in moments.iter().enumerate() {
                    let exact = distribution.moment(k + 1);
                    if (a - exact).abs() > 1e-9 * exact.abs().max(1.0) {
                        return Err(Error::Domain(format!(
                            "target moment a_{} = {a} does not match the distribution ({exact})",
                            k + 1
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Initial state for `n` particles.
    pub fn realize(&self, n: usize) -> Result<EnsembleState> {
        self.validate()?;
        match self {
            Self::ExplicitLambdas(l) => {
                if l.len() != n {
                    return Err(Error::Domain(format!(
                        "initial configuration has {} particles, expected {n}",
                        l.len()
                    )));
                }
                normalize_state(l.clone(), 0.0)
            }
            Self::TargetMoments { distribution, .. } => normalize_state(distribution.sample(n), 0.0),
        }
    }

    /// Exact limiting initial moments `a_1..=a_k_max` for the analytic hierarchy.
    ///
    /// For explicit configurations these are the empirical moments of the
    /// configuration itself.
    pub fn exact_moments(&self, k_max: usize) -> Vec<BigRational> {
        match self {
            Self::ExplicitLambdas(l) => {
                let n = BigRational::from_integer((l.len() as i64).into());
                let xs: Vec<BigRational> = l.iter().map(|&x| crate::exact::rational_from_f64(x)).collect();
                (1..=k_max)
                    .map(|k| {
                        let s = xs
                            .iter()
                            .fold(BigRational::zero(), |acc, x| acc + pow_rational(x, k));
                        s / &n
                    })
                    .collect()
            }
            Self::TargetMoments { distribution, .. } => {
                (1..=k_max).map(|k| distribution.moment_exact(k)).collect()
            }
        }
    }
}

/// Moment values on a time grid, `values[k][j] = S_k(grid[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrace {
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl MomentTrace {
    pub fn new(grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("time grid must be strictly increasing".into()));
        }
        if values.iter().any(|row| row.len() != grid.len()) {
            return Err(Error::Domain("trace rows must match the grid length".into()));
        }
        Ok(Self { grid, values })
    }

    /// Highest order stored.
    pub fn max_order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn order(&self, k: usize) -> Option<&[f64]> {
        self.values.get(k).map(Vec::as_slice)
    }
}

/// Uniform grid `0, dt_grid, ..., t_max` with `steps + 1` points.
pub fn uniform_grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|j| t_max * j as f64 / steps as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_from_coupling() {
        let p = validate_params(1.0, 1.0, 100).unwrap();
        assert_eq!(p.beta(), 0.02);
        assert_eq!(validate_params(1.0, 1.0, 1).unwrap().beta(), 2.0);
        assert!(validate_params(0.5, 1.0, 10).is_err());
        assert!(validate_params(1.0, 0.0, 10).is_err());
        assert!(validate_params(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn dunkl_multiplicities() {
        let p = validate_params(1.5, 2.0, 4).unwrap();
        assert_eq!(p.k1(), 1.0);
        assert_eq!(p.k2(), 0.5);
    }

    #[test]
    fn normalize_sorts_and_clamps() {
        assert_eq!(normalize_state(vec![2.0, 1.0, 3.0], 0.0).unwrap().lambdas(), &[1.0, 2.0, 3.0]);
        assert_eq!(normalize_state(vec![-1e-15, 1.0], 0.0).unwrap().lambdas(), &[0.0, 1.0]);
        assert!(normalize_state(vec![-0.5, 1.0], 0.0).is_err());
        assert!(normalize_state(vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn uniform_moments_exact() {
        let d = InitialDistribution::Uniform { lo: 0.0, hi: 2.0 };
        // 2^k / (k+1)
        assert_eq!(d.moment(3), 2.0);
        assert_eq!(d.moment(1), 1.0);
    }

    #[test]
    fn target_moments_must_match_distribution() {
        let bad = InitialCondition::TargetMoments {
            moments: vec![1.0, 2.0],
            distribution: InitialDistribution::PointMass { at: 1.0 },
        };
        assert!(bad.validate().is_err());
        assert!(InitialCondition::point_mass(1.0, 6).validate().is_ok());
    }

    #[test]
    fn explicit_must_be_sorted() {
        assert!(InitialCondition::ExplicitLambdas(vec![2.0, 1.0]).validate().is_err());
        let s = InitialCondition::ExplicitLambdas(vec![0.0, 1.0]).realize(2).unwrap();
        assert_eq!(s.moments(2), vec![1.0, 0.5, 0.5]);
    }
}
