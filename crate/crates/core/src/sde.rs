//! Euler-type integrators for the beta Laguerre particle system.
//!
//! Two discretizations are provided:
//!
//! * [`Scheme::DirectLambda`]: full-truncation Euler-Maruyama on
//!   `d lambda_i = sqrt(2 lambda_i) db_i + (alpha - lambda_i + beta lambda_i sum_{j != i} 1/(lambda_i - lambda_j)) dt`.
//! * [`Scheme::RadialSquare`]: Euler-Maruyama with additive noise on the
//!   type-B radial process `X_i = sqrt(2 lambda_i)`, reflected at zero.
//!
//! Both share one O(N^2) kernel for the regularized pairwise Cauchy sums. Steps that
//! would push a particle negative or move it by more than
//! `step_fraction * (1 + lambda_i)` are split in half and retried.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_state, EnsembleState, InitialCondition, ModelParams, MomentTrace};
use crate::noise::NoiseStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    DirectLambda,
    RadialSquare,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct_lambda" | "direct" => Ok(Self::DirectLambda),
            "radial_square" | "radial" => Ok(Self::RadialSquare),
            other => Err(Error::Domain(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Discretization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Largest step used between grid points.
    pub dt: f64,
    pub scheme: Scheme,
    /// Relative denominator floor; the absolute floor is `denom_epsilon * (1 + mean lambda)`.
    pub denom_epsilon: f64,
    /// Maximum number of successive halvings of a rejected step.
    pub max_substeps: u32,
    /// A particle may move at most `step_fraction * (1 + lambda_i)` per substep.
    pub step_fraction: f64,
    pub seed: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::DirectLambda,
            denom_epsilon: 1e-12,
            max_substeps: 24,
            step_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.denom_epsilon > 0.0) {
            return Err(Error::Domain("denom_epsilon must be positive".into()));
        }
        if self.max_substeps < 1 {
            return Err(Error::Domain("max_substeps must be at least 1".into()));
        }
        if !(self.step_fraction > 0.0) {
            return Err(Error::Domain("step_fraction must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn absolute_epsilon(lambdas: &[f64], relative: f64) -> f64 {
    let mean = lambdas.iter().sum::<f64>() / lambdas.len().max(1) as f64;
    relative * (1.0 + mean)
}

/// Denominator floor for a step of size `h`.
///
/// Besides the configured floor, separations are floored at
/// `beta * sqrt(h * lambda_max / 2)`: below that scale one pair's repulsion
/// would displace a particle by more than the step's noise. For `beta < 1`
/// particles do meet, and without this floor the explicit step turns every
/// near-collision into an O(1) kick that biases even moments upward at a rate
/// independent of `h`. The floor vanishes as `h -> 0`.
fn step_epsilon(lambdas: &[f64], params: &ModelParams, config: &SchemeConfig, h: f64) -> f64 {
    let l_max = lambdas.last().copied().unwrap_or(0.0).max(0.0);
    let noise_scale = params.beta() * (0.5 * h * l_max).sqrt();
    absolute_epsilon(lambdas, config.denom_epsilon).max(noise_scale)
}

/// `acc[i] = sum_{j != i} 1 / (x_i - x_j)` for ascending `x`, each
/// denominator replaced by `sign(x_i - x_j) max(|x_i - x_j|, eps)`.
///
/// Tied particles are ordered by index, so the pair force stays
/// antisymmetric and finite.
fn cauchy_sums(x: &[f64], eps: f64, acc: &mut [f64]) {
    let n = x.len();
    acc.iter_mut().for_each(|a| *a = 0.0);
    for i in 0..n {
        let xi = x[i];
        let (acc_head, acc_tail) = acc.split_at_mut(i + 1);
        let tail = &x[i + 1..];
        let mut lanes = [0.0f64; 4];
        let mut xs = tail.chunks_exact(4);
        let mut accs = acc_tail.chunks_exact_mut(4);
        for (xc, ac) in (&mut xs).zip(&mut accs) {
            for l in 0..4 {
                let inv = 1.0 / (xi - xc[l]).min(-eps);
                lanes[l] += inv;
                ac[l] -= inv;
            }
        }
        let mut s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
        for (&xj, aj) in xs.remainder().iter().zip(accs.into_remainder()) {
            let inv = 1.0 / (xi - xj).min(-eps);
            s += inv;
            *aj -= inv;
        }
        acc_head[i] += s;
    }
}

/// `1 / (sign(d) max(|d|, eps))`; `d = 0` counts as positive.
pub fn regularized_inverse(d: f64, eps: f64) -> f64 {
    if d < 0.0 {
        1.0 / d.min(-eps)
    } else {
        1.0 / d.max(eps)
    }
}

fn drift_into(lambdas: &[f64], params: &ModelParams, eps: f64, scratch: &mut [f64], out: &mut [f64]) {
    cauchy_sums(lambdas, eps, scratch);
    let (alpha, beta) = (params.alpha(), params.beta());
    for ((o, &l), &s) in out.iter_mut().zip(lambdas).zip(scratch.iter()) {
        *o = alpha - l + beta * l * s;
    }
}

/// Drift of the direct scheme at a (sorted, nonnegative) state.
pub fn drift_lambda(state: &EnsembleState, params: &ModelParams, denom_epsilon: f64) -> Vec<f64> {
    let l = state.lambdas();
    let eps = absolute_epsilon(l, denom_epsilon);
    let mut scratch = vec![0.0; l.len()];
    let mut out = vec![0.0; l.len()];
    drift_into(l, params, eps, &mut scratch, &mut out);
    out
}

/// Radial configuration `0 <= X_1 <= ... <= X_N`, `X_i = sqrt(2 lambda_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    time: f64,
    x: Vec<f64>,
}

impl RadialState {
    pub fn new(x: Vec<f64>, time: f64) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration("radial coordinate is not finite".into()));
        }
        let mut x: Vec<f64> = x.into_iter().map(f64::abs).collect();
        x.sort_by(f64::total_cmp);
        Ok(Self { time, x })
    }

    pub fn from_lambda(state: &EnsembleState) -> Self {
        Self {
            time: state.time(),
            x: state.lambdas().iter().map(|l| (2.0 * l).sqrt()).collect(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// `lambda_i = X_i^2 / 2`.
pub fn lambda_from_radial(state: &RadialState) -> Result<EnsembleState> {
    normalize_state(state.x.iter().map(|x| 0.5 * x * x).collect(), state.time)
}

/// Counters for one path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
}

/// Reusable buffers for one integrator.
struct Workspace {
    drift: Vec<f64>,
    scratch: Vec<f64>,
    noise: Vec<f64>,
    proposal: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            drift: vec![0.0; n],
            scratch: vec![0.0; n],
            noise: vec![0.0; n],
            proposal: vec![0.0; n],
        }
    }
}

enum Attempt {
    Accepted,
    Rejected,
}

fn attempt_direct(
    lambdas: &[f64],
    params: &ModelParams,
    config: &SchemeConfig,
    noise: &mut NoiseStream,
    h: f64,
    ws: &mut Workspace,
) -> Attempt {
    let eps = step_epsilon(lambdas, params, config, h);
    drift_into(lambdas, params, eps, &mut ws.scratch, &mut ws.drift);
    noise.fill(&mut ws.noise);
    let sqrt_h = h.sqrt();
    for i in 0..lambdas.len() {
        let l = lambdas[i].max(0.0);
        let next = l + ws.drift[i] * h + (2.0 * l).sqrt() * sqrt_h * ws.noise[i];
        if !next.is_finite()
            || next < -crate::model::CLAMP_TOLERANCE
            || (next - l).abs() > config.step_fraction * (1.0 + l)
        {
            return Attempt::Rejected;
        }
        ws.proposal[i] = next.max(0.0);
    }
    Attempt::Accepted
}

fn attempt_radial(
    lambdas: &[f64],
    params: &ModelParams,
    config: &SchemeConfig,
    noise: &mut NoiseStream,
    h: f64,
    ws: &mut Workspace,
) -> Attempt {
    let eps = step_epsilon(lambdas, params, config, h);
    // X_i^2 - X_j^2 = 2 (lambda_i - lambda_j), so the pair sums are shared.
    cauchy_sums(lambdas, eps, &mut ws.scratch);
    noise.fill(&mut ws.noise);
    let (k1, k2) = (params.k1(), params.k2());
    let sqrt_h = h.sqrt();
    // Same principle for the k1 / X wall at the origin.
    let x_floor = (k1.abs() * sqrt_h).max(eps);
    for i in 0..lambdas.len() {
        let l = lambdas[i];
        let x = (2.0 * l).sqrt();
        let drift = k1 / x.max(x_floor) + k2 * x * ws.scratch[i] - 0.5 * x;
        let x_next = (x + drift * h + sqrt_h * ws.noise[i]).abs();
        let next = 0.5 * x_next * x_next;
        if !next.is_finite() || (next - l).abs() > config.step_fraction * (1.0 + l) {
            return Attempt::Rejected;
        }
        ws.proposal[i] = next;
    }
    Attempt::Accepted
}

/// Advances `lambdas` (sorted, nonnegative) over a span `h`, halving on rejection.
fn advance(
    lambdas: &mut Vec<f64>,
    params: &ModelParams,
    config: &SchemeConfig,
    noise: &mut NoiseStream,
    h: f64,
    ws: &mut Workspace,
    stats: &mut StepStats,
) -> Result<()> {
    // Stack of pending sub-spans with their halving depth.
    let mut pending: Vec<(f64, u32)> = vec![(h, 0)];
    while let Some((span, depth)) = pending.pop() {
        let outcome = match config.scheme {
            Scheme::DirectLambda => attempt_direct(lambdas, params, config, noise, span, ws),
            Scheme::RadialSquare => attempt_radial(lambdas, params, config, noise, span, ws),
        };
        match outcome {
            Attempt::Accepted => {
                stats.accepted += 1;
                std::mem::swap(lambdas, &mut ws.proposal);
                lambdas.sort_by(f64::total_cmp);
            }
            Attempt::Rejected => {
                stats.rejected += 1;
                if depth >= config.max_substeps {
                    return Err(Error::Integration(format!(
                        "step of size {h} still rejected after {depth} halvings"
                    )));
                }
                pending.push((span / 2.0, depth + 1));
                pending.push((span / 2.0, depth + 1));
            }
        }
    }
    Ok(())
}

/// One step of size `config.dt` of the direct scheme.
pub fn step_lambda(
    state: &EnsembleState,
    params: &ModelParams,
    config: &SchemeConfig,
    noise: &mut NoiseStream,
) -> Result<EnsembleState> {
    step_with(state, params, config, noise, Scheme::DirectLambda)
}

/// One step of size `config.dt` of the radial scheme.
pub fn step_radial(
    state: &RadialState,
    params: &ModelParams,
    config: &SchemeConfig,
    noise: &mut NoiseStream,
) -> Result<RadialState> {
    let lambda = lambda_from_radial(state)?;
    let next = step_with(&lambda, params, config, noise, Scheme::RadialSquare)?;
    Ok(RadialState::from_lambda(&next))
}

fn step_with(
    state: &EnsembleState,
    params: &ModelParams,
    config: &SchemeConfig,
    noise: &mut NoiseStream,
    scheme: Scheme,
) -> Result<EnsembleState> {
    config.validate()?;
    check_size(state, params)?;
    let config = SchemeConfig { scheme, ..*config };
    let mut lambdas = state.lambdas().to_vec();
    let mut ws = Workspace::new(lambdas.len());
    let mut stats = StepStats::default();
    advance(&mut lambdas, params, &config, noise, config.dt, &mut ws, &mut stats)?;
    normalize_state(lambdas, state.time() + config.dt)
}

fn check_size(state: &EnsembleState, params: &ModelParams) -> Result<()> {
    if state.len() != params.n_particles() {
        return Err(Error::Domain(format!(
            "state has {} particles, parameters say {}",
            state.len(),
            params.n_particles()
        )));
    }
    Ok(())
}

/// Output of [`simulate_path`].
#[derive(Debug, Clone)]
pub struct PathOutput {
    pub trace: MomentTrace,
    pub states: Option<Vec<EnsembleState>>,
    pub stats: StepStats,
}

impl PathOutput {
    pub fn final_state(&self) -> Option<&EnsembleState> {
        self.states.as_ref().and_then(|s| s.last())
    }
}

/// Simulates from `init` and records `S_0..S_{k_max}` at every grid time.
///
/// Between grid points the integrator uses equal substeps no larger than
/// `config.dt`. Noise comes from stream 0 of `config.seed`.
pub fn simulate_path(
    params: &ModelParams,
    init: &InitialCondition,
    grid: &[f64],
    config: &SchemeConfig,
    k_max: usize,
    keep_states: bool,
) -> Result<PathOutput> {
    let state = init.realize(params.n_particles())?;
    simulate_from_state(params, state, grid, config, k_max, keep_states)
}

/// Like [`simulate_path`] but starting from an explicit state.
pub fn simulate_from_state(
    params: &ModelParams,
    initial: EnsembleState,
    grid: &[f64],
    config: &SchemeConfig,
    k_max: usize,
    keep_states: bool,
) -> Result<PathOutput> {
    config.validate()?;
    check_size(&initial, params)?;
    if grid.first() != Some(&0.0) {
        return Err(Error::Domain("time grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    let mut noise = NoiseStream::new(config.seed, 0);
    let mut ws = Workspace::new(initial.len());
    let mut stats = StepStats::default();
    let mut values = vec![Vec::with_capacity(grid.len()); k_max + 1];
    let mut states = keep_states.then(|| Vec::with_capacity(grid.len()));

    let mut record = |state: &EnsembleState, states: &mut Option<Vec<EnsembleState>>| {
        debug_assert!(state.check_invariants());
        for (k, m) in state.moments(k_max).into_iter().enumerate() {
            values[k].push(m);
        }
        if let Some(s) = states.as_mut() {
            s.push(state.clone());
        }
    };

    let mut lambdas = initial.lambdas().to_vec();
    record(&initial, &mut states);
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let substeps = ((span / config.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for _ in 0..substeps {
            advance(&mut lambdas, params, config, &mut noise, h, &mut ws, &mut stats)?;
        }
        let state = normalize_state(lambdas.clone(), w[1])?;
        record(&state, &mut states);
    }
    Ok(PathOutput {
        trace: MomentTrace::new(grid.to_vec(), values)?,
        states,
        stats,
    })
}

/// Independent replicas, one per seed, run in parallel; results keep seed order.
pub fn simulate_replicas(
    params: &ModelParams,
    init: &InitialCondition,
    grid: &[f64],
    config: &SchemeConfig,
    k_max: usize,
    keep_states: bool,
    seeds: &[u64],
) -> Vec<Result<PathOutput>> {
    seeds
        .par_iter()
        .map(|&seed| simulate_path(params, init, grid, &config.with_seed(seed), k_max, keep_states))
        .collect()
}

fn cumulative_trapezoid(grid: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..grid.len() {
        acc += 0.5 * (f[j] + f[j - 1]) * (grid[j] - grid[j - 1]);
        out.push(acc);
    }
    out
}

/// `F_k = (k(alpha + k - 1) - c k^2 / N) S_{k-1} + c k sum_{i<k} S_i S_{k-1-i}` on the grid.
pub fn moment_forcing(trace: &MomentTrace, params: &ModelParams, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Domain("the forcing is defined for k >= 1".into()));
    }
    let s = |i: usize| trace.order(i).ok_or(Error::MissingOrder(i));
    let (alpha, c, n) = (params.alpha(), params.c(), params.n_particles() as f64);
    let kf = k as f64;
    let lin = kf * (alpha + kf - 1.0) - c * kf * kf / n;
    let prev = s(k - 1)?;
    let rows: Vec<&[f64]> = (0..k).map(s).collect::<Result<_>>()?;
    Ok((0..trace.grid.len())
        .map(|j| {
            let conv: f64 = (0..k).map(|i| rows[i][j] * rows[k - 1 - i][j]).sum();
            lin * prev[j] + c * kf * conv
        })
        .collect())
}

/// `M_k(t) = S_k(t) - S_k(0) + k int_0^t S_k - int_0^t F_k`, integrals by trapezoid.
pub fn martingale_residual(trace: &MomentTrace, params: &ModelParams, k: usize) -> Result<Vec<f64>> {
    let sk = trace.order(k).ok_or(Error::MissingOrder(k))?;
    if k > 0 && trace.order(k - 1).is_none() {
        return Err(Error::MissingOrder(k - 1));
    }
    let forcing = moment_forcing(trace, params, k)?;
    let int_s = cumulative_trapezoid(&trace.grid, sk);
    let int_f = cumulative_trapezoid(&trace.grid, &forcing);
    Ok((0..trace.grid.len())
        .map(|j| sk[j] - sk[0] + k as f64 * int_s[j] - int_f[j])
        .collect())
}

/// Quadratic variation `<M_k>_T = (2 k^2 / N) int_0^T S_{2k-1}` along the trace.
pub fn martingale_quadratic_variation(trace: &MomentTrace, params: &ModelParams, k: usize) -> Result<f64> {
    let order = 2 * k - 1;
    let s = trace.order(order).ok_or(Error::MissingOrder(order))?;
    let integral = cumulative_trapezoid(&trace.grid, s);
    let kf = k as f64;
    Ok(2.0 * kf * kf / params.n_particles() as f64 * integral.last().copied().unwrap_or(0.0))
}
