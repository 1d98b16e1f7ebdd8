//! Monte Carlo verification runs.
//!
//! An [`ExperimentSpec`] fixes parameters, initial data, discretization, time
//! grid and seeds. Running it produces per-seed rows (sup-norm moment errors,
//! martingale residuals, Kolmogorov distances) and aggregate [`Check`]s whose
//! thresholds are part of the serialized output.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::rational_from_f64;
use crate::hierarchy::{
    carleman_diagnostic, lambda_bounds, solve_hierarchy, MomentHierarchy,
};
use crate::model::{uniform_grid, InitialCondition, InitialDistribution, ModelParams};
use crate::sde::{
    martingale_quadratic_variation, martingale_residual, simulate_replicas, PathOutput, SchemeConfig,
    StepStats,
};
use crate::spectrum::{
    build_jacobi, interpolated_kolmogorov_distance, kolmogorov_distance, quadrature_from_jacobi,
    recurrence_from_exact_moments, self_convolutive_moments_f64, DiscreteMeasure, DEFAULT_QUADRATURE_SIZE,
    RECURRENCE_PRECISION_BITS,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BLL_THREADS";

/// Declared pass/fail thresholds. All of them are echoed in the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Sup-norm moment tolerance is `moment_fraction * Lambda_k`.
    pub moment_fraction: f64,
    /// Fraction of seeds that must meet the moment tolerance.
    pub pass_fraction: f64,
    /// Kolmogorov distance tolerance for measure-level checks.
    pub kolmogorov: f64,
    /// Relative tolerance for long-time averages against the limit moments.
    pub longtime_relative: f64,
    /// Width of the averaging window ending at the long time.
    pub longtime_window: f64,
    /// Largest allowed ratio between `N Var M_1(T)` values across `N`.
    pub martingale_ratio: f64,
    /// Order at which the Carleman partial sum is read.
    pub carleman_order: usize,
    /// The partial sum must reach this value for the moment method to apply.
    pub carleman_threshold: f64,
    /// Quadrature size used to turn exact moments of `mu_T` into a measure.
    pub measure_nodes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            moment_fraction: 0.05,
            pass_fraction: 0.95,
            kolmogorov: 0.05,
            longtime_relative: 0.05,
            longtime_window: 3.0,
            martingale_ratio: 2.0,
            carleman_order: 100,
            carleman_threshold: 3.0,
            measure_nodes: 24,
        }
    }
}

/// Everything needed to reproduce a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub params: ModelParams,
    pub init: InitialCondition,
    pub scheme: SchemeConfig,
    pub grid: Vec<f64>,
    pub k_max: usize,
    pub replicas: usize,
    pub seeds: Vec<u64>,
    pub tolerances: Tolerances,
    /// Compare the final empirical measure with the measure recovered from
    /// the exact moments of `mu_T`.
    pub measure_check: bool,
}

impl ExperimentSpec {
    pub fn new(
        params: ModelParams,
        init: InitialCondition,
        scheme: SchemeConfig,
        grid: Vec<f64>,
        k_max: usize,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        let spec = Self {
            params,
            init,
            scheme,
            grid,
            k_max,
            replicas: seeds.len(),
            seeds,
            tolerances: Tolerances::default(),
            measure_check: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `alpha = c = 1`, point mass at 1, `dt = 1e-3`, `T = 3` sampled every
    /// 0.05, `K = 3`, seeds `1..=20`.
    pub fn reference(n: usize) -> Result<Self> {
        Self::new(
            ModelParams::new(1.0, 1.0, n)?,
            InitialCondition::point_mass(1.0, 3),
            SchemeConfig::default(),
            uniform_grid(3.0, 60),
            3,
            (1..=20).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.params.alpha(), self.params.c(), self.params.n_particles())?;
        self.init.validate()?;
        self.scheme.validate()?;
        if self.replicas != self.seeds.len() {
            return Err(Error::Domain(format!(
                "replicas = {} but {} seeds were given",
                self.replicas,
                self.seeds.len()
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Domain("at least one seed is required".into()));
        }
        if self.grid.first() != Some(&0.0) {
            return Err(Error::Domain("time grid must start at 0".into()));
        }
        if self.grid.len() < 2 || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("time grid must be strictly increasing".into()));
        }
        if self.k_max < 1 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().expect("validated grid")
    }

    /// Same spec with `N` replaced.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Ok(Self {
            params: self.params.with_n(n)?,
            ..self.clone()
        })
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn run_id(&self) -> String {
        run_id_of(self)
    }

    fn moment_order(&self) -> usize {
        // S_{2k-1} enters the quadratic variation of M_k.
        (2 * self.k_max - 1).max(self.k_max)
    }
}

pub(crate) fn run_id_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("specs serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Direction of a threshold comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::AtMost => value <= threshold,
            Self::AtLeast => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
        }
    }
}

/// One aggregate pass/fail decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            name: name.into(),
            k: None,
            n: None,
            seed: None,
            value,
            relation,
            threshold,
            pass: relation.holds(value, threshold),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, threshold)
    }

    pub fn order(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn particles(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `name[k=..,N=..,seed=..]`
    pub fn label(&self) -> String {
        let mut tags = Vec::new();
        if let Some(k) = self.k {
            tags.push(format!("k={k}"));
        }
        if let Some(n) = self.n {
            tags.push(format!("N={n}"));
        }
        if let Some(s) = self.seed {
            tags.push(format!("seed={s}"));
        }
        if tags.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{}]", self.name, tags.join(","))
        }
    }
}

/// One CSV record: `run_id,k,N,seed,metric,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

/// Outcome of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub seed: u64,
    /// `sup_t |S_k(t) - m_k(t)|` for `k = 1..=K`.
    pub sup_errors: Vec<f64>,
    /// `M_k(T)` for `k = 1..=K`.
    pub martingale: Vec<f64>,
    /// `<M_k>_T` for `k = 1..=K`.
    pub quadratic_variation: Vec<f64>,
    /// Kolmogorov distance between the final empirical measure and `mu_T`.
    pub kolmogorov: Option<f64>,
    pub stats: StepStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicaOutcome {
    Completed(ReplicaResult),
    Failed { seed: u64, message: String },
}

impl ReplicaOutcome {
    pub fn seed(&self) -> u64 {
        match self {
            Self::Completed(r) => r.seed,
            Self::Failed { seed, .. } => *seed,
        }
    }

    pub fn result(&self) -> Option<&ReplicaResult> {
        match self {
            Self::Completed(r) => Some(r),
            Self::Failed { .. } => None,
        }
    }
}

/// Reference measure for the measure-level check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReference {
    pub time: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub digits_lost: f64,
}

/// Result of [`run_experiment`] for one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spec: ExperimentSpec,
    /// `Lambda_k` for `k = 1..=K`.
    pub bounds: Vec<f64>,
    /// Sup-norm tolerance per order, `moment_fraction * Lambda_k`.
    pub moment_tolerances: Vec<f64>,
    /// Carleman partial sum at the declared order.
    pub carleman_sum: f64,
    pub reference: Option<MeasureReference>,
    pub replicas: Vec<ReplicaOutcome>,
    pub checks: Vec<Check>,
    pub anomalies: Vec<String>,
}

impl ConvergenceReport {
    pub fn n_particles(&self) -> usize {
        self.spec.params.n_particles()
    }

    pub fn completed(&self) -> impl Iterator<Item = &ReplicaResult> {
        self.replicas.iter().filter_map(ReplicaOutcome::result)
    }

    pub fn failures(&self) -> usize {
        self.replicas.iter().filter(|r| r.result().is_none()).count()
    }

    /// Sup errors of order `k` over completed replicas, in seed order.
    pub fn sup_errors(&self, k: usize) -> Vec<f64> {
        self.completed().map(|r| r.sup_errors[k - 1]).collect()
    }

    pub fn median_sup_error(&self, k: usize) -> f64 {
        median(&self.sup_errors(k))
    }

    /// Number of replicas (failures included in the denominator) within tolerance.
    pub fn passing(&self, k: usize) -> usize {
        let tol = self.moment_tolerances[k - 1];
        self.sup_errors(k).iter().filter(|&&e| e <= tol).count()
    }

    /// `M_k(T)` across completed replicas.
    pub fn martingale_values(&self, k: usize) -> Vec<f64> {
        self.completed().map(|r| r.martingale[k - 1]).collect()
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.anomalies.is_empty()
    }

    pub fn rows(&self) -> Vec<Row> {
        let n = self.n_particles();
        let mut rows = Vec::new();
        for outcome in &self.replicas {
            let seed = outcome.seed();
            let mut push = |k: usize, metric: &str, value: f64| {
                rows.push(Row {
                    k,
                    n,
                    seed,
                    metric: metric.to_string(),
                    value,
                })
            };
            match outcome {
                ReplicaOutcome::Completed(r) => {
                    for k in 1..=r.sup_errors.len() {
                        push(k, "sup_error", r.sup_errors[k - 1]);
                        push(k, "martingale_final", r.martingale[k - 1]);
                        push(k, "quadratic_variation", r.quadratic_variation[k - 1]);
                    }
                    if let Some(ks) = r.kolmogorov {
                        push(0, "kolmogorov", ks);
                    }
                    push(0, "accepted_steps", r.stats.accepted as f64);
                    push(0, "rejected_steps", r.stats.rejected as f64);
                }
                ReplicaOutcome::Failed { .. } => push(0, "failed", 1.0),
            }
        }
        rows
    }
}

/// Median of a sample; NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Unbiased sample variance; NaN for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Runs `f` on a pool capped by `BLL_THREADS` when that variable is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Initial moments `a_1..=a_k` in double precision.
fn initial_moments_f64(init: &InitialCondition, k_max: usize) -> Vec<f64> {
    match init {
        InitialCondition::ExplicitLambdas(l) => (1..=k_max)
            .map(|k| l.iter().map(|x| x.powi(k as i32)).sum::<f64>() / l.len() as f64)
            .collect(),
        InitialCondition::TargetMoments { distribution, .. } => {
            (1..=k_max).map(|k| distribution.moment(k)).collect()
        }
    }
}

fn exact_hierarchy(params: &ModelParams, init: &InitialCondition, k_max: usize) -> Result<MomentHierarchy> {
    solve_hierarchy(
        &rational_from_f64(params.alpha()),
        &rational_from_f64(params.c()),
        &init.exact_moments(k_max),
        k_max,
    )
}

/// Quadrature of `mu_t` built from its exact moments.
pub fn limit_measure_at(
    params: &ModelParams,
    init: &InitialCondition,
    t: f64,
    nodes: usize,
) -> Result<MeasureReference> {
    let order = 2 * nodes;
    let h = exact_hierarchy(params, init, order)?;
    let moments: Vec<BigRational> = h.eval_all_rational(t, RECURRENCE_PRECISION_BITS);
    // Exponentials are evaluated to the working precision; claim a little less.
    let rec = recurrence_from_exact_moments(&moments, RECURRENCE_PRECISION_BITS - 16)?;
    let q = quadrature_from_jacobi(&rec.jacobi, nodes)?;
    Ok(MeasureReference {
        time: t,
        nodes: q.nodes().to_vec(),
        weights: q.weights().to_vec(),
        digits_lost: rec.digits_lost,
    })
}

fn replica_result(
    spec: &ExperimentSpec,
    exact: &[Vec<f64>],
    reference: Option<&DiscreteMeasure>,
    seed: u64,
    path: PathOutput,
) -> Result<ReplicaResult> {
    let k_max = spec.k_max;
    let mut sup_errors = Vec::with_capacity(k_max);
    let mut martingale = Vec::with_capacity(k_max);
    let mut quadratic_variation = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let s = path.trace.order(k).ok_or(Error::MissingOrder(k))?;
        let sup = s
            .iter()
            .zip(&exact[k])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        sup_errors.push(sup);
        let m = martingale_residual(&path.trace, &spec.params, k)?;
        martingale.push(*m.last().expect("nonempty grid"));
        quadratic_variation.push(martingale_quadratic_variation(&path.trace, &spec.params, k)?);
    }
    let kolmogorov = match (reference, path.final_state()) {
        (Some(q), Some(state)) => {
            let empirical = DiscreteMeasure::empirical(state.lambdas())?;
            Some(interpolated_kolmogorov_distance(&empirical, q))
        }
        _ => None,
    };
    Ok(ReplicaResult {
        seed,
        sup_errors,
        martingale,
        quadratic_variation,
        kolmogorov,
        stats: path.stats,
    })
}

/// Simulates every replica and compares against the exact moment processes.
///
/// A replica whose integration fails is recorded and counts as not passing.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let tol = &spec.tolerances;
    let k_max = spec.k_max;
    let hierarchy = exact_hierarchy(&spec.params, &spec.init, k_max)?;
    let exact_on_grid: Vec<Vec<f64>> = (0..=k_max)
        .map(|k| spec.grid.iter().map(|&t| hierarchy.moment(k).eval_f64(t)).collect())
        .collect();

    let a = initial_moments_f64(&spec.init, tol.carleman_order);
    let bounds_seq = lambda_bounds(spec.params.alpha(), spec.params.c(), &a, tol.carleman_order);
    let bounds: Vec<f64> = (1..=k_max).map(|k| bounds_seq.value(k)).collect();
    let moment_tolerances: Vec<f64> = bounds.iter().map(|b| tol.moment_fraction * b).collect();
    let carleman_sum = *carleman_diagnostic(&bounds_seq).last().expect("order >= 1");

    let reference = if spec.measure_check {
        Some(limit_measure_at(&spec.params, &spec.init, spec.t_max(), tol.measure_nodes)?)
    } else {
        None
    };
    let reference_measure = reference
        .as_ref()
        .map(|r| DiscreteMeasure::new(r.nodes.clone(), r.weights.clone()))
        .transpose()?;

    let paths = with_thread_cap(|| {
        simulate_replicas(
            &spec.params,
            &spec.init,
            &spec.grid,
            &spec.scheme,
            spec.moment_order(),
            spec.measure_check,
            &spec.seeds,
        )
    });
    let replicas: Vec<ReplicaOutcome> = spec
        .seeds
        .iter()
        .zip(paths)
        .map(|(&seed, path)| {
            match path.and_then(|p| replica_result(spec, &exact_on_grid, reference_measure.as_ref(), seed, p)) {
                Ok(r) => ReplicaOutcome::Completed(r),
                Err(e) => ReplicaOutcome::Failed {
                    seed,
                    message: e.to_string(),
                },
            }
        })
        .collect();

    let mut report = ConvergenceReport {
        spec: spec.clone(),
        bounds,
        moment_tolerances,
        carleman_sum,
        reference,
        replicas,
        checks: Vec::new(),
        anomalies: Vec::new(),
    };
    report.checks = convergence_checks(&report);
    report.anomalies = moment_method_anomalies(&report);
    Ok(report)
}

fn convergence_checks(report: &ConvergenceReport) -> Vec<Check> {
    let spec = &report.spec;
    let tol = &spec.tolerances;
    let n = report.n_particles();
    let total = spec.seeds.len() as f64;
    let mut checks = Vec::new();
    for k in 1..=spec.k_max {
        checks.push(
            Check::at_least("moment_pass_fraction", report.passing(k) as f64 / total, tol.pass_fraction)
                .order(k)
                .particles(n),
        );
    }
    if let Some(reference) = &report.reference {
        let within = report
            .completed()
            .filter(|r| r.kolmogorov.is_some_and(|d| d <= tol.kolmogorov))
            .count();
        checks.push(
            Check::at_least("kolmogorov_pass_fraction", within as f64 / total, tol.pass_fraction).particles(n),
        );
        checks.push(
            Check::at_most(
                "reference_digits_lost",
                reference.digits_lost,
                (RECURRENCE_PRECISION_BITS - 16) as f64 * std::f64::consts::LOG10_2,
            )
            .particles(n),
        );
    }
    checks
}

/// Replicas where every moment passes and Carleman holds, yet the measure
/// check fails.
fn moment_method_anomalies(report: &ConvergenceReport) -> Vec<String> {
    let tol = &report.spec.tolerances;
    if report.carleman_sum < tol.carleman_threshold {
        return Vec::new();
    }
    report
        .completed()
        .filter(|r| {
            let moments_pass = r
                .sup_errors
                .iter()
                .zip(&report.moment_tolerances)
                .all(|(e, t)| e <= t);
            moments_pass && r.kolmogorov.is_some_and(|d| d > tol.kolmogorov)
        })
        .map(|r| {
            format!(
                "N={} seed={}: moments within tolerance and Carleman sum {:.3} >= {}, but Kolmogorov distance {:.4} > {}",
                report.n_particles(),
                r.seed,
                report.carleman_sum,
                tol.carleman_threshold,
                r.kolmogorov.unwrap_or(f64::NAN),
                tol.kolmogorov
            )
        })
        .collect()
}

/// Runs the same spec at several `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub reports: Vec<ConvergenceReport>,
    /// Medians must decrease strictly along increasing `N`, for each order.
    pub checks: Vec<Check>,
}

impl ConvergenceStudy {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.reports.iter().all(ConvergenceReport::pass)
    }
}

/// [`run_experiment`] at each `N` in `ns` (ascending), plus the median trend checks.
pub fn convergence_study(base: &ExperimentSpec, ns: &[usize]) -> Result<ConvergenceStudy> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("particle counts must be strictly increasing".into()));
    }
    let reports: Vec<ConvergenceReport> = ns
        .iter()
        .map(|&n| run_experiment(&base.with_n(n)?))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for k in 1..=base.k_max {
        let medians: Vec<f64> = reports.iter().map(|r| r.median_sup_error(k)).collect();
        for (w, pair) in medians.windows(2).zip(ns.windows(2)) {
            // Ratio of consecutive medians; strictly below one means decreasing.
            let ratio = w[1] / w[0];
            let mut check = Check::at_most("median_error_ratio", ratio, 1.0).order(k).particles(pair[1]);
            check.pass = ratio < 1.0;
            checks.push(check);
        }
    }
    Ok(ConvergenceStudy { reports, checks })
}

/// `N Var M_1(T)` across particle counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleScaling {
    pub reports: Vec<ConvergenceReport>,
    /// `(N, N * sample variance of M_1(T), N * mean <M_1>_T)`.
    pub scaled: Vec<(usize, f64, f64)>,
    pub checks: Vec<Check>,
}

impl MartingaleScaling {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Martingale scaling run: `N Var M_1(T)` should not depend on `N`.
pub fn martingale_scaling(base: &ExperimentSpec, ns: &[usize]) -> Result<MartingaleScaling> {
    let base = ExperimentSpec {
        k_max: 1,
        measure_check: false,
        ..base.clone()
    };
    let mut reports = Vec::new();
    let mut scaled = Vec::new();
    for &n in ns {
        let report = run_experiment(&base.with_n(n)?)?;
        let m = report.martingale_values(1);
        let qv: Vec<f64> = report.completed().map(|r| r.quadratic_variation[0]).collect();
        let mean_qv = qv.iter().sum::<f64>() / qv.len().max(1) as f64;
        scaled.push((n, n as f64 * sample_variance(&m), n as f64 * mean_qv));
        reports.push(report);
    }
    let values: Vec<f64> = scaled.iter().map(|s| s.1).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let checks = vec![Check::at_most("martingale_scaled_variance_ratio", max / min, base.tolerances.martingale_ratio).order(1)];
    Ok(MartingaleScaling {
        reports,
        scaled,
        checks,
    })
}

/// Long-time comparison for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongtimeResult {
    pub seed: u64,
    /// Window averages of `S_k` for `k = 1..=K`.
    pub averages: Vec<f64>,
    pub targets: Vec<f64>,
    pub kolmogorov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongtimeReport {
    pub spec: ExperimentSpec,
    pub t_long: f64,
    pub quadrature_size: usize,
    pub results: Vec<LongtimeResult>,
    pub failures: Vec<(u64, String)>,
    pub checks: Vec<Check>,
}

impl LongtimeReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn rows(&self) -> Vec<Row> {
        let n = self.spec.params.n_particles();
        let mut rows = Vec::new();
        for r in &self.results {
            for (k, (avg, target)) in r.averages.iter().zip(&r.targets).enumerate() {
                rows.push(Row { k: k + 1, n, seed: r.seed, metric: "time_average".into(), value: *avg });
                rows.push(Row {
                    k: k + 1,
                    n,
                    seed: r.seed,
                    metric: "time_average_relative_error".into(),
                    value: (avg - target).abs() / target,
                });
            }
            rows.push(Row { k: 0, n, seed: r.seed, metric: "kolmogorov_stationary".into(), value: r.kolmogorov });
        }
        for (seed, _) in &self.failures {
            rows.push(Row { k: 0, n, seed: *seed, metric: "failed".into(), value: 1.0 });
        }
        rows
    }
}

/// Simulates each seed of `spec` to `t_long` (grid spacing taken from
/// `spec.grid`), averages `S_k` over the final window and compares with the
/// limit moments `u_k`; the final empirical CDF is compared with the
/// quadrature of the limit measure.
pub fn longtime_check(spec: &ExperimentSpec, t_long: f64) -> Result<LongtimeReport> {
    spec.validate()?;
    if !(t_long >= 10.0) {
        return Err(Error::Domain(format!("long-time horizon must be at least 10, got {t_long}")));
    }
    let tol = &spec.tolerances;
    if !(tol.longtime_window > 0.0 && tol.longtime_window < t_long) {
        return Err(Error::Domain("averaging window must lie inside [0, T]".into()));
    }
    let spacing = spec.grid[1] - spec.grid[0];
    let steps = (t_long / spacing).round().max(1.0) as usize;
    let grid = uniform_grid(t_long, steps);
    let long_spec = ExperimentSpec {
        grid: grid.clone(),
        ..spec.clone()
    };
    let (alpha, c) = (spec.params.alpha(), spec.params.c());
    let u = self_convolutive_moments_f64(alpha, c, spec.k_max);
    let targets = u[1..].to_vec();
    let jacobi = build_jacobi(alpha, c, DEFAULT_QUADRATURE_SIZE)?;
    let quadrature = quadrature_from_jacobi(&jacobi, DEFAULT_QUADRATURE_SIZE)?;

    let paths = with_thread_cap(|| {
        simulate_replicas(&spec.params, &spec.init, &grid, &spec.scheme, spec.k_max, true, &spec.seeds)
    });
    let window_start = t_long - tol.longtime_window;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (&seed, path) in spec.seeds.iter().zip(paths) {
        let path = match path {
            Ok(p) => p,
            Err(e) => {
                failures.push((seed, e.to_string()));
                continue;
            }
        };
        let averages = (1..=spec.k_max)
            .map(|k| {
                let s = path.trace.order(k).ok_or(Error::MissingOrder(k))?;
                Ok(window_average(&grid, s, window_start))
            })
            .collect::<Result<Vec<f64>>>()?;
        let state = path.final_state().ok_or_else(|| Error::Integration("no final state".into()))?;
        let kolmogorov = kolmogorov_distance(&DiscreteMeasure::empirical(state.lambdas())?, &quadrature);
        results.push(LongtimeResult {
            seed,
            averages,
            targets: targets.clone(),
            kolmogorov,
        });
    }

    let n = spec.params.n_particles();
    let mut checks = Vec::new();
    for r in &results {
        for (k, (avg, target)) in r.averages.iter().zip(&r.targets).enumerate() {
            checks.push(
                Check::at_most("longtime_relative_error", (avg - target).abs() / target, tol.longtime_relative)
                    .order(k + 1)
                    .particles(n)
                    .seed(r.seed),
            );
        }
        checks.push(Check::at_most("stationary_kolmogorov", r.kolmogorov, tol.kolmogorov).particles(n).seed(r.seed));
    }
    Ok(LongtimeReport {
        spec: long_spec,
        t_long,
        quadrature_size: DEFAULT_QUADRATURE_SIZE,
        results,
        failures,
        checks,
    })
}

/// Trapezoidal mean of `f` over `[start, grid.last()]`, with linear
/// interpolation at `start`.
pub fn window_average(grid: &[f64], f: &[f64], start: f64) -> f64 {
    let end = *grid.last().expect("nonempty grid");
    let mut acc = 0.0;
    for j in 1..grid.len() {
        let (t0, t1) = (grid[j - 1], grid[j]);
        if t1 <= start {
            continue;
        }
        let (mut a, b) = (f[j - 1], f[j]);
        let mut lo = t0;
        if t0 < start {
            a += (b - a) * (start - t0) / (t1 - t0);
            lo = start;
        }
        acc += 0.5 * (a + b) * (t1 - lo);
    }
    acc / (end - start)
}

/// A uniform initial law in the shape used by configuration files.
pub fn uniform_init(lo: f64, hi: f64, k_max: usize) -> InitialCondition {
    InitialCondition::from_distribution(InitialDistribution::Uniform { lo, hi }, k_max)
}

/// Coefficients of `m_1..m_5` for `alpha = c = 1`, `a_k = 1`.
pub const WORKED_EXAMPLE: [&[i64]; 5] = [
    &[2, -1],
    &[8, -8, 1],
    &[44, -66, 18, 5],
    &[296, -592, 256, 112, -71],
    &[2312, -5780, 3460, 1880, -2530, 659],
];

/// Parameter pairs `(alpha, c)` used for the residual identity, as
/// `(numerator, denominator)` pairs.
pub const RESIDUAL_PARAMS: [((i64, i64), (i64, i64)); 3] = [((1, 1), (1, 1)), ((3, 2), (1, 2)), ((2, 1), (3, 1))];

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Mismatches between the solved hierarchy and [`WORKED_EXAMPLE`].
pub fn worked_example_mismatches() -> Result<usize> {
    let one = ratio(1, 1);
    let h = solve_hierarchy(&one, &one, &vec![one.clone(); 5], 5)?;
    let mut bad = 0;
    for (k, want) in WORKED_EXAMPLE.iter().enumerate() {
        let got = h.moment(k + 1).coeffs();
        if got.len() != want.len() || got.iter().zip(want.iter()).any(|(g, &w)| *g != ratio(w, 1)) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Exact-arithmetic and quadrature checks for the limit objects at `(alpha, c)`.
pub fn exact_checks(alpha: f64, c: f64) -> Result<Vec<Check>> {
    use crate::hierarchy::{hankel_psd_check, limiting_constants, ode_residual, PSD_RELATIVE_TOL};
    use crate::spectrum::{jacobi_moment, jacobi_moments_exact, self_convolutive_moments, stieltjes_resolvent};
    use num_complex::Complex64;

    const TRIPLE_ORDER: usize = 20;
    const RESIDUAL_ORDER: usize = 10;
    const PSD_ORDER: usize = 16;
    const QUADRATURE_MAX: usize = 8;
    const RESOLVENT_DEPTH: usize = 400;

    let mut checks = Vec::new();
    if alpha == 1.0 && c == 1.0 {
        checks.push(Check::at_most("worked_example_mismatches", worked_example_mismatches()? as f64, 0.0));
    }

    // u_k, C_{k,0} and (J^k)(1,1), exactly.
    let (ar, cr) = (rational_from_f64(alpha), rational_from_f64(c));
    let u = self_convolutive_moments(&ar, &cr, TRIPLE_ORDER);
    let ones = vec![ratio(1, 1); TRIPLE_ORDER];
    let h = solve_hierarchy(&ar, &cr, &ones, TRIPLE_ORDER)?;
    let constants: Vec<BigRational> = h.polys().iter().map(crate::ExpPolynomial::limit).collect();
    let jm = jacobi_moments_exact(&ar, &cr, TRIPLE_ORDER);
    let exact_bad = (0..=TRIPLE_ORDER)
        .filter(|&k| u.values()[k] != constants[k] || u.values()[k] != jm[k])
        .count();
    checks.push(Check::at_most("triple_agreement_exact_mismatches", exact_bad as f64, 0.0).order(TRIPLE_ORDER));
    limiting_constants(&h)?;
    let u_f = self_convolutive_moments_f64(alpha, c, TRIPLE_ORDER);
    let jac = build_jacobi(alpha, c, TRIPLE_ORDER / 2 + 1)?;
    let mut float_err: f64 = 0.0;
    for k in 0..=TRIPLE_ORDER {
        let exact = crate::exact::rational_to_f64(&u.values()[k]);
        float_err = float_err
            .max((u_f[k] - exact).abs() / exact)
            .max((jacobi_moment(&jac, k)? - exact).abs() / exact);
    }
    checks.push(Check::at_most("triple_agreement_float_relative_error", float_err, 1e-10).order(TRIPLE_ORDER));

    // Residual of the moment ODE, exactly zero.
    let mut residual_bad = 0;
    for &((an, ad), (cn, cd)) in RESIDUAL_PARAMS.iter() {
        let h = solve_hierarchy(&ratio(an, ad), &ratio(cn, cd), &ones[..RESIDUAL_ORDER], RESIDUAL_ORDER)?;
        residual_bad += (1..=RESIDUAL_ORDER).filter(|&k| !ode_residual(&h, k).is_zero()).count();
    }
    checks.push(Check::at_most("ode_residual_nonzero", residual_bad as f64, 0.0).order(RESIDUAL_ORDER));

    // Stieltjes structure of u.
    let psd = hankel_psd_check(&u_f[..=PSD_ORDER], PSD_RELATIVE_TOL);
    checks.push(Check::at_least("hankel_psd_worst_ratio", psd.worst_ratio, -1.0).order(PSD_ORDER));
    let mut min_node = f64::INFINITY;
    let mut quad_err: f64 = 0.0;
    for n in 1..=QUADRATURE_MAX {
        let q = quadrature_from_jacobi(&build_jacobi(alpha, c, n)?, n)?;
        min_node = min_node.min(q.nodes()[0]);
        for k in 0..2 * n {
            quad_err = quad_err.max((q.moment(k as u32) - u_f[k]).abs() / u_f[k]);
        }
    }
    checks.push(Check::new("quadrature_min_node", min_node, Relation::AtLeast, 0.0));
    if let Some(last) = checks.last_mut() {
        last.pass = min_node > 0.0;
    }
    checks.push(Check::at_most("quadrature_moment_relative_error", quad_err, 1e-9).order(2 * QUADRATURE_MAX - 1));

    // Resolvent: Herglotz on a 10 x 10 grid, asymptotics at |z| = 1000.
    let mut herglotz_bad = 0;
    for i in 0..10 {
        for j in 0..10 {
            let z = Complex64::new(-5.0 + 30.0 * i as f64 / 9.0, 0.5 + 4.5 * j as f64 / 9.0);
            let g = stieltjes_resolvent(alpha, c, z, RESOLVENT_DEPTH)?;
            if !(g.im > 0.0) {
                herglotz_bad += 1;
            }
        }
    }
    checks.push(Check::at_most("herglotz_violations", herglotz_bad as f64, 0.0));
    let mut asym_err: f64 = 0.0;
    for j in 1..8 {
        let z = Complex64::from_polar(1e3, std::f64::consts::PI * j as f64 / 8.0);
        let g = stieltjes_resolvent(alpha, c, z, RESOLVENT_DEPTH)?;
        let approx = -1.0 / z - u_f[1] / (z * z);
        asym_err = asym_err.max((g - approx).norm() / approx.norm());
    }
    checks.push(Check::at_most("resolvent_asymptotic_relative_error", asym_err, 0.01));
    Ok(checks)
}

/// Everything `verify` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationPlan {
    /// Base spec for the convergence study; its `N` is replaced.
    pub convergence: ExperimentSpec,
    pub convergence_ns: Vec<usize>,
    pub martingale: ExperimentSpec,
    pub martingale_ns: Vec<usize>,
    pub longtime: ExperimentSpec,
    pub t_long: f64,
}

impl VerificationPlan {
    /// `alpha = c = 1`, point mass at 1: convergence at N = 250, 500, 1000
    /// (T = 3, 20 seeds); martingale scaling at N = 100, 200, 400 (T = 1,
    /// 40 seeds); one long run at N = 1000 to T = 15.
    pub fn reference() -> Result<Self> {
        let convergence = ExperimentSpec::reference(1000)?;
        let martingale = ExperimentSpec {
            grid: uniform_grid(1.0, 100),
            replicas: 40,
            seeds: (1..=40).collect(),
            k_max: 1,
            measure_check: false,
            ..convergence.clone()
        };
        let longtime = ExperimentSpec {
            replicas: 1,
            seeds: vec![1],
            measure_check: false,
            ..convergence.clone()
        };
        Ok(Self {
            convergence,
            convergence_ns: vec![250, 500, 1000],
            martingale,
            martingale_ns: vec![100, 200, 400],
            longtime,
            t_long: 15.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.convergence.validate()?;
        self.martingale.validate()?;
        self.longtime.validate()?;
        if self.convergence_ns.is_empty() || self.martingale_ns.len() < 2 {
            return Err(Error::Domain("need at least one convergence N and two martingale N".into()));
        }
        Ok(())
    }
}

/// Runs the whole plan and collects checks, anomalies and rows.
pub fn verify(plan: &VerificationPlan) -> Result<crate::output::Summary> {
    plan.validate()?;
    let (alpha, c) = (plan.convergence.params.alpha(), plan.convergence.params.c());
    let mut checks = exact_checks(alpha, c)?;
    let mut anomalies = Vec::new();
    let mut rows = Vec::new();

    let study = convergence_study(&plan.convergence, &plan.convergence_ns)?;
    for (i, report) in study.reports.iter().enumerate() {
        rows.extend(report.rows());
        anomalies.extend(report.anomalies.iter().cloned());
        // Seed-fraction gates apply at the largest N only.
        if i + 1 == study.reports.len() {
            checks.extend(report.checks.iter().cloned());
        }
    }
    checks.extend(study.checks.iter().cloned());

    let scaling = martingale_scaling(&plan.martingale, &plan.martingale_ns)?;
    for report in &scaling.reports {
        rows.extend(report.rows());
    }
    checks.extend(scaling.checks.iter().cloned());

    let long = longtime_check(&plan.longtime, plan.t_long)?;
    rows.extend(long.rows());
    checks.extend(long.checks.iter().cloned());
    if !long.failures.is_empty() {
        checks.push(Check::at_most("longtime_failed_replicas", long.failures.len() as f64, 0.0));
    }

    crate::output::Summary::new(plan, checks, anomalies, rows)
}
