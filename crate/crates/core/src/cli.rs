//! The `bll` command line.
//!
//! ```text
//! bll [--config FILE] <simulate|moments|limit|verify|report> [flags]
//! ```
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::exact::rational_from_f64;
use crate::experiment::{run_experiment, verify, ExperimentSpec, VerificationPlan};
use crate::hierarchy::solve_hierarchy;
use crate::model::{uniform_grid, InitialCondition, ModelParams};
use crate::output::{emit_results, load_summary, render_csv, render_json, render_text, Format, Summary};
use crate::sde::{Scheme, SchemeConfig};
use crate::spectrum::{build_jacobi, quadrature_from_jacobi, self_convolutive_moments, stieltjes_resolvent};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Spacing of the recorded time grid.
const GRID_SPACING: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "bll", version, about = "Beta Laguerre processes at high temperature")]
struct Cli {
    /// `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate replicas and compare their moments with the exact limit.
    Simulate(Common),
    /// Print the exact limiting moment processes m_1..m_K.
    Moments(Common),
    /// Print the limit moments u_k, a Jacobi quadrature and resolvent values.
    Limit(Common),
    /// Run the full verification plan; exits 1 if any check fails.
    Verify(Common),
    /// Re-render a saved summary.
    Report {
        /// `summary.json` or the directory holding it.
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args, Default)]
struct Common {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "n-particles")]
    n_particles: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long = "k-max")]
    k_max: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    /// First seed; replicas use consecutive seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// direct_lambda or radial_square.
    #[arg(long)]
    scheme: Option<String>,
    /// Output directory for results.csv / summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// text, csv, json or both.
    #[arg(long)]
    format: Option<String>,
}

/// Flag values merged over the configuration file.
struct Settings {
    common: Common,
    file: ConfigFile,
}

impl Settings {
    fn get<T: std::str::FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v.clone())),
            None => self.file.get(key),
        }
    }

    fn alpha(&self) -> Result<f64> {
        Ok(self.get(&self.common.alpha, "alpha")?.unwrap_or(1.0))
    }

    fn c(&self) -> Result<f64> {
        Ok(self.get(&self.common.c, "c")?.unwrap_or(1.0))
    }

    fn k_max(&self, default: usize) -> Result<usize> {
        Ok(self.get(&self.common.k_max, "k_max")?.unwrap_or(default))
    }

    fn format(&self, default: Format) -> Result<Format> {
        self.get(&self.common.format, "format")?.map_or(Ok(default), |s: String| s.parse())
    }

    fn out(&self) -> Result<Option<PathBuf>> {
        self.get(&self.common.out, "out")
    }

    fn scheme(&self, base: SchemeConfig) -> Result<SchemeConfig> {
        let mut cfg = base;
        if let Some(dt) = self.get(&self.common.dt, "dt")? {
            cfg.dt = dt;
        }
        if let Some(s) = self.get::<String>(&self.common.scheme, "scheme")? {
            cfg.scheme = s.parse::<Scheme>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn seeds(&self, default_count: usize) -> Result<Vec<u64>> {
        let first = self.get(&self.common.seed, "seed")?.unwrap_or(1);
        let count = self.get(&self.common.replicas, "replicas")?.unwrap_or(default_count);
        if count == 0 {
            return Err(Error::Domain("replicas must be at least 1".into()));
        }
        Ok((0..count as u64).map(|i| first + i).collect())
    }

    fn grid(&self, default_t: f64) -> Result<Vec<f64>> {
        let t = self.get(&self.common.t_max, "t_max")?.unwrap_or(default_t);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("t-max must be positive, got {t}")));
        }
        Ok(uniform_grid(t, (t / GRID_SPACING).ceil().max(1.0) as usize))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "bll: {e}");
            EXIT_USAGE
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Simulate(common) => simulate(&Settings { common, file }, out),
        Command::Moments(common) => moments(&Settings { common, file }, out),
        Command::Limit(common) => limit(&Settings { common, file }, out),
        Command::Verify(common) => run_verify(&Settings { common, file }, out),
        Command::Report { path, common } => report(&path, &Settings { common, file }, out),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Prints or writes a summary according to `--format` and `--out`.
fn deliver(summary: &Summary, settings: &Settings, default_dir_format: Format, out: &mut dyn Write) -> Result<()> {
    match settings.out()? {
        Some(dir) => {
            let format = settings.format(default_dir_format)?;
            for path in emit_results(summary, format, &dir)? {
                writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
            }
            write!(out, "{}", render_text(summary)).map_err(io_err)
        }
        None => {
            let text = match settings.format(Format::Text)? {
                Format::Text => render_text(summary),
                Format::Csv => render_csv(summary),
                Format::Json => render_json(summary)?,
                Format::Both => format!("{}{}", render_json(summary)?, render_csv(summary)),
            };
            write!(out, "{text}").map_err(io_err)
        }
    }
}

fn simulate(settings: &Settings, out: &mut dyn Write) -> Result<i32> {
    let n = settings.get(&settings.common.n_particles, "n_particles")?.unwrap_or(250);
    let k_max = settings.k_max(3)?;
    let spec = ExperimentSpec::new(
        ModelParams::new(settings.alpha()?, settings.c()?, n)?,
        InitialCondition::point_mass(1.0, k_max),
        settings.scheme(SchemeConfig::default())?,
        settings.grid(3.0)?,
        k_max,
        settings.seeds(20)?,
    )?;
    let report = run_experiment(&spec)?;
    let summary = Summary::new(&spec, report.checks.clone(), report.anomalies.clone(), report.rows())?;
    deliver(&summary, settings, Format::Both, out)?;
    Ok(EXIT_OK)
}

fn moments(settings: &Settings, out: &mut dyn Write) -> Result<i32> {
    let (alpha, c) = (settings.alpha()?, settings.c()?);
    ModelParams::new(alpha, c, 1)?;
    let k_max = settings.k_max(5)?;
    let ones = vec![rational_from_f64(1.0); k_max];
    let h = solve_hierarchy(&rational_from_f64(alpha), &rational_from_f64(c), &ones, k_max)?;
    let format = settings.format(Format::Text)?;
    if matches!(format, Format::Json | Format::Both) {
        let polys: Vec<_> = (1..=k_max)
            .map(|k| {
                json!({
                    "k": k,
                    "coefficients": h.moment(k).coeffs().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                    "text": h.moment(k).to_string(),
                })
            })
            .collect();
        let doc = json!({"alpha": alpha, "c": c, "initial_moments": "a_k = 1", "moments": polys});
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?).map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "alpha = {alpha}, c = {c}, a_k = 1").map_err(io_err)?;
    for k in 1..=k_max {
        writeln!(out, "m_{k}(t) = {}", h.moment(k)).map_err(io_err)?;
    }
    if alpha == 1.0 && c == 1.0 && k_max >= 4 {
        let m4 = h.moment(4);
        writeln!(
            out,
            "note: the constant term of m_4 is {} (a value of 96 is a misprint): m_4(0) = {}, lim m_4 = u_4 = {}",
            m4.limit(),
            m4.initial_value(),
            self_convolutive_moments(&rational_from_f64(1.0), &rational_from_f64(1.0), 4).values()[4]
        )
        .map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn limit(settings: &Settings, out: &mut dyn Write) -> Result<i32> {
    let (alpha, c) = (settings.alpha()?, settings.c()?);
    ModelParams::new(alpha, c, 1)?;
    let k_max = settings.k_max(5)?;
    let u = self_convolutive_moments(&rational_from_f64(alpha), &rational_from_f64(c), k_max);
    let n = k_max.max(1);
    let q = quadrature_from_jacobi(&build_jacobi(alpha, c, n)?, n)?;
    let points = [
        Complex64::new(-1.0, 0.5),
        Complex64::new(0.0, 1.0),
        Complex64::new(2.0, 1.0),
        Complex64::new(0.0, 10.0),
    ];
    let g: Vec<Complex64> = points
        .iter()
        .map(|&z| stieltjes_resolvent(alpha, c, z, 400))
        .collect::<Result<_>>()?;
    let format = settings.format(Format::Text)?;
    if matches!(format, Format::Json | Format::Both) {
        let doc = json!({
            "alpha": alpha,
            "c": c,
            "moments": u.values().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "quadrature": {"nodes": q.nodes(), "weights": q.weights()},
            "stieltjes": points.iter().zip(&g).map(|(z, g)| json!({"z": [z.re, z.im], "value": [g.re, g.im]})).collect::<Vec<_>>(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?).map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    let listed: Vec<String> = u.values().iter().map(|r| r.to_string()).collect();
    writeln!(out, "u_0..u_{k_max} = {}", listed.join(", ")).map_err(io_err)?;
    writeln!(out, "{n}-point Jacobi quadrature:").map_err(io_err)?;
    for (x, w) in q.nodes().iter().zip(q.weights()) {
        writeln!(out, "  node {x:>14.8}  weight {w:.8e}").map_err(io_err)?;
    }
    writeln!(out, "Stieltjes transform int dnu(x) / (x - z):").map_err(io_err)?;
    for (z, g) in points.iter().zip(&g) {
        writeln!(out, "  z = {:+} {:+}i  ->  {:+.10} {:+.10}i", z.re, z.im, g.re, g.im).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn run_verify(settings: &Settings, out: &mut dyn Write) -> Result<i32> {
    let mut plan = VerificationPlan::reference()?;
    let common = &settings.common;
    let alpha = settings.get(&common.alpha, "alpha")?;
    let c = settings.get(&common.c, "c")?;
    if alpha.is_some() || c.is_some() {
        let params = ModelParams::new(alpha.unwrap_or(1.0), c.unwrap_or(1.0), 1)?;
        for spec in [&mut plan.convergence, &mut plan.martingale, &mut plan.longtime] {
            spec.params = ModelParams::new(params.alpha(), params.c(), spec.params.n_particles())?;
        }
    }
    for spec in [&mut plan.convergence, &mut plan.martingale, &mut plan.longtime] {
        spec.scheme = settings.scheme(spec.scheme)?;
    }
    if let Some(n) = settings.get(&common.n_particles, "n_particles")? {
        if n < 4 {
            return Err(Error::Domain("verify needs n-particles >= 4".into()));
        }
        plan.convergence_ns = vec![n / 4, n / 2, n];
        plan.longtime.params = plan.longtime.params.with_n(n)?;
    }
    if let Some(k) = settings.get(&common.k_max, "k_max")? {
        plan.convergence.k_max = k;
        plan.convergence.init = InitialCondition::point_mass(1.0, k);
        plan.longtime.k_max = k;
        plan.longtime.init = InitialCondition::point_mass(1.0, k);
    }
    if settings.get(&common.replicas, "replicas")?.is_some() || settings.get(&common.seed, "seed")?.is_some() {
        let seeds = settings.seeds(plan.convergence.seeds.len())?;
        plan.convergence.replicas = seeds.len();
        plan.convergence.seeds = seeds;
    }
    if settings.get(&common.t_max, "t_max")?.is_some() {
        plan.convergence.grid = settings.grid(3.0)?;
    }
    let summary = verify(&plan)?;
    deliver(&summary, settings, Format::Both, out)?;
    Ok(if summary.pass { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn report(path: &std::path::Path, settings: &Settings, out: &mut dyn Write) -> Result<i32> {
    let summary = load_summary(path)?;
    deliver(&summary, settings, Format::Both, out)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["bll"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["nonsense"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["moments", "--alpha", "abc"]).0, EXIT_USAGE);
        let (code, _, err) = run_capture(&["moments", "--alpha", "0.25"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("alpha"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn moments_prints_polynomials() {
        let (code, out, _) = run_capture(&["moments", "--k-max", "2"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("m_1(t) = 2 - e^(-t)"));
        assert!(out.contains("m_2(t) = 8 - 8e^(-t) + e^(-2t)"));
    }
}
