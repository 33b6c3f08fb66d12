//! Convergence studies: configuration, sweeps over mesh families, CSV output,
//! log-log plots and gradient-field export.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytic::{Domain, ProblemSpec};
use crate::assembly::{assemble_load_with, assemble_stiffness_with, AssemblyOptions, LoadVector, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mesh::{build_disk_mesh, build_graded_1d, build_uniform_1d, Mesh};
use crate::norms::{
    energy_error_from, fit_order_of, h1_error_with, h1_seminorm_discrete, l2_error_with, load_against_exact, loglog_slope,
    ConvergenceRecord, XField, YField,
};
use crate::quadrature::QuadratureConfig;
use crate::solve::{cholesky, condition_estimate, conjugate_gradient, DiscreteSolution};

/// Mesh grading of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Uniform,
    /// `μ = 2(2 - s)`, one dimension.
    Mu1,
    /// `μ = 1/(s - 1/2)`, one dimension.
    Mu2,
    /// `μ = 2` on the disk.
    Mu2d,
    Explicit(f64),
}

impl Grading {
    pub fn mu(self, s: f64) -> f64 {
        match self {
            Grading::Uniform => 1.0,
            Grading::Mu1 => 2.0 * (2.0 - s),
            Grading::Mu2 => 1.0 / (s - 0.5),
            Grading::Mu2d => 2.0,
            Grading::Explicit(mu) => mu,
        }
    }
}

/// Linear solver of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients with this relative tolerance.
    Cg(f64),
}

/// Declarative description of a sweep, read from TOML.
///
/// ```toml
/// dimension = 1
/// s_values = [0.6, 0.7]
/// grading = "mu1"            # or { explicit = 1.5 }
/// h_min_targets = [1e-6, 1e-7, 1e-8, 1e-9]
/// rhs_k = 0
/// solver = "cholesky"        # or { cg = 1e-10 }
///
/// [quadrature]
/// far_base = 9
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub dimension: usize,
    pub s_values: Vec<f64>,
    #[serde(default = "default_grading")]
    pub grading: Grading,
    /// Node counts in 1D, mesh parameters `h` in 2D. A graded 1D mesh with
    /// `N` nodes has `(N - 1)/2` elements per half interval.
    #[serde(default)]
    pub sizes: Vec<f64>,
    /// One-dimensional graded studies may instead ask for smallest element
    /// sizes; the node counts then depend on `s` through `μ`.
    #[serde(default)]
    pub h_min_targets: Option<Vec<f64>>,
    /// Cap on the node count of meshes derived from `h_min_targets`.
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
    #[serde(default)]
    pub rhs_k: u32,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Estimate the condition number of every stiffness matrix.
    #[serde(default)]
    pub condition: bool,
    /// Record wall times; switch off for byte-identical reruns.
    #[serde(default = "default_true")]
    pub wall_time: bool,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

fn default_grading() -> Grading {
    Grading::Uniform
}

fn default_max_nodes() -> usize {
    4001
}

fn default_solver() -> Solver {
    Solver::Cholesky
}

fn default_threads() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl StudyConfig {
    /// Minimal configuration; the remaining fields take their defaults.
    pub fn new(dimension: usize, s_values: Vec<f64>, grading: Grading, sizes: Vec<f64>) -> Self {
        Self {
            dimension,
            s_values,
            grading,
            sizes,
            h_min_targets: None,
            max_nodes: default_max_nodes(),
            rhs_k: 0,
            solver: default_solver(),
            threads: default_threads(),
            condition: false,
            wall_time: true,
            quadrature: QuadratureConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies the `THREADS` environment variable, if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var("THREADS") {
            self.threads = v
                .trim()
                .parse()
                .ok()
                .filter(|&t: &usize| t > 0)
                .ok_or_else(|| Error::Config(format!("THREADS must be a positive integer, got {v:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.dimension != 1 && self.dimension != 2 {
            return fail(format!("dimension must be 1 or 2, got {}", self.dimension));
        }
        if self.s_values.is_empty() {
            return fail("s_values is empty".into());
        }
        for &s in &self.s_values {
            if !(s >= 0.5 && s < 1.0) {
                return fail(format!("s = {s} lies outside [1/2, 1)"));
            }
        }
        match self.grading {
            Grading::Mu1 | Grading::Mu2 if self.dimension != 1 => {
                return fail("mu1 and mu2 gradings are one-dimensional".into());
            }
            Grading::Mu2 if self.s_values.iter().any(|&s| s <= 0.5) => {
                return fail("mu2 grading needs s > 1/2".into());
            }
            Grading::Mu2d if self.dimension != 2 => return fail("mu2d grading is two-dimensional".into()),
            Grading::Explicit(mu) if !(mu >= 1.0) || (self.dimension == 2 && mu > 2.0) => {
                return fail(format!("explicit grading {mu} must be >= 1 (and <= 2 on the disk)"));
            }
            _ => {}
        }
        if self.threads == 0 {
            return fail("threads must be positive".into());
        }
        if let Solver::Cg(tol) = self.solver {
            if !(tol > 0.0 && tol < 1.0) {
                return fail(format!("cg tolerance must lie in (0, 1), got {tol}"));
            }
        }
        self.quadrature.validate().map_err(|e| Error::Config(e.to_string()))?;
        match &self.h_min_targets {
            Some(targets) => {
                if self.dimension != 1 || self.grading == Grading::Uniform {
                    return fail("h_min_targets applies to graded one-dimensional studies".into());
                }
                if !self.sizes.is_empty() {
                    return fail("give either sizes or h_min_targets, not both".into());
                }
                if targets.is_empty() || targets.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
                    return fail("h_min_targets must be nonempty and lie in (0, 1)".into());
                }
                if targets.windows(2).any(|w| w[1] >= w[0]) {
                    return fail("h_min_targets must decrease".into());
                }
                if self.max_nodes < 5 {
                    return fail("max_nodes must be at least 5".into());
                }
            }
            None => self.validate_sizes()?,
        }
        Ok(())
    }

    fn validate_sizes(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.sizes.is_empty() {
            return fail("sizes is empty".into());
        }
        if self.dimension == 1 {
            let min = if self.grading == Grading::Uniform { 3.0 } else { 5.0 };
            if self.sizes.iter().any(|&n| n.fract() != 0.0 || n < min) {
                return fail(format!("1D sizes are node counts of at least {min}"));
            }
            if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
                return fail("1D node counts must increase".into());
            }
        } else {
            if self.sizes.iter().any(|&h| !(h > 0.0 && h <= 0.5)) {
                return fail("2D sizes are mesh parameters in (0, 0.5]".into());
            }
            if self.sizes.windows(2).any(|w| w[1] >= w[0]) {
                return fail("2D mesh parameters must decrease".into());
            }
        }
        Ok(())
    }

    fn domain(&self) -> Domain {
        if self.dimension == 1 {
            Domain::Interval
        } else {
            Domain::UnitDisk
        }
    }

    /// Elements per half interval for graded 1D meshes aimed at `h_min_targets`.
    ///
    /// Each target gives `M = round(h_min^{-1/μ})`. When the finest would exceed
    /// `max_nodes`, the counts are respaced geometrically between the first one
    /// and the cap, so all meshes keep their smallest elements inside the
    /// requested range.
    pub fn target_half_counts(&self, mu: f64, targets: &[f64]) -> Vec<usize> {
        let cap = ((self.max_nodes - 1) / 2).max(2);
        let mut counts: Vec<usize> = targets.iter().map(|&t| (t.powf(-1.0 / mu).round() as usize).max(2)).collect();
        if counts.iter().any(|&m| m > cap) {
            let first = counts[0].min(cap) as f64;
            let k = counts.len();
            counts = (0..k)
                .map(|i| {
                    let f = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
                    (first * (cap as f64 / first).powf(f)).round() as usize
                })
                .collect();
        }
        counts.dedup();
        counts
    }

    /// Meshes of the sweep for index `s`, each with a label for error messages.
    pub fn meshes(&self, s: f64) -> Result<Vec<(String, Mesh)>> {
        let mu = self.grading.mu(s);
        if let Some(targets) = &self.h_min_targets {
            return self
                .target_half_counts(mu, targets)
                .into_iter()
                .map(|m| Ok((format!("N={}", 2 * m + 1), build_graded_1d(m, mu)?)))
                .collect();
        }
        self.sizes
            .iter()
            .map(|&size| {
                if self.dimension == 1 {
                    let n = size as usize;
                    let mesh = if self.grading == Grading::Uniform { build_uniform_1d(n)? } else { build_graded_1d((n - 1) / 2, mu)? };
                    Ok((format!("N={n}"), mesh))
                } else {
                    Ok((format!("h={size}"), build_disk_mesh(size, mu)?))
                }
            })
            .collect()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Least-squares orders of one sweep, NaN where a fit is impossible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedOrders {
    pub h1_dofs: f64,
    pub h1_h: f64,
    pub l2_dofs: f64,
    pub l2_h: f64,
    pub energy_dofs: f64,
    pub energy_h: f64,
}

impl FittedOrders {
    pub fn of(records: &[ConvergenceRecord]) -> Option<Self> {
        if records.len() < 3 {
            return None;
        }
        let fit = |x, y| fit_order_of(records, x, y).unwrap_or(f64::NAN);
        Some(Self {
            h1_dofs: fit(XField::Dofs, YField::H1),
            h1_h: fit(XField::H, YField::H1),
            l2_dofs: fit(XField::Dofs, YField::L2),
            l2_h: fit(XField::H, YField::L2),
            energy_dofs: fit(XField::Dofs, YField::Energy),
            energy_h: fit(XField::H, YField::Energy),
        })
    }
}

/// Records of one `s` value along its mesh family.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub s: f64,
    pub mu: f64,
    pub rhs_k: u32,
    pub records: Vec<ConvergenceRecord>,
    pub orders: Option<FittedOrders>,
    /// Error that stopped the sweep early, with its `(s, size)` context.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub sweeps: Vec<Sweep>,
}

/// Runs the sweeps described by `config`.
///
/// Configuration errors are returned; numerical errors end only the sweep
/// they occur in and are reported in [`Sweep::failure`].
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    Ok(run_study_for_rhs(config, &[config.rhs_k])?.remove(0))
}

/// Like [`run_study`] for several right-hand sides at once. Each stiffness
/// matrix is assembled once and reused for every `k`; the result holds one
/// study per entry of `ks`.
pub fn run_study_for_rhs(config: &StudyConfig, ks: &[u32]) -> Result<Vec<StudyResult>> {
    config.validate()?;
    if ks.is_empty() {
        return Err(Error::Config("no right-hand side requested".into()));
    }
    let per_s = with_threads(config.threads, || config.s_values.iter().map(|&s| sweep(config, s, ks)).collect::<Vec<_>>())?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut c = config.clone();
            c.rhs_k = k;
            StudyResult { config: c, sweeps: per_s.iter().map(|sweeps| sweeps[i].clone()).collect() }
        })
        .collect())
}

fn sweep(config: &StudyConfig, s: f64, ks: &[u32]) -> Vec<Sweep> {
    let mu = config.grading.mu(s);
    let mut out: Vec<Sweep> =
        ks.iter().map(|&k| Sweep { s, mu, rhs_k: k, records: Vec::new(), orders: None, failure: None }).collect();
    let meshes = match config.meshes(s) {
        Ok(m) => m,
        Err(e) => {
            for sw in &mut out {
                sw.failure = Some(format!("s={s}: {e}"));
            }
            return out;
        }
    };
    for (label, mesh) in &meshes {
        match run_cell(config, mesh, s, ks) {
            Ok(records) => {
                for (sw, r) in out.iter_mut().zip(records) {
                    sw.records.push(r);
                }
            }
            Err(e) => {
                for sw in &mut out {
                    sw.failure = Some(format!("s={s}, {label}: {e}"));
                }
                break;
            }
        }
    }
    for sw in &mut out {
        sw.orders = FittedOrders::of(&sw.records);
    }
    out
}

/// Solves `A u = b` with the configured solver.
fn solve_with(solver: Solver, a: &SymmetricMatrix, factor: Option<&crate::solve::Cholesky>, b: &LoadVector) -> Result<Vec<f64>> {
    match (solver, factor) {
        (Solver::Cholesky, Some(f)) => Ok(f.solve(&b.values)),
        (Solver::Cg(tol), _) => Ok(conjugate_gradient(a, &b.values, tol, 10 * a.dim().max(100))?.solution),
        (Solver::Cholesky, None) => Ok(cholesky(a)?.solve(&b.values)),
    }
}

/// One mesh of a sweep: assemble once, then solve and measure for every `k`.
pub fn run_cell(config: &StudyConfig, mesh: &Mesh, s: f64, ks: &[u32]) -> Result<Vec<ConvergenceRecord>> {
    let start = Instant::now();
    let opts = AssemblyOptions { quadrature: config.quadrature, check_integrity: false, ..AssemblyOptions::default() };
    let a = assemble_stiffness_with(mesh, s, &opts)?;
    let factor = match config.solver {
        Solver::Cholesky => Some(cholesky(&a).map_err(|e| match e {
            Error::Factorization { pivot, .. } => Error::AssemblyIntegrity { pivot },
            other => other,
        })?),
        Solver::Cg(_) => None,
    };
    let kappa = if config.condition { Some(condition_estimate(&a)?) } else { None };
    let shared = start.elapsed().as_secs_f64();
    let mut records = Vec::with_capacity(ks.len());
    for &k in ks {
        let own = Instant::now();
        let spec = ProblemSpec::new(config.domain(), s, k)?;
        let b = assemble_load_with(mesh, &spec, &config.quadrature)?;
        let u = solve_with(config.solver, &a, factor.as_ref(), &b)?;
        let fu = load_against_exact(mesh, &spec, &config.quadrature)?;
        let energy = energy_error_from(&a, &b, fu, &u)?;
        let sol = DiscreteSolution::new(mesh, u)?;
        let l2 = l2_error_with(&sol, &spec, &config.quadrature)?;
        let h1 = h1_error_with(&sol, &spec, &config.quadrature)?;
        records.push(ConvergenceRecord {
            s,
            mu: mesh.mu(),
            dofs: mesh.num_dofs(),
            h: mesh.h_param(),
            h_min: mesh.h_min(),
            l2,
            h1,
            energy,
            kappa,
            wall_time_seconds: config.wall_time.then(|| shared + own.elapsed().as_secs_f64()),
        });
    }
    Ok(records)
}

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 10] = ["s", "mu", "dofs", "h", "h_min", "l2", "h1", "energy", "kappa", "wall_time_seconds"];

/// Twelve significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_float(field: &str) -> Result<f64> {
    match field {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field.parse().map_err(|_| Error::Format(format!("not a number: {field:?}"))),
    }
}

/// CSV text of `records`, header included.
pub fn records_to_csv(records: &[ConvergenceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        w.write_record([
            format_float(r.s),
            format_float(r.mu),
            r.dofs.to_string(),
            format_float(r.h),
            format_float(r.h_min),
            format_float(r.l2),
            format_float(r.h1),
            format_float(r.energy),
            opt(r.kappa),
            opt(r.wall_time_seconds),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Parses CSV written by [`records_to_csv`]; columns may appear in any order.
pub fn records_from_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("CSV lacks the column {name:?}")))
    };
    let idx: Vec<usize> = CSV_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let f = |i: usize| parse_float(&row[idx[i]]);
        let opt = |i: usize| if row[idx[i]].is_empty() { Ok(None) } else { f(i).map(Some) };
        out.push(ConvergenceRecord {
            s: f(0)?,
            mu: f(1)?,
            dofs: row[idx[2]].parse().map_err(|_| Error::Format(format!("bad dof count {:?}", &row[idx[2]])))?,
            h: f(3)?,
            h_min: f(4)?,
            l2: f(5)?,
            h1: f(6)?,
            energy: f(7)?,
            kappa: opt(8)?,
            wall_time_seconds: opt(9)?,
        });
    }
    Ok(out)
}

/// Splits records into runs of equal `s`, in order of first appearance.
pub fn group_by_s(records: &[ConvergenceRecord]) -> Vec<(f64, Vec<ConvergenceRecord>)> {
    let mut groups: Vec<(f64, Vec<ConvergenceRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(s, _)| *s == r.s) {
            Some((_, g)) => g.push(*r),
            None => groups.push((r.s, vec![*r])),
        }
    }
    groups
}

impl StudyResult {
    pub fn records(&self) -> Vec<ConvergenceRecord> {
        self.sweeps.iter().flat_map(|s| s.records.iter().copied()).collect()
    }

    pub fn failed(&self) -> bool {
        self.sweeps.iter().any(|s| s.failure.is_some())
    }

    pub fn to_csv(&self) -> Result<String> {
        records_to_csv(&self.records())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Human-readable block with the fitted orders of every sweep.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "# dimension {} grading {:?} rhs k={}", c.dimension, c.grading, c.rhs_k);
        for sw in &self.sweeps {
            let dofs: Vec<String> = sw.records.iter().map(|r| r.dofs.to_string()).collect();
            let _ = write!(out, "s={} mu={:.4} dofs=[{}]", sw.s, sw.mu, dofs.join(","));
            match sw.orders {
                Some(o) => {
                    let _ = write!(
                        out,
                        " h1: {:.3} (dofs) {:.3} (h); l2: {:.3} (dofs) {:.3} (h); energy: {:.3} (dofs) {:.3} (h)",
                        o.h1_dofs, o.h1_h, o.l2_dofs, o.l2_h, o.energy_dofs, o.energy_h
                    );
                }
                None => out.push_str(" orders: need at least 3 meshes"),
            }
            if let Some(f) = &sw.failure {
                let _ = write!(out, " FAILED: {f}");
            }
            out.push('\n');
        }
        out
    }
}

/// `|u_h|_{H¹}` of one solve in a seminorm probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub nodes: usize,
    pub dofs: usize,
    pub h: f64,
    pub seminorm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub s: f64,
    pub records: Vec<ProbeRecord>,
    pub strictly_increasing: bool,
    /// Relative increase from the first to the last mesh.
    pub growth: f64,
}

/// Discrete H¹ seminorms of the `k = 0` solutions on uniform 1D meshes.
pub fn probe_seminorm(s: f64, nodes: &[usize], quadrature: &QuadratureConfig, threads: usize) -> Result<ProbeResult> {
    if nodes.is_empty() {
        return Err(Error::Config("the probe needs at least one mesh".into()));
    }
    let spec = ProblemSpec::new(Domain::Interval, s, 0)?;
    let records = with_threads(threads, || {
        nodes
            .iter()
            .map(|&n| {
                let mesh = build_uniform_1d(n)?;
                let opts = AssemblyOptions { quadrature: *quadrature, check_integrity: false, ..AssemblyOptions::default() };
                let a = assemble_stiffness_with(&mesh, s, &opts)?;
                let b = assemble_load_with(&mesh, &spec, quadrature)?;
                let u = cholesky(&a)?.solve(&b.values);
                if u.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain(format!("non-finite coefficients for N={n}")));
                }
                let sol = DiscreteSolution::new(&mesh, u)?;
                Ok(ProbeRecord { nodes: n, dofs: mesh.num_dofs(), h: mesh.h_param(), seminorm: h1_seminorm_discrete(&sol) })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let strictly_increasing = records.windows(2).all(|w| w[1].seminorm > w[0].seminorm);
    let growth = records.last().unwrap().seminorm / records[0].seminorm - 1.0;
    Ok(ProbeResult { s, records, strictly_increasing, growth })
}

/// The `s = 1/2` probe, where `u ∉ H¹` and `|u_h|_{H¹}` grows without bound.
pub fn probe_half(nodes: &[usize], quadrature: &QuadratureConfig, threads: usize) -> Result<ProbeResult> {
    probe_seminorm(0.5, nodes, quadrature, threads)
}

impl ProbeResult {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["s", "nodes", "dofs", "h", "h1_seminorm"])?;
        for r in &self.records {
            w.write_record([format_float(self.s), r.nodes.to_string(), r.dofs.to_string(), format_float(r.h), format_float(r.seminorm)])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Nodal values `(node, x, y, u_h)` including the zero boundary values.
pub fn solution_csv(sol: &DiscreteSolution) -> Result<String> {
    let mesh = sol.mesh;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "x", "y", "u_h"])?;
    for i in 0..mesh.num_nodes() {
        let p = mesh.point(i);
        let v = mesh.dof(i).map_or(0.0, |d| sol.coefficients[d]);
        w.write_record([i.to_string(), format_float(p[0]), format_float(p[1]), format_float(v)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Rows `(centroid_x, centroid_y, log10 |∇u_h|)` per triangle; zero gradients
/// are written as `-inf`.
pub fn gradient_field_csv(sol: &DiscreteSolution) -> Result<String> {
    let mesh = sol.mesh;
    if mesh.dim() != 2 {
        return Err(Error::Argument("gradient fields are exported for disk meshes only".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["centroid_x", "centroid_y", "log10_grad_norm"])?;
    for e in 0..mesh.num_elements() {
        let mut c = [0.0; 2];
        for &v in mesh.element(e) {
            let p = mesh.point(v);
            c[0] += p[0] / 3.0;
            c[1] += p[1] / 3.0;
        }
        let g = sol.gradient_in(e);
        let norm = g[0].hypot(g[1]);
        let log = if norm > 0.0 { format_float(norm.log10()) } else { "-inf".into() };
        w.write_record([format_float(c[0]), format_float(c[1]), log])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn export_gradient_field(sol: &DiscreteSolution, path: impl AsRef<Path>) -> Result<()> {
    let text = gradient_field_csv(sol)?;
    std::fs::write(path, text)?;
    Ok(())
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn field_name(x: XField) -> &'static str {
    match x {
        XField::H => "h",
        XField::Dofs => "dofs",
    }
}

fn error_name(y: YField) -> &'static str {
    match y {
        YField::L2 => "L2 error",
        YField::H1 => "H1 error",
        YField::Energy => "energy error",
    }
}

/// Log-log SVG of `y_field` against `x_field`, one polyline per `s`, with the
/// fitted order of every series in the legend.
pub fn plot_svg(records: &[ConvergenceRecord], x_field: XField, y_field: YField) -> Result<String> {
    let groups = group_by_s(records);
    if groups.is_empty() {
        return Err(Error::Format("no data to plot".into()));
    }
    let mut series = Vec::new();
    for (s, recs) in &groups {
        let pts: Vec<(f64, f64)> = recs
            .iter()
            .map(|r| (r.x(x_field), r.y(y_field)))
            .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
            .map(|(x, y)| (x.log10(), y.log10()))
            .collect();
        if pts.is_empty() {
            return Err(Error::Format(format!("series s={s} has no positive data")));
        }
        let order = fit_order_of(recs, x_field, y_field).ok();
        series.push((*s, pts, order));
    }
    let all = series.iter().flat_map(|(_, p, _)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(0.2);
        let mid = 0.5 * (lo + hi);
        (mid - 0.55 * span, mid + 0.55 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let (w, h, left, right, top, bottom) = (680.0, 440.0, 80.0, 190.0, 30.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let ticks = |lo: f64, hi: f64| -> Vec<f64> {
        let t: Vec<f64> = (lo.ceil() as i64..=hi.floor() as i64).map(|d| d as f64).collect();
        if t.is_empty() {
            vec![lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)]
        } else {
            t
        }
    };
    let label = |v: f64| {
        if v.fract() == 0.0 {
            format!("1e{}", v as i64)
        } else {
            format!("{:.3}", 10f64.powf(v))
        }
    };
    for t in ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#bbbbbb" stroke-dasharray="2,3"/>"##, top, top + ph);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 18.0, label(t));
    }
    for t in ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(svg, r##"<line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#bbbbbb" stroke-dasharray="2,3"/>"##, left + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, label(t));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, left + 0.5 * pw, h - 15.0, field_name(x_field));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        top + 0.5 * ph,
        top + 0.5 * ph,
        error_name(y_field)
    );
    for (i, (s, pts, order)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = top + 16.0 + 20.0 * i as f64;
        let lx = left + pw + 14.0;
        let slope = order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">s={s}: order {slope}</text>"#, lx + 28.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads a study CSV and writes its log-log plot. Nothing is written on error.
pub fn emit_plot(csv_path: impl AsRef<Path>, x_field: XField, y_field: YField, out_svg: impl AsRef<Path>) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)?;
    let svg = plot_svg(&records_from_csv(&text)?, x_field, y_field)?;
    std::fs::write(out_svg, svg)?;
    Ok(())
}

/// Slope of `ln κ` against `ln dofs` for uniform 1D meshes.
pub fn condition_slope(s: f64, nodes: &[usize], quadrature: &QuadratureConfig) -> Result<(f64, Vec<f64>)> {
    let mut dofs = Vec::new();
    let mut kappa = Vec::new();
    for &n in nodes {
        let mesh = build_uniform_1d(n)?;
        let opts = AssemblyOptions { quadrature: *quadrature, ..AssemblyOptions::default() };
        let a = assemble_stiffness_with(&mesh, s, &opts)?;
        dofs.push(mesh.num_dofs() as f64);
        kappa.push(condition_estimate(&a)?);
    }
    Ok((loglog_slope(&dofs, &kappa)?, kappa))
}
