//! Error norms of discrete solutions against the closed-form solution, and
//! least-squares convergence orders.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{ExactSolution, ProblemSpec};
use crate::assembly::{LoadVector, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{element_rule, segment_rule, QuadPoint, QuadratureConfig, RuleKind};
use crate::solve::DiscreteSolution;

/// Squared energy errors this far below zero are treated as rounding.
pub const ENERGY_CLAMP: f64 = 1e-10;

/// Errors of one discrete solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
    pub dofs: usize,
    pub h: f64,
    pub h_min: f64,
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub s: f64,
    pub mu: f64,
    pub dofs: usize,
    pub h: f64,
    pub h_min: f64,
    pub l2: f64,
    pub h1: f64,
    pub energy: f64,
    pub kappa: Option<f64>,
    /// Absent when timing is switched off for byte-stable output.
    pub wall_time_seconds: Option<f64>,
}

/// Abscissa of an order fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XField {
    H,
    Dofs,
}

/// Error quantity of an order fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YField {
    L2,
    H1,
    Energy,
}

impl ConvergenceRecord {
    pub fn x(&self, field: XField) -> f64 {
        match field {
            XField::H => self.h,
            XField::Dofs => self.dofs as f64,
        }
    }

    pub fn y(&self, field: YField) -> f64 {
        match field {
            YField::L2 => self.l2,
            YField::H1 => self.h1,
            YField::Energy => self.energy,
        }
    }
}

fn check_spec(mesh: &Mesh, spec: &ProblemSpec) -> Result<ExactSolution> {
    if spec.dim() != mesh.dim() {
        return Err(Error::Argument(format!(
            "problem is posed in {} dimensions but the mesh has {}",
            spec.dim(),
            mesh.dim()
        )));
    }
    ExactSolution::new(*spec)
}

/// Sums `f` over the error quadrature of every element, in element order.
fn integrate(mesh: &Mesh, s: f64, cfg: &QuadratureConfig, f: impl Fn(usize, &QuadPoint) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| element_rule(mesh, e, s, RuleKind::Error, cfg).iter().map(|p| p.w * f(e, p)).sum())
        .collect();
    parts.iter().sum()
}

/// Integral over `Ω \ Ω_h`, where discrete functions vanish; zero in 1D.
fn segments(mesh: &Mesh, s: f64, cfg: &QuadratureConfig, f: impl Fn(&QuadPoint) -> f64) -> f64 {
    segment_rule(mesh, s, cfg).iter().map(|p| p.w * f(p)).sum()
}

/// `‖u - u_h‖_{L²(Ω)}` with `u_h` extended by zero outside the mesh.
pub fn l2_error(sol: &DiscreteSolution, spec: &ProblemSpec) -> Result<f64> {
    l2_error_with(sol, spec, &QuadratureConfig::default())
}

pub fn l2_error_with(sol: &DiscreteSolution, spec: &ProblemSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let exact = check_spec(sol.mesh, spec)?;
    let u = |x: [f64; 2], q: f64| exact.value_radial(x[0] * x[0] + x[1] * x[1], q);
    let inside = l2_distance(sol, spec.s, cfg, u);
    let outside = segments(sol.mesh, spec.s, cfg, |p| u(p.x, p.q).powi(2));
    Ok((inside * inside + outside).sqrt())
}

/// `‖u - u_h‖_{L²(Ω)}` for a field `u(x, 1 - |x|²)`, integrated with the
/// boundary-graded rules for index `s`.
pub fn l2_distance(sol: &DiscreteSolution, s: f64, cfg: &QuadratureConfig, u: impl Fn([f64; 2], f64) -> f64 + Sync) -> f64 {
    let sq = integrate(sol.mesh, s, cfg, |e, p| {
        let d = u(p.x, p.q) - sol.value_in(e, &p.bary);
        d * d
    });
    sq.max(0.0).sqrt()
}

/// `|u - u_h|_{H¹(Ω)}`, with rules graded toward the boundary where `∇u`
/// blows up like `(1 - |x|²)^{s-1}`. On the disk this includes `|u|_{H¹}` over
/// the segments between the polygonal mesh and the circle, which carry much
/// of the singular gradient.
pub fn h1_error(sol: &DiscreteSolution, spec: &ProblemSpec) -> Result<f64> {
    h1_error_with(sol, spec, &QuadratureConfig::default())
}

pub fn h1_error_with(sol: &DiscreteSolution, spec: &ProblemSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let exact = check_spec(sol.mesh, spec)?;
    let grad = |x: [f64; 2], q: f64| {
        if q <= 0.0 {
            return [0.0; 2];
        }
        let g = exact.gradient_factor(x[0] * x[0] + x[1] * x[1], q);
        [g * x[0], g * x[1]]
    };
    let inside = h1_distance(sol, spec.s, cfg, grad);
    let outside = segments(sol.mesh, spec.s, cfg, |p| {
        let g = grad(p.x, p.q);
        g[0] * g[0] + g[1] * g[1]
    });
    Ok((inside * inside + outside).sqrt())
}

/// `|u - u_h|_{H¹(Ω)}` for a field given by its gradient `∇u(x, 1 - |x|²)`.
pub fn h1_distance(
    sol: &DiscreteSolution,
    s: f64,
    cfg: &QuadratureConfig,
    grad: impl Fn([f64; 2], f64) -> [f64; 2] + Sync,
) -> f64 {
    let grads: Vec<[f64; 2]> = (0..sol.mesh.num_elements()).map(|e| sol.gradient_in(e)).collect();
    let sq = integrate(sol.mesh, s, cfg, |e, p| {
        let g = grad(p.x, p.q);
        let (dx, dy) = (g[0] - grads[e][0], g[1] - grads[e][1]);
        dx * dx + dy * dy
    });
    sq.max(0.0).sqrt()
}

/// `|u_h|_{H¹(Ω)}`, exact because P1 gradients are elementwise constant.
pub fn h1_seminorm_discrete(sol: &DiscreteSolution) -> f64 {
    let mesh = sol.mesh;
    let sq: f64 = (0..mesh.num_elements())
        .map(|e| {
            let g = sol.gradient_in(e);
            (g[0] * g[0] + g[1] * g[1]) * mesh.measure(e)
        })
        .sum();
    sq.sqrt()
}

/// `⟨f, u⟩` over Ω for the closed-form solution.
pub fn load_against_exact(mesh: &Mesh, spec: &ProblemSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let exact = check_spec(mesh, spec)?;
    let fu = |p: &QuadPoint| {
        let r2 = p.x[0] * p.x[0] + p.x[1] * p.x[1];
        exact.rhs_radial(r2) * exact.value_radial(r2, p.q)
    };
    Ok(integrate(mesh, spec.s, cfg, |_, p| fu(p)) + segments(mesh, spec.s, cfg, fu))
}

/// Squared energy error `⟨f,u⟩ - 2 b·c + cᵀAc` before clamping.
pub fn energy_error_squared(a: &SymmetricMatrix, b: &LoadVector, fu: f64, coefficients: &[f64]) -> Result<f64> {
    if a.dim() != b.dim() || a.dim() != coefficients.len() {
        return Err(Error::Argument(format!(
            "matrix, load and coefficients have dimensions {}, {} and {}",
            a.dim(),
            b.dim(),
            coefficients.len()
        )));
    }
    Ok(fu - 2.0 * b.dot(coefficients) + a.quadratic_form(coefficients))
}

fn clamp_energy(sq: f64) -> Result<f64> {
    if sq >= 0.0 {
        Ok(sq.sqrt())
    } else if sq >= -ENERGY_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Domain(format!("squared energy error {sq:e} is negative beyond rounding")))
    }
}

/// Energy-norm error `‖u - u_h‖` through `a(u, v) = ⟨f, v⟩`.
pub fn energy_error(a: &SymmetricMatrix, b: &LoadVector, sol: &DiscreteSolution, spec: &ProblemSpec) -> Result<f64> {
    let fu = load_against_exact(sol.mesh, spec, &QuadratureConfig::default())?;
    clamp_energy(energy_error_squared(a, b, fu, &sol.coefficients)?)
}

/// Energy error from a precomputed `⟨f, u⟩`, for comparing many coefficient
/// vectors on one mesh.
pub fn energy_error_from(a: &SymmetricMatrix, b: &LoadVector, fu: f64, coefficients: &[f64]) -> Result<f64> {
    clamp_energy(energy_error_squared(a, b, fu, coefficients)?)
}

/// All three errors of `sol`, which must be the Galerkin solution for `a`, `b`.
pub fn error_report(a: &SymmetricMatrix, b: &LoadVector, sol: &DiscreteSolution, spec: &ProblemSpec) -> Result<ErrorReport> {
    Ok(ErrorReport {
        l2: l2_error(sol, spec)?,
        h1_semi: h1_error(sol, spec)?,
        energy: energy_error(a, b, sol, spec)?,
        dofs: sol.mesh.num_dofs(),
        h: sol.mesh.h_param(),
        h_min: sol.mesh.h_min(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument("abscissae and ordinates differ in length".into()));
    }
    if x.len() < 3 {
        return Err(Error::Argument(format!("an order fit needs at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Argument("order fits need positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("order fits need at least two distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Convergence order of the H¹ error against `x_field`.
pub fn fit_order(records: &[ConvergenceRecord], x_field: XField) -> Result<f64> {
    fit_order_of(records, x_field, YField::H1)
}

/// Convergence order of `y_field`, positive when the error decreases: the
/// slope itself against `h`, minus the slope against dofs.
pub fn fit_order_of(records: &[ConvergenceRecord], x_field: XField, y_field: YField) -> Result<f64> {
    let x: Vec<f64> = records.iter().map(|r| r.x(x_field)).collect();
    let y: Vec<f64> = records.iter().map(|r| r.y(y_field)).collect();
    let slope = loglog_slope(&x, &y)?;
    Ok(match x_field {
        XField::H => slope,
        XField::Dofs => -slope,
    })
}
