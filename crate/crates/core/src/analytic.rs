//! Special functions and the closed-form benchmark family on the unit ball.
//!
//! For the right-hand side `f(x) = P_k^{(s, n/2-1)}(2|x|^2 - 1)` the Dirichlet
//! problem for the fractional Laplacian on the unit ball has the explicit
//! solution
//!
//! ```text
//! u(x) = k! Γ(n/2 + k) / (2^{2s} Γ(1 + s + k) Γ(n/2 + s + k)) · (1 - |x|^2)_+^s · P_k^{(s, n/2-1)}(2|x|^2 - 1)
//! ```
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Computational domain: the interval (-1, 1) or the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval,
    UnitDisk,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Interval => 1,
            Domain::UnitDisk => 2,
        }
    }

    pub fn from_dim(n: usize) -> Result<Domain> {
        match n {
            1 => Ok(Domain::Interval),
            2 => Ok(Domain::UnitDisk),
            _ => Err(Error::Argument(format!("dimension must be 1 or 2, got {n}"))),
        }
    }

    /// Lebesgue measure of the exact domain.
    pub fn measure(self) -> f64 {
        match self {
            Domain::Interval => 2.0,
            Domain::UnitDisk => PI,
        }
    }

    /// Surface measure of the unit sphere in this dimension (2 points, or the circle).
    pub fn sphere_measure(self) -> f64 {
        match self {
            Domain::Interval => 2.0,
            Domain::UnitDisk => 2.0 * PI,
        }
    }
}

/// One member of the benchmark family: domain, fractional index `s` and
/// Jacobi index `k` of the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub s: f64,
    pub k: u32,
}

impl ProblemSpec {
    pub fn new(domain: Domain, s: f64, k: u32) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional index s = {s} must lie in (0, 1)")));
        }
        Ok(Self { domain, s, k })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Second Jacobi parameter `n/2 - 1`.
    pub fn beta(&self) -> f64 {
        self.dim() as f64 / 2.0 - 1.0
    }
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_fn requires a positive argument, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Normalization constant `C(n,s) = 2^{2s} s Γ(s + n/2) / (π^{n/2} Γ(1 - s))`
/// of the singular-integral form of the fractional Laplacian.
pub fn normalization_constant(n: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("normalization constant needs s in (0,1), got {s}")));
    }
    if n != 1 && n != 2 {
        return Err(Error::Argument(format!("dimension must be 1 or 2, got {n}")));
    }
    let half_n = n as f64 / 2.0;
    Ok(4f64.powf(s) * s * gamma_fn(s + half_n)? / (PI.powf(half_n) * gamma_fn(1.0 - s)?))
}

/// Jacobi polynomial `P_k^{(alpha, beta)}(z)`.
///
/// Degrees up to 2 use the explicit hypergeometric sum; higher degrees use
/// the three-term recurrence.
pub fn jacobi_poly(k: u32, alpha: f64, beta: f64, z: f64) -> f64 {
    debug_assert!(alpha > -1.0 && beta > -1.0);
    if k <= 2 {
        jacobi_explicit(k, alpha, beta, z)
    } else {
        jacobi_recurrence(k, alpha, beta, z)
    }
}

/// Explicit sum
/// `Γ(α+k+1)/(k! Γ(α+β+k+1)) Σ_m C(k,m) Γ(α+β+k+m+1)/Γ(α+m+1) ((z-1)/2)^m`,
/// with the Gamma ratios written as rising factorials.
pub(crate) fn jacobi_explicit(k: u32, alpha: f64, beta: f64, z: f64) -> f64 {
    let k = k as usize;
    let w = (z - 1.0) / 2.0;
    let mut factorial_k = 1.0;
    for i in 1..=k {
        factorial_k *= i as f64;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut wm = 1.0;
    for m in 0..=k {
        // Γ(α+k+1)/Γ(α+m+1) = (α+m+1)_{k-m}
        let mut upper = 1.0;
        for i in m..k {
            upper *= alpha + i as f64 + 1.0;
        }
        // Γ(α+β+k+m+1)/Γ(α+β+k+1) = (α+β+k+1)_m
        let mut rising = 1.0;
        for i in 0..m {
            rising *= alpha + beta + (k + i) as f64 + 1.0;
        }
        sum += binom * upper * rising * wm;
        binom = binom * (k - m) as f64 / (m + 1) as f64;
        wm *= w;
    }
    sum / factorial_k
}

fn jacobi_recurrence(k: u32, alpha: f64, beta: f64, z: f64) -> f64 {
    let ab = alpha + beta;
    let mut p_prev = 1.0;
    let mut p = (alpha + 1.0) + (ab + 2.0) * (z - 1.0) / 2.0;
    for n in 2..=k {
        let n = n as f64;
        let c = 2.0 * n + ab;
        let a1 = 2.0 * n * (n + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * z + alpha * alpha - beta * beta);
        let a3 = 2.0 * (n + alpha - 1.0) * (n + beta - 1.0) * c;
        let next = (a2 * p - a3 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    p
}

/// Derivative of `P_k^{(alpha,beta)}` with respect to its argument.
pub fn jacobi_poly_derivative(k: u32, alpha: f64, beta: f64, z: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (k as f64 + alpha + beta + 1.0) / 2.0 * jacobi_poly(k - 1, alpha + 1.0, beta + 1.0, z)
}

/// Precomputed closed-form solution for one [`ProblemSpec`].
///
/// The radial entry points take both `|x|^2` and `1 - |x|^2`; callers that can
/// form the distance to the boundary without cancellation (1D meshes graded
/// down to 1e-9) pass it in directly.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    spec: ProblemSpec,
    scale: f64,
}

impl ExactSolution {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        let n = spec.dim() as f64;
        let s = spec.s;
        let k = spec.k as f64;
        let mut factorial_k = 1.0;
        for i in 1..=spec.k {
            factorial_k *= i as f64;
        }
        let scale = factorial_k * gamma_fn(n / 2.0 + k)?
            / (4f64.powf(s) * gamma_fn(1.0 + s + k)? * gamma_fn(n / 2.0 + s + k)?);
        Ok(Self { spec, scale })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// Constant in front of `ω^s P_k`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn poly(&self, rho2: f64) -> f64 {
        jacobi_poly(self.spec.k, self.spec.s, self.spec.beta(), 2.0 * rho2 - 1.0)
    }

    fn poly_derivative(&self, rho2: f64) -> f64 {
        jacobi_poly_derivative(self.spec.k, self.spec.s, self.spec.beta(), 2.0 * rho2 - 1.0)
    }

    /// Right-hand side as a function of `|x|^2`.
    pub fn rhs_radial(&self, rho2: f64) -> f64 {
        self.poly(rho2)
    }

    /// Solution value from `|x|^2` and `q = 1 - |x|^2`.
    pub fn value_radial(&self, rho2: f64, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        self.scale * (self.spec.s * q.ln()).exp() * self.poly(rho2)
    }

    /// Factor `g` with `∇u(x) = g · x`; requires `q = 1 - |x|^2 > 0`.
    pub fn gradient_factor(&self, rho2: f64, q: f64) -> f64 {
        let s = self.spec.s;
        let weight = ((s - 1.0) * q.ln()).exp();
        2.0 * self.scale * weight * (-s * self.poly(rho2) + 2.0 * q * self.poly_derivative(rho2))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let rho2 = norm2(x);
        if rho2 >= 1.0 {
            return 0.0;
        }
        let log_weight = (-rho2).ln_1p();
        self.scale * (self.spec.s * log_weight).exp() * self.poly(rho2)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rho2 = norm2(x);
        if rho2 >= 1.0 {
            return Err(Error::Domain(format!(
                "gradient of the exact solution is unbounded at |x| = {}",
                rho2.sqrt()
            )));
        }
        let q = 1.0 - rho2;
        let g = self.gradient_factor(rho2, q);
        Ok(x.iter().map(|xi| g * xi).collect())
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Right-hand side `f(x) = P_k^{(s, n/2-1)}(2|x|^2 - 1)`.
pub fn exact_rhs(spec: &ProblemSpec, x: &[f64]) -> f64 {
    jacobi_poly(spec.k, spec.s, spec.beta(), 2.0 * norm2(x) - 1.0)
}

/// Closed-form solution, zero outside the unit ball.
pub fn exact_solution(spec: &ProblemSpec, x: &[f64]) -> Result<f64> {
    Ok(ExactSolution::new(*spec)?.value(x))
}

/// Gradient of the closed-form solution at an interior point.
pub fn exact_gradient(spec: &ProblemSpec, x: &[f64]) -> Result<Vec<f64>> {
    ExactSolution::new(*spec)?.gradient(x)
}
