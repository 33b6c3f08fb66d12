//! Dense symmetric positive definite solves and conditioning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{LoadVector, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Lower-triangular Cholesky factor `A = L Lᵀ`, packed like [`SymmetricMatrix`].
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four partial sums let the compiler vectorize without reassociation flags
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Row-oriented Cholesky factorization.
pub fn cholesky(a: &SymmetricMatrix) -> Result<Cholesky> {
    let n = a.dim();
    let mut l = a.packed_data().to_vec();
    for i in 0..n {
        let si = row_start(i);
        for j in 0..=i {
            let sj = row_start(j);
            let s = dot(&l[si..si + j], &l[sj..sj + j]);
            let v = l[si + j] - s;
            if j == i {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Factorization { pivot: i, value: v });
                }
                l[si + i] = v.sqrt();
            } else {
                l[si + j] = v / l[sj + j];
            }
        }
    }
    Ok(Cholesky { dim: n, l })
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        assert_eq!(b.len(), n, "right-hand side length must match the matrix dimension");
        let mut y = b.to_vec();
        for i in 0..n {
            let si = row_start(i);
            let s = dot(&self.l[si..si + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[si + i];
        }
        for i in (0..n).rev() {
            let si = row_start(i);
            y[i] /= self.l[si + i];
            let yi = y[i];
            for (j, &lij) in self.l[si..si + i].iter().enumerate() {
                y[j] -= lij * yi;
            }
        }
        y
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| 2.0 * self.l[row_start(i) + i].ln()).sum()
    }
}

/// Solves `A u = b` with a Cholesky factorization.
pub fn solve_spd(a: &SymmetricMatrix, b: &LoadVector) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!("matrix has dimension {} but the load has {}", a.dim(), b.dim())));
    }
    Ok(cholesky(a)?.solve(&b.values))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Power iteration on `op`, returning the dominant eigenvalue once two
/// successive Rayleigh quotients agree to `tol`.
fn power_iteration(n: usize, tol: f64, op: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| 1.0 + 0.1 * rng.gen::<f64>()).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let y = op(&x);
        let next: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Tolerance on successive Rayleigh quotients. The quotient error is quadratic
/// in the eigenvector error, so this leaves the eigenvalues well inside 1e-3.
const POWER_TOL: f64 = 1e-7;

/// Estimate of the spectral condition number `λ_max / λ_min`.
pub fn condition_estimate(a: &SymmetricMatrix) -> Result<f64> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::Argument("condition number of an empty matrix".into()));
    }
    let factor = cholesky(a)?;
    let lmax = power_iteration(n, POWER_TOL, |x| a.matvec(x));
    let inv_max = power_iteration(n, POWER_TOL, |x| factor.solve(x));
    Ok(lmax * inv_max)
}

/// Result of [`conjugate_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients, stopping at `‖r‖ ≤ tol ‖b‖`.
pub fn conjugate_gradient(a: &SymmetricMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Argument(format!("matrix has dimension {n} but the right-hand side has {}", b.len())));
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Argument("Jacobi preconditioning needs a positive diagonal".into()));
    }
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(CgOutcome { solution: x, iterations: 0, relative_residual: 0.0 });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let res = if pap > 0.0 && pap.is_finite() {
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            norm(&r) / nb
        } else {
            0.0
        };
        if res <= tol {
            // the recursive residual drifts from b - Ax; accept only the true one
            let ax = a.matvec(&x);
            for k in 0..n {
                r[k] = b[k] - ax[k];
            }
            let true_res = norm(&r) / nb;
            if true_res <= tol {
                return Ok(CgOutcome { solution: x, iterations: it, relative_residual: true_res });
            }
            for k in 0..n {
                p[k] = r[k] / diag[k];
            }
            z.copy_from_slice(&p);
            rz = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            continue;
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: norm(&r) / nb })
}

/// `‖A u - b‖ / ‖b‖`.
pub fn relative_residual(a: &SymmetricMatrix, u: &[f64], b: &[f64]) -> f64 {
    let au = a.matvec(u);
    let r: Vec<f64> = au.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&r) / norm(b).max(f64::MIN_POSITIVE)
}

/// Finite element function given by its interior coefficients.
#[derive(Debug, Clone)]
pub struct DiscreteSolution<'m> {
    pub mesh: &'m Mesh,
    pub coefficients: Vec<f64>,
}

impl<'m> DiscreteSolution<'m> {
    pub fn new(mesh: &'m Mesh, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != mesh.num_dofs() {
            return Err(Error::Argument(format!(
                "mesh has {} degrees of freedom but {} coefficients were given",
                mesh.num_dofs(),
                coefficients.len()
            )));
        }
        Ok(Self { mesh, coefficients })
    }

    /// Interpolant of `f` at the interior nodes.
    pub fn interpolate(mesh: &'m Mesh, f: impl Fn(&[f64]) -> f64) -> Self {
        let coefficients = mesh.interior_nodes().iter().map(|&v| f(mesh.node(v))).collect();
        Self { mesh, coefficients }
    }

    /// Value at mesh node `v` (zero on the boundary).
    pub fn node_value(&self, v: usize) -> f64 {
        self.mesh.dof(v).map_or(0.0, |i| self.coefficients[i])
    }

    /// Values at all mesh nodes.
    pub fn nodal_values(&self) -> Vec<f64> {
        (0..self.mesh.num_nodes()).map(|v| self.node_value(v)).collect()
    }

    /// Value inside element `e` at barycentric coordinates `bary`.
    pub fn value_in(&self, e: usize, bary: &[f64; 3]) -> f64 {
        self.mesh.element(e).iter().zip(bary).map(|(&v, &l)| l * self.node_value(v)).sum()
    }

    /// Constant gradient on element `e` (second component zero in 1D).
    pub fn gradient_in(&self, e: usize) -> [f64; 2] {
        let v = self.mesh.element(e);
        if self.mesh.dim() == 1 {
            let (x0, x1) = (self.mesh.node(v[0])[0], self.mesh.node(v[1])[0]);
            return [(self.node_value(v[1]) - self.node_value(v[0])) / (x1 - x0), 0.0];
        }
        let p: Vec<[f64; 2]> = v.iter().map(|&i| self.mesh.point(i)).collect();
        let u: Vec<f64> = v.iter().map(|&i| self.node_value(i)).collect();
        let (e1, e2) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
        let (d1, d2) = (u[1] - u[0], u[2] - u[0]);
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        [(d1 * e2[1] - d2 * e1[1]) / det, (e1[0] * d2 - e2[0] * d1) / det]
    }
}
