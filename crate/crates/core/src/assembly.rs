//! Stiffness matrix and load vector of the Galerkin system.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::analytic::{normalization_constant, ExactSolution, ProblemSpec};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{element_rule, pair_local, tail_local, QuadratureConfig, RuleKind};

/// Dense symmetric matrix stored as its packed lower triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a full square matrix, reading only the lower triangle.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Argument("matrix rows must all have the matrix dimension".into()));
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&row[..=i]);
        }
        Ok(m)
    }

    /// Builds from a packed lower triangle.
    pub fn from_packed(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * (dim + 1) / 2 {
            return Err(Error::Argument(format!(
                "packed lower triangle of a {dim}x{dim} matrix needs {} entries, got {}",
                dim * (dim + 1) / 2,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] += v;
    }

    /// Entries `(i, 0..=i)`.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let start = i * (i + 1) / 2;
        &mut self.data[start..start + i + 1]
    }

    pub fn packed_data(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "vector length must match the matrix dimension");
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = self.row(i);
            let mut acc = 0.0;
            for (j, &a) in row[..i].iter().enumerate() {
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + row[i] * x[i];
        }
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Writes the debug dump: the dof count as a little-endian `u64`, then the
    /// packed lower triangle as little-endian `f64`.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let dim = usize::try_from(u64::from_le_bytes(word))
            .map_err(|_| Error::Format("matrix dump dimension does not fit in memory".into()))?;
        let len = dim
            .checked_mul(dim + 1)
            .map(|v| v / 2)
            .ok_or_else(|| Error::Format("matrix dump dimension overflows".into()))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            r.read_exact(&mut word).map_err(|_| Error::Format("matrix dump is truncated".into()))?;
            data.push(f64::from_le_bytes(word));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format("trailing bytes after matrix dump".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_binary(&mut f)
    }
}

/// Discrete right-hand side `b_i = ∫ f φ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub values: Vec<f64>,
}

impl LoadVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.values.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Settings for [`assemble_stiffness_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub quadrature: QuadratureConfig,
    /// Factorize the assembled matrix and report an integrity error on failure.
    pub check_integrity: bool,
    /// Number of leading elements handled per parallel batch.
    pub batch: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quadrature: QuadratureConfig::default(), check_integrity: true, batch: 32 }
    }
}

/// Contributions of all pairs `(a, b)` with `b ≥ a`, as packed positions and values
/// in a fixed order.
fn row_contributions(mesh: &Mesh, a: usize, s: f64, c: f64, cfg: &QuadratureConfig) -> Vec<(usize, f64)> {
    let has_dof = |e: usize| mesh.element(e).iter().any(|&v| mesh.dof(v).is_some());
    let a_has = has_dof(a);
    let mut out = Vec::new();
    for b in a..mesh.num_elements() {
        if !a_has && !has_dof(b) {
            continue;
        }
        let local = pair_local(mesh, a, b, s, cfg);
        let factor = if a == b { 0.5 * c } else { c };
        let dofs: Vec<Option<usize>> = local.nodes[..local.n].iter().map(|&v| mesh.dof(v)).collect();
        for (k, dk) in dofs.iter().enumerate() {
            let Some(i) = *dk else { continue };
            for (l, dl) in dofs.iter().enumerate().take(k + 1) {
                let Some(j) = *dl else { continue };
                out.push((packed(i, j), factor * local.m[k][l]));
            }
        }
    }
    if a_has {
        let tail = tail_local(mesh, a, s, cfg);
        let va = mesh.element(a);
        for k in 0..va.len() {
            let Some(i) = mesh.dof(va[k]) else { continue };
            for l in 0..=k {
                let Some(j) = mesh.dof(va[l]) else { continue };
                out.push((packed(i, j), c * tail[k][l]));
            }
        }
    }
    out
}

/// Stiffness matrix with default quadrature and the integrity check.
pub fn assemble_stiffness(mesh: &Mesh, s: f64) -> Result<SymmetricMatrix> {
    assemble_stiffness_with(mesh, s, &AssemblyOptions::default())
}

/// Stiffness matrix `A_ij = C/2 ∬ (φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y)) K + C ∫ φ_i φ_j ω`.
///
/// Element pairs are visited with `a ≤ b`. Batches of leading elements are
/// integrated in parallel and their contributions are added in element order,
/// so the result does not depend on the number of threads.
pub fn assemble_stiffness_with(mesh: &Mesh, s: f64, opts: &AssemblyOptions) -> Result<SymmetricMatrix> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("fractional index must lie in (0, 1), got {s}")));
    }
    opts.quadrature.validate()?;
    let c = normalization_constant(mesh.dim(), s)?;
    let mut matrix = SymmetricMatrix::zeros(mesh.num_dofs());
    let ne = mesh.num_elements();
    let batch = opts.batch.max(1);
    let mut start = 0;
    while start < ne {
        let end = (start + batch).min(ne);
        let parts: Vec<Vec<(usize, f64)>> =
            (start..end).into_par_iter().map(|a| row_contributions(mesh, a, s, c, &opts.quadrature)).collect();
        for part in parts {
            for (pos, v) in part {
                matrix.data[pos] += v;
            }
        }
        start = end;
    }
    if matrix.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::AssemblyIntegrity { pivot: 0 });
    }
    if opts.check_integrity {
        crate::solve::cholesky(&matrix).map_err(|e| match e {
            Error::Factorization { pivot, .. } => Error::AssemblyIntegrity { pivot },
            other => other,
        })?;
    }
    Ok(matrix)
}

/// Load vector with the default quadrature.
pub fn assemble_load(mesh: &Mesh, spec: &ProblemSpec) -> Result<LoadVector> {
    assemble_load_with(mesh, spec, &QuadratureConfig::default())
}

pub fn assemble_load_with(mesh: &Mesh, spec: &ProblemSpec, cfg: &QuadratureConfig) -> Result<LoadVector> {
    if spec.dim() != mesh.dim() {
        return Err(Error::Argument(format!(
            "problem is posed in {} dimensions but the mesh has {}",
            spec.dim(),
            mesh.dim()
        )));
    }
    let exact = ExactSolution::new(*spec)?;
    let per_element: Vec<[f64; 3]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut acc = [0.0; 3];
            for p in element_rule(mesh, e, spec.s, RuleKind::Load, cfg) {
                let f = exact.rhs_radial(p.x[0] * p.x[0] + p.x[1] * p.x[1]);
                for k in 0..3 {
                    acc[k] += p.w * f * p.bary[k];
                }
            }
            acc
        })
        .collect();
    let mut values = vec![0.0; mesh.num_dofs()];
    for (e, acc) in per_element.iter().enumerate() {
        for (k, &v) in mesh.element(e).iter().enumerate() {
            if let Some(i) = mesh.dof(v) {
                values[i] += acc[k];
            }
        }
    }
    Ok(LoadVector { values })
}
