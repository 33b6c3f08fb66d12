//! Uniform and boundary-graded simplicial meshes of (-1, 1) and the unit disk.
//!
//! Graded meshes follow the power law `h_T ≃ h^μ` next to the boundary and
//! `h_T ≃ h d(T, ∂Ω)^{(μ-1)/μ}` elsewhere. In 1D the nodes are obtained from
//! the mapping `x_j = 1 - ((M - j)/M)^μ`, mirrored to the left half. The disk
//! is meshed with concentric rings whose radii follow the same 1D law toward
//! `r = 1`; each annulus is triangulated with an angular spacing tied to its
//! radial width.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::Domain;
use crate::error::{Error, Result};

/// Tangential node spacing on a ring, in units of the local radial width.
const RING_ASPECT: f64 = 2.5;

/// Minimum number of nodes on any ring of the disk mesh.
const MIN_RING_NODES: usize = 8;

/// Conforming simplicial mesh. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<f64>,
    elements: Vec<usize>,
    is_boundary: Vec<bool>,
    boundary_nodes: Vec<usize>,
    interior_nodes: Vec<usize>,
    dof_of_node: Vec<usize>,
    elem_dist: Vec<f64>,
    elem_diam: Vec<f64>,
    elem_measure: Vec<f64>,
    h_max: f64,
    h_min: f64,
    mu: f64,
    h_param: f64,
}

const NO_DOF: usize = usize::MAX;

impl Mesh {
    /// Builds a mesh from raw arrays and derives the bookkeeping fields.
    ///
    /// `nodes` is flat with stride `dim`, `elements` flat with stride `dim + 1`.
    /// 2D elements are reoriented counterclockwise.
    pub fn new(
        dim: usize,
        nodes: Vec<f64>,
        mut elements: Vec<usize>,
        boundary_nodes: Vec<usize>,
        mu: f64,
        h_param: f64,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Argument(format!("mesh dimension must be 1 or 2, got {dim}")));
        }
        if nodes.len() % dim != 0 {
            return Err(Error::Format("node array length is not a multiple of the dimension".into()));
        }
        let nv = dim + 1;
        if elements.len() % nv != 0 || elements.is_empty() {
            return Err(Error::Format("element array is empty or ragged".into()));
        }
        let num_nodes = nodes.len() / dim;
        if let Some(&bad) = elements.iter().find(|&&i| i >= num_nodes) {
            return Err(Error::Format(format!("element references missing node {bad}")));
        }
        if !(mu >= 1.0) {
            return Err(Error::Argument(format!("grading parameter must be >= 1, got {mu}")));
        }

        let mut is_boundary = vec![false; num_nodes];
        for &b in &boundary_nodes {
            if b >= num_nodes {
                return Err(Error::Format(format!("boundary node {b} does not exist")));
            }
            let p = &nodes[b * dim..(b + 1) * dim];
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (r - 1.0).abs() > 1e-12 {
                return Err(Error::Geometry(format!("boundary node {b} lies off the boundary (|x| = {r})")));
            }
            is_boundary[b] = true;
        }
        let boundary_nodes: Vec<usize> = (0..num_nodes).filter(|&i| is_boundary[i]).collect();
        let interior_nodes: Vec<usize> = (0..num_nodes).filter(|&i| !is_boundary[i]).collect();
        let mut dof_of_node = vec![NO_DOF; num_nodes];
        for (d, &i) in interior_nodes.iter().enumerate() {
            dof_of_node[i] = d;
        }

        let num_elements = elements.len() / nv;
        let mut elem_dist = Vec::with_capacity(num_elements);
        let mut elem_diam = Vec::with_capacity(num_elements);
        let mut elem_measure = Vec::with_capacity(num_elements);
        for e in 0..num_elements {
            let vs = &mut elements[e * nv..(e + 1) * nv];
            let measure = if dim == 1 {
                let (a, b) = (nodes[vs[0]], nodes[vs[1]]);
                if b < a {
                    vs.swap(0, 1);
                }
                (b - a).abs()
            } else {
                let p = |i: usize| [nodes[2 * i], nodes[2 * i + 1]];
                let (a, b, c) = (p(vs[0]), p(vs[1]), p(vs[2]));
                let signed = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
                if signed < 0.0 {
                    vs.swap(1, 2);
                }
                signed.abs()
            };
            if !(measure > 0.0) {
                return Err(Error::Geometry(format!("element {e} is degenerate")));
            }
            let mut diam: f64 = 0.0;
            let mut max_norm: f64 = 0.0;
            for (ia, &a) in vs.iter().enumerate() {
                let pa = &nodes[a * dim..(a + 1) * dim];
                max_norm = max_norm.max(pa.iter().map(|v| v * v).sum::<f64>().sqrt());
                for &b in &vs[ia + 1..] {
                    let pb = &nodes[b * dim..(b + 1) * dim];
                    let d2: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
                    diam = diam.max(d2.sqrt());
                }
            }
            elem_diam.push(diam);
            elem_measure.push(measure);
            elem_dist.push((1.0 - max_norm).max(0.0));
        }
        let h_max = elem_diam.iter().cloned().fold(0.0, f64::max);
        let h_min = elem_diam.iter().cloned().fold(f64::INFINITY, f64::min);

        Ok(Self {
            dim,
            nodes,
            elements,
            is_boundary,
            boundary_nodes,
            interior_nodes,
            dof_of_node,
            elem_dist,
            elem_diam,
            elem_measure,
            h_max,
            h_min,
            mu,
            h_param,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        if self.dim == 1 {
            Domain::Interval
        } else {
            Domain::UnitDisk
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len() / self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn num_dofs(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinates of node `i` padded to two components.
    pub fn point(&self, i: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.nodes[i], 0.0]
        } else {
            [self.nodes[2 * i], self.nodes[2 * i + 1]]
        }
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.elements[e * nv..(e + 1) * nv]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Interior nodes in dof order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Dof index of a node, `None` on the boundary.
    pub fn dof(&self, i: usize) -> Option<usize> {
        let d = self.dof_of_node[i];
        (d != NO_DOF).then_some(d)
    }

    /// Distance `d(T, ∂Ω)` measured at vertex resolution.
    pub fn elem_dist(&self, e: usize) -> f64 {
        self.elem_dist[e]
    }

    pub fn diameter(&self, e: usize) -> f64 {
        self.elem_diam[e]
    }

    /// Length or area of element `e`.
    pub fn measure(&self, e: usize) -> f64 {
        self.elem_measure[e]
    }

    pub fn touches_boundary(&self, e: usize) -> bool {
        self.element(e).iter().any(|&i| self.is_boundary[i])
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn h_param(&self) -> f64 {
        self.h_param
    }

    /// Sum of element measures.
    pub fn total_measure(&self) -> f64 {
        self.elem_measure.iter().sum()
    }

    /// Copy of the mesh with nodes renumbered by `perm` (new index of old node `i`
    /// is `perm[i]`). Used to check labelling invariance of derived quantities.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Mesh> {
        let n = self.num_nodes();
        if perm.len() != n {
            return Err(Error::Argument("permutation length differs from node count".into()));
        }
        let mut nodes = vec![0.0; self.nodes.len()];
        for i in 0..n {
            nodes[perm[i] * self.dim..(perm[i] + 1) * self.dim].copy_from_slice(self.node(i));
        }
        let elements = self.elements.iter().map(|&i| perm[i]).collect();
        let boundary = self.boundary_nodes.iter().map(|&i| perm[i]).collect();
        Mesh::new(self.dim, nodes, elements, boundary, self.mu, self.h_param)
    }

    pub fn to_file(&self) -> MeshFile {
        MeshFile {
            dim: self.dim,
            nodes: (0..self.num_nodes()).map(|i| self.node(i).to_vec()).collect(),
            elements: (0..self.num_elements()).map(|e| self.element(e).to_vec()).collect(),
            boundary_nodes: self.boundary_nodes.clone(),
            mu: self.mu,
            h_param: self.h_param,
        }
    }

    pub fn from_file(file: MeshFile) -> Result<Mesh> {
        let dim = file.dim;
        if file.nodes.iter().any(|p| p.len() != dim) {
            return Err(Error::Format("node with wrong number of coordinates".into()));
        }
        if file.elements.iter().any(|e| e.len() != dim + 1) {
            return Err(Error::Format("element with wrong number of vertices".into()));
        }
        Mesh::new(
            dim,
            file.nodes.into_iter().flatten().collect(),
            file.elements.into_iter().flatten().collect(),
            file.boundary_nodes,
            file.mu,
            file.h_param,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Mesh> {
        Mesh::from_file(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        Mesh::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk mesh layout. Coordinates are written in shortest round-trip form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshFile {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
    pub boundary_nodes: Vec<usize>,
    pub mu: f64,
    pub h_param: f64,
}

/// Graded mesh of (-1, 1) with `M` elements per half interval.
pub fn build_graded_1d(m: usize, mu: f64) -> Result<Mesh> {
    if m < 2 {
        return Err(Error::Argument(format!("need at least 2 elements per half interval, got {m}")));
    }
    if !(mu >= 1.0) || !mu.is_finite() {
        return Err(Error::Argument(format!("grading parameter must be >= 1, got {mu}")));
    }
    // right half, j = 0 at the origin
    let right: Vec<f64> = (0..=m)
        .map(|j| {
            if mu == 1.0 {
                j as f64 / m as f64
            } else {
                1.0 - ((m - j) as f64 / m as f64).powf(mu)
            }
        })
        .collect();
    let mut nodes = Vec::with_capacity(2 * m + 1);
    nodes.extend(right.iter().rev().map(|x| -x));
    nodes.extend(right.iter().skip(1));
    nodes[m] = 0.0;
    let n = nodes.len();
    let elements = (0..n - 1).flat_map(|i| [i, i + 1]).collect();
    Mesh::new(1, nodes, elements, vec![0, n - 1], mu, 1.0 / m as f64)
}

/// Uniform mesh of (-1, 1) with `n` equispaced nodes.
pub fn build_uniform_1d(n: usize) -> Result<Mesh> {
    if n < 3 {
        return Err(Error::Argument(format!("need at least 3 nodes, got {n}")));
    }
    let denom = (n - 1) as f64;
    let nodes = (0..n).map(|i| (2.0 * i as f64 - denom) / denom).collect();
    let elements = (0..n - 1).flat_map(|i| [i, i + 1]).collect();
    Mesh::new(1, nodes, elements, vec![0, n - 1], 1.0, 2.0 / denom)
}

/// Ring radii `r_j = 1 - ((M - j)/M)^μ`, `j = 0..=M`.
fn ring_radii(m: usize, mu: f64) -> Vec<f64> {
    (0..=m)
        .map(|j| {
            if j == m {
                1.0
            } else if mu == 1.0 {
                j as f64 / m as f64
            } else {
                1.0 - ((m - j) as f64 / m as f64).powf(mu)
            }
        })
        .collect()
}

/// Graded concentric-ring triangulation of the unit disk.
///
/// The number of rings is `M = round(1/h)`; `μ = 1` gives a quasi-uniform mesh.
pub fn build_disk_mesh(h: f64, mu: f64) -> Result<Mesh> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Argument(format!("disk mesh parameter h must lie in (0, 0.5], got {h}")));
    }
    if !(1.0..=2.0).contains(&mu) {
        return Err(Error::Argument(format!(
            "disk grading parameter must lie in [1, 2], got {mu}; larger values change the dof-count regime"
        )));
    }
    let m = ((1.0 / h) - 1e-9).ceil().max(2.0) as usize;
    let radii = ring_radii(m, mu);
    let widths: Vec<f64> = radii.windows(2).map(|w| w[1] - w[0]).collect();

    // node counts per ring (ring 0 is the center point)
    // ring j is matched to the thinner of its two adjacent layers
    let mut counts = vec![1usize];
    for j in 1..=m {
        let local = if j == m { widths[j - 1] } else { widths[j - 1].min(widths[j]) };
        let target = (2.0 * PI * radii[j] / (RING_ASPECT * local)).round() as usize;
        let prev = counts[j - 1];
        counts.push(target.max(MIN_RING_NODES).max(prev));
    }
    // at most a factor two between neighbouring rings keeps transition triangles fat
    for j in (1..m).rev() {
        counts[j] = counts[j].max(counts[j + 1].div_ceil(2));
    }

    let mut nodes = vec![0.0, 0.0];
    let mut ring_start = vec![0usize];
    for j in 1..=m {
        ring_start.push(nodes.len() / 2);
        let n = counts[j];
        for i in 0..n {
            let theta = 2.0 * PI * i as f64 / n as f64;
            if j == m {
                nodes.push(theta.cos());
                nodes.push(theta.sin());
            } else {
                nodes.push(radii[j] * theta.cos());
                nodes.push(radii[j] * theta.sin());
            }
        }
    }

    let mut elements = Vec::new();
    // center fan
    let n1 = counts[1];
    for i in 0..n1 {
        elements.extend([0, ring_start[1] + i, ring_start[1] + (i + 1) % n1]);
    }
    for j in 2..=m {
        stitch_rings(&mut elements, ring_start[j - 1], counts[j - 1], ring_start[j], counts[j]);
    }
    let boundary: Vec<usize> = (ring_start[m]..ring_start[m] + counts[m]).collect();
    Mesh::new(2, nodes, elements, boundary, mu, h)
}

/// Triangulates the annulus between two rings whose nodes are equally spaced
/// in angle and both start at angle zero.
fn stitch_rings(elements: &mut Vec<usize>, inner: usize, ni: usize, outer: usize, no: usize) {
    let (mut i, mut k) = (0usize, 0usize);
    while i < ni || k < no {
        let next_inner = (i + 1) as f64 / ni as f64;
        let next_outer = (k + 1) as f64 / no as f64;
        let advance_inner = k == no || (i < ni && next_inner < next_outer);
        if advance_inner {
            elements.extend([inner + i % ni, inner + (i + 1) % ni, outer + k % no]);
            i += 1;
        } else {
            elements.extend([inner + i % ni, outer + (k + 1) % no, outer + k % no]);
            k += 1;
        }
    }
}

/// Summary statistics of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    pub dofs: usize,
    pub h_max: f64,
    pub h_min: f64,
    /// Largest circumradius/inradius ratio (1 in 1D).
    pub shape_regularity: f64,
    /// Largest ratio of `h_T` to the grading bound with constant `c = 2μ`.
    pub grading_violation: f64,
}

/// Grading constant used by [`mesh_stats`].
pub fn grading_constant(mu: f64) -> f64 {
    2.0 * mu
}

pub fn mesh_stats(mesh: &Mesh) -> MeshStats {
    let mu = mesh.mu();
    let h = mesh.h_param();
    let c = grading_constant(mu);
    let mut violation: f64 = 0.0;
    let mut shape: f64 = 1.0;
    for e in 0..mesh.num_elements() {
        let bound = if mesh.touches_boundary(e) {
            c * h.powf(mu)
        } else {
            c * h * mesh.elem_dist(e).powf((mu - 1.0) / mu)
        };
        violation = violation.max(mesh.diameter(e) / bound);
        if mesh.dim() == 2 {
            let v = mesh.element(e);
            let (a, b, c) = (mesh.point(v[0]), mesh.point(v[1]), mesh.point(v[2]));
            let la = dist(b, c);
            let lb = dist(a, c);
            let lc = dist(a, b);
            let area = mesh.measure(e);
            let circumradius = la * lb * lc / (4.0 * area);
            let inradius = 2.0 * area / (la + lb + lc);
            shape = shape.max(circumradius / inradius);
        }
    }
    MeshStats {
        dofs: mesh.num_dofs(),
        h_max: mesh.h_max(),
        h_min: mesh.h_min(),
        shape_regularity: shape,
        grading_violation: violation,
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
