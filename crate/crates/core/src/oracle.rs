//! Slow reference integration for validating the quadrature and the assembly.
//!
//! Nothing here reuses the `quadrature` module. Gauss tables are typed in,
//! and the singular integrals are handled by brute force:
//!
//! * In 1D both elements are split dyadically; cell pairs farther apart than
//!   their size get a tensor Gauss rule, the remaining near-diagonal cells are
//!   dropped at the finest level. The dropped part behaves like
//!   `h^{2-2s} (c_0 + c_1 h + ...)`, which Richardson extrapolation over the
//!   last three levels removes.
//! * In 2D the outer element is split dyadically and, for each outer point,
//!   the inner integral is taken along rays: the radial part is exact and the
//!   angle is integrated with composite Gauss rules split at the vertex
//!   directions. The outer integrand is only Hölder continuous at the shared
//!   set, giving errors `h^{3-2s}, h^{4-2s}` that are extrapolated away.

use crate::analytic::normalization_constant;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

const GL8_X: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
const GL8_W: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
const GL4_X: [f64; 2] = [0.3399810435848563, 0.8611363115940526];
const GL4_W: [f64; 2] = [0.6521451548625461, 0.3478548451374538];

/// Largest estimated relative error accepted from the extrapolation in 1D.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

/// Largest estimated relative error accepted in 2D, where the finest level
/// affordable on a desk machine stops short of the 1D accuracy.
pub const ORACLE_TOLERANCE_2D: f64 = 1e-5;

fn tolerance(mesh: &Mesh) -> f64 {
    if mesh.dim() == 1 {
        ORACLE_TOLERANCE
    } else {
        ORACLE_TOLERANCE_2D
    }
}

/// Nodes and weights of an even symmetric rule on [a, b].
fn rule_on(a: f64, b: f64, xs: &[f64], ws: &[f64]) -> Vec<(f64, f64)> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut out = Vec::with_capacity(2 * xs.len());
    for (&x, &w) in xs.iter().zip(ws) {
        out.push((c - r * x, r * w));
        out.push((c + r * x, r * w));
    }
    out
}

fn gauss8(a: f64, b: f64) -> Vec<(f64, f64)> {
    rule_on(a, b, &GL8_X, &GL8_W)
}

fn gauss4(a: f64, b: f64) -> Vec<(f64, f64)> {
    rule_on(a, b, &GL4_X, &GL4_W)
}

/// Local matrix from the oracle together with its estimated error.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePair {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    /// Estimated absolute error, largest over entries.
    pub error_estimate: f64,
}

impl OraclePair {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let pos = |n: usize| self.nodes.iter().position(|&v| v == n);
        match (pos(i), pos(j)) {
            (Some(a), Some(b)) => self.values[a * self.nodes.len() + b],
            _ => 0.0,
        }
    }

    fn scale(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Extrapolates `v[k] = I + c1 h_k^{a1} + c2 h_k^{a2}` with `h_k = 2^{-k}` over three
/// consecutive levels.
fn richardson(v: [f64; 3], a1: f64, a2: f64) -> f64 {
    let r1 = 0.5f64.powf(a1);
    let r2 = 0.5f64.powf(a2);
    // eliminate c1 from consecutive pairs, then c2
    let e01 = (v[1] - r1 * v[0]) / (1.0 - r1);
    let e12 = (v[2] - r1 * v[1]) / (1.0 - r1);
    (e12 - r2 * e01) / (1.0 - r2)
}

/// Extrapolates the last three levels; the error estimate is the change
/// against the extrapolation one level coarser.
fn extrapolate(levels: [Vec<f64>; 4], a1: f64, a2: f64) -> (Vec<f64>, f64) {
    let mut out = Vec::with_capacity(levels[0].len());
    let mut err: f64 = 0.0;
    for k in 0..levels[0].len() {
        let coarse = richardson([levels[0][k], levels[1][k], levels[2][k]], a1, a2);
        let fine = richardson([levels[1][k], levels[2][k], levels[3][k]], a1, a2);
        out.push(fine);
        err = err.max((fine - coarse).abs());
    }
    (out, err)
}

fn check_args(mesh: &Mesh, a: usize, b: usize, s: f64, levels: usize) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("fractional index must lie in (0, 1), got {s}")));
    }
    if a >= mesh.num_elements() || b >= mesh.num_elements() {
        return Err(Error::Argument("element index out of range".into()));
    }
    if !(4..=14).contains(&levels) {
        return Err(Error::Argument(format!("oracle levels must lie in 4..=14, got {levels}")));
    }
    Ok(())
}

/// Union of the vertices of two elements, first element first.
fn union_nodes(mesh: &Mesh, a: usize, b: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = mesh.element(a).to_vec();
    for &v in mesh.element(b) {
        if !nodes.contains(&v) {
            nodes.push(v);
        }
    }
    nodes
}

/// Affine hat restricted to an element, extended linearly to the plane.
#[derive(Debug, Clone, Copy)]
struct Affine {
    c: f64,
    g: [f64; 2],
}

impl Affine {
    fn at(&self, x: [f64; 2]) -> f64 {
        self.c + self.g[0] * x[0] + self.g[1] * x[1]
    }
}

/// Hat functions of the union nodes restricted to element `e` (zero when the
/// node is not a vertex of `e`).
fn element_hats(mesh: &Mesh, e: usize, nodes: &[usize]) -> Vec<Affine> {
    let vs = mesh.element(e);
    nodes
        .iter()
        .map(|&n| match vs.iter().position(|&v| v == n) {
            None => Affine { c: 0.0, g: [0.0; 2] },
            Some(k) => {
                if mesh.dim() == 1 {
                    let (x0, x1) = (mesh.node(vs[0])[0], mesh.node(vs[1])[0]);
                    let slope = if k == 0 { -1.0 / (x1 - x0) } else { 1.0 / (x1 - x0) };
                    let anchor = if k == 0 { x0 } else { x1 };
                    Affine { c: 1.0 - slope * anchor, g: [slope, 0.0] }
                } else {
                    let p = |i: usize| mesh.point(vs[i]);
                    let (a, b, c) = (p(k), p((k + 1) % 3), p((k + 2) % 3));
                    // hat is 1 at a, 0 on the line bc
                    let n = [-(c[1] - b[1]), c[0] - b[0]];
                    let val_a = n[0] * (a[0] - b[0]) + n[1] * (a[1] - b[1]);
                    let g = [n[0] / val_a, n[1] / val_a];
                    Affine { c: -(g[0] * b[0] + g[1] * b[1]), g }
                }
            }
        })
        .collect()
}

// ---------------------------------------------------------------- 1D pairs

#[derive(Clone, Copy)]
struct Cell1 {
    lo: f64,
    hi: f64,
}

#[allow(clippy::too_many_arguments)]
fn cells_1d(
    ca: Cell1,
    cb: Cell1,
    depth: usize,
    level: usize,
    s: f64,
    ha: &[Affine],
    hb: &[Affine],
    acc: &mut [f64],
) {
    let diam = (ca.hi - ca.lo).max(cb.hi - cb.lo);
    let dist = (cb.lo - ca.hi).max(ca.lo - cb.hi);
    // the slack keeps the near/far split identical at every level when the
    // element ends are not dyadic numbers
    if dist > diam * (1.0 + 1e-9) {
        let n = ha.len();
        let mut d = vec![0.0; n];
        for (x, wx) in gauss8(ca.lo, ca.hi) {
            for (y, wy) in gauss8(cb.lo, cb.hi) {
                let k = wx * wy * (x - y).abs().powf(-1.0 - 2.0 * s);
                for v in 0..n {
                    d[v] = ha[v].at([x, 0.0]) - hb[v].at([y, 0.0]);
                }
                for i in 0..n {
                    for j in 0..n {
                        acc[i * n + j] += k * d[i] * d[j];
                    }
                }
            }
        }
        return;
    }
    if depth == level {
        return;
    }
    let ma = 0.5 * (ca.lo + ca.hi);
    let mb = 0.5 * (cb.lo + cb.hi);
    for a in [Cell1 { lo: ca.lo, hi: ma }, Cell1 { lo: ma, hi: ca.hi }] {
        for b in [Cell1 { lo: cb.lo, hi: mb }, Cell1 { lo: mb, hi: cb.hi }] {
            cells_1d(a, b, depth + 1, level, s, ha, hb, acc);
        }
    }
}

fn pair_level_1d(mesh: &Mesh, a: usize, b: usize, s: f64, level: usize, nodes: &[usize]) -> Vec<f64> {
    let ha = element_hats(mesh, a, nodes);
    let hb = element_hats(mesh, b, nodes);
    let cell = |e: usize| {
        let v = mesh.element(e);
        Cell1 { lo: mesh.node(v[0])[0], hi: mesh.node(v[1])[0] }
    };
    let mut acc = vec![0.0; nodes.len() * nodes.len()];
    cells_1d(cell(a), cell(b), 0, level, s, &ha, &hb, &mut acc);
    acc
}

// ---------------------------------------------------------------- 2D pairs

fn sub_triangles(p: [[f64; 2]; 3], level: usize) -> Vec<[[f64; 2]; 3]> {
    let mut cur = vec![p];
    for _ in 0..level {
        let mut next = Vec::with_capacity(cur.len() * 4);
        for t in cur {
            let m = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let (m01, m12, m20) = (m(t[0], t[1]), m(t[1], t[2]), m(t[2], t[0]));
            next.push([t[0], m01, m20]);
            next.push([m01, t[1], m12]);
            next.push([m20, m12, t[2]]);
            next.push([m12, m20, m01]);
        }
        cur = next;
    }
    cur
}

/// Collapsed 4 × 4 Gauss points on a triangle (weights include the area).
fn triangle_points(t: &[[f64; 2]; 3]) -> Vec<([f64; 2], f64)> {
    let area = 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0])).abs();
    let mut out = Vec::with_capacity(16);
    for (u, wu) in gauss4(0.0, 1.0) {
        for (v, wv) in gauss4(0.0, 1.0) {
            let (x, y) = (u, v * (1.0 - u));
            let l = [1.0 - x - y, x, y];
            let p = [
                l[0] * t[0][0] + l[1] * t[1][0] + l[2] * t[2][0],
                l[0] * t[0][1] + l[1] * t[1][1] + l[2] * t[2][1],
            ];
            out.push((p, 2.0 * area * wu * wv * (1.0 - u)));
        }
    }
    out
}

/// Angular pieces, with weights, for `θ ∈ [a, b]` after a smoothing substitution
/// that flattens endpoint singularities.
fn angle_points(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(48);
    for k in 0..3 {
        let (u0, u1) = (k as f64 / 3.0, (k + 1) as f64 / 3.0);
        for (u, w) in gauss8(u0, u1) {
            let smooth = u * u * (3.0 - 2.0 * u);
            let dsmooth = 6.0 * u * (1.0 - u);
            out.push((a + (b - a) * smooth, w * (b - a) * dsmooth));
        }
    }
    out
}

/// Parameter interval `[ρ0, ρ1]` of the ray `x + ρ e` inside the triangle.
fn clip_ray(x: [f64; 2], e: [f64; 2], t: &[[f64; 2]; 3]) -> Option<(f64, f64)> {
    let orient = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]);
    let sign = orient.signum();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for k in 0..3 {
        let (p, q) = (t[k], t[(k + 1) % 3]);
        // inward normal of edge pq
        let n = [-(q[1] - p[1]) * sign, (q[0] - p[0]) * sign];
        let num = n[0] * (x[0] - p[0]) + n[1] * (x[1] - p[1]);
        let den = n[0] * e[0] + n[1] * e[1];
        // need num + ρ den >= 0
        if den.abs() < 1e-300 {
            if num < 0.0 {
                return None;
            }
        } else if den > 0.0 {
            lo = lo.max(-num / den);
        } else {
            hi = hi.min(-num / den);
        }
    }
    (hi > lo).then_some((lo, hi))
}

fn pair_level_2d(mesh: &Mesh, a: usize, b: usize, s: f64, level: usize, nodes: &[usize]) -> Vec<f64> {
    let n = nodes.len();
    let ha = element_hats(mesh, a, nodes);
    let hb = element_hats(mesh, b, nodes);
    let tri = |e: usize| {
        let v = mesh.element(e);
        [mesh.point(v[0]), mesh.point(v[1]), mesh.point(v[2])]
    };
    let (ta, tb) = (tri(a), tri(b));
    let centroid_b = [(tb[0][0] + tb[1][0] + tb[2][0]) / 3.0, (tb[0][1] + tb[1][1] + tb[2][1]) / 3.0];
    let e0 = -2.0 * s;
    let e1 = 1.0 - 2.0 * s;
    let e2 = 2.0 - 2.0 * s;
    let mut acc = vec![0.0; n * n];
    let mut avec = vec![0.0; n];
    let mut bvec = vec![0.0; n];
    for cell in sub_triangles(ta, level) {
        for (x, wx) in triangle_points(&cell) {
            // angular sectors split at the directions of the vertices of T_b
            let inside = a == b;
            let mut breaks: Vec<f64>;
            let base;
            if inside {
                base = 0.0;
                breaks = tb.iter().map(|v| (v[1] - x[1]).atan2(v[0] - x[0])).collect();
                breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let first = breaks[0];
                breaks.push(first + 2.0 * std::f64::consts::PI);
            } else {
                base = (centroid_b[1] - x[1]).atan2(centroid_b[0] - x[0]);
                breaks = tb
                    .iter()
                    .map(|v| {
                        let ang = (v[1] - x[1]).atan2(v[0] - x[0]) - base;
                        ang.sin().atan2(ang.cos())
                    })
                    .collect();
                breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
            }
            for v in 0..n {
                avec[v] = ha[v].at(x) - hb[v].at(x);
            }
            for seg in breaks.windows(2) {
                for (th, wt) in angle_points(seg[0], seg[1]) {
                    let ang = th + base;
                    let e = [ang.cos(), ang.sin()];
                    let Some((r0, r1)) = clip_ray(x, e, &tb) else { continue };
                    // ∫_{r0}^{r1} ρ^{k-1} dρ
                    let p = |k: f64| {
                        if r0 == 0.0 {
                            r1.powf(k) / k
                        } else if k.abs() < 1e-12 {
                            (r1 / r0).ln()
                        } else {
                            (r1.powf(k) - r0.powf(k)) / k
                        }
                    };
                    let p2 = p(e2);
                    let (p0, p1) = if inside { (0.0, 0.0) } else { (p(e0), p(e1)) };
                    for v in 0..n {
                        bvec[v] = hb[v].g[0] * e[0] + hb[v].g[1] * e[1];
                    }
                    let w = wx * wt;
                    for i in 0..n {
                        for j in 0..n {
                            let val = avec[i] * avec[j] * p0 - (avec[i] * bvec[j] + bvec[i] * avec[j]) * p1
                                + bvec[i] * bvec[j] * p2;
                            acc[i * n + j] += w * val;
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Brute-force local matrix of the pair `(T_a, T_b)` over the union of their vertices.
pub fn brute_force_pair_matrix(mesh: &Mesh, a: usize, b: usize, s: f64, levels: usize) -> Result<OraclePair> {
    check_args(mesh, a, b, s, levels)?;
    let nodes = union_nodes(mesh, a, b);
    let level = |l: usize| {
        if mesh.dim() == 1 {
            pair_level_1d(mesh, a, b, s, l, &nodes)
        } else {
            pair_level_2d(mesh, a, b, s, l, &nodes)
        }
    };
    let runs = [level(levels - 3), level(levels - 2), level(levels - 1), level(levels)];
    let (a1, a2) = if mesh.dim() == 1 { (2.0 - 2.0 * s, 3.0 - 2.0 * s) } else { (3.0 - 2.0 * s, 4.0 - 2.0 * s) };
    let (values, error_estimate) = extrapolate(runs, a1, a2);
    let out = OraclePair { nodes, values, error_estimate };
    if out.error_estimate > tolerance(mesh) * out.scale() {
        return Err(Error::OracleInconclusive { estimate: out.error_estimate / out.scale() });
    }
    Ok(out)
}

/// Brute-force value of one pair integral for global nodes `i`, `j`.
pub fn brute_force_pair(mesh: &Mesh, a: usize, b: usize, s: f64, i: usize, j: usize, levels: usize) -> Result<f64> {
    Ok(brute_force_pair_matrix(mesh, a, b, s, levels)?.entry(i, j))
}

// ---------------------------------------------------------------- tail

/// Complement integral in 1D in closed form.
fn omega_1d(x: f64, s: f64) -> f64 {
    ((1.0 - x).powf(-2.0 * s) + (1.0 + x).powf(-2.0 * s)) / (2.0 * s)
}

/// Complement integral for the unit disk, split into the annulus `1 < |y| < 2`
/// and the exterior `|y| > 2`.
pub fn omega_annulus_exterior(x: [f64; 2], s: f64) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let r = r2.sqrt();
    let q = (1.0 - r) * (1.0 + r);
    let delta = 1.0 - r;
    // annulus: exact along each ray, angle graded toward the nearest boundary point
    let ray = |psi: f64| {
        // component of the direction along x is cos ψ
        let xe = r * psi.cos();
        let rho1 = q / (xe + (xe * xe + q).sqrt());
        let rho2 = -xe + (xe * xe + 4.0 - r2).sqrt();
        (rho1.powf(-2.0 * s) - rho2.powf(-2.0 * s)) / (2.0 * s)
    };
    // ρ1 varies on the scale δ near ψ = 0 and on the scale √q near the
    // tangent direction ψ = π/2, so both are graded geometrically
    let pi = std::f64::consts::PI;
    let half = 0.5 * pi;
    let mut breaks = vec![0.0, half, pi];
    let mut w = delta.max(1e-14);
    while w < half {
        breaks.push(w);
        w *= 2.0;
    }
    let mut w = q.sqrt().max(1e-14);
    while w < half {
        breaks.push(half - w);
        breaks.push(half + w);
        w *= 2.0;
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut annulus = 0.0;
    for seg in breaks.windows(2) {
        for (psi, w) in gauss8(seg[0], seg[1]) {
            annulus += 2.0 * w * ray(psi);
        }
    }
    // exterior: R = 2 t^{-1/(2s)} makes the radial weight constant; the
    // integrand has a t^{1/s} term at t = 0, so the t pieces are graded there
    let mut exterior = 0.0;
    let mut t_breaks: Vec<f64> = (0..24).map(|k| 0.5f64.powi(k)).collect();
    t_breaks.push(0.0);
    t_breaks.reverse();
    for seg in t_breaks.windows(2) {
        for (t, wt) in gauss8(seg[0], seg[1]) {
            let big_r = 2.0 * t.powf(-1.0 / (2.0 * s));
            let mut ang = 0.0;
            for m in 0..4 {
                for (phi, wp) in gauss8(m as f64 * pi / 4.0, (m + 1) as f64 * pi / 4.0) {
                    let d2 = big_r * big_r + r2 - 2.0 * r * big_r * phi.cos();
                    ang += 2.0 * wp * (big_r * big_r / d2).powf(1.0 + s);
                }
            }
            exterior += wt * ang;
        }
    }
    exterior *= 2f64.powf(-2.0 * s) / (2.0 * s);
    annulus + exterior
}

fn tail_level(mesh: &Mesh, e: usize, s: f64, level: usize, nodes: &[usize]) -> Vec<f64> {
    let n = nodes.len();
    let hats = element_hats(mesh, e, nodes);
    let mut acc = vec![0.0; n * n];
    let mut add = |x: [f64; 2], w: f64, om: f64| {
        for i in 0..n {
            for j in 0..n {
                acc[i * n + j] += w * om * hats[i].at(x) * hats[j].at(x);
            }
        }
    };
    let v = mesh.element(e);
    if mesh.dim() == 1 {
        let (x0, x1) = (mesh.node(v[0])[0], mesh.node(v[1])[0]);
        let cells = 1usize << level;
        let h = (x1 - x0) / cells as f64;
        for c in 0..cells {
            for (x, w) in gauss8(x0 + c as f64 * h, x0 + (c + 1) as f64 * h) {
                add([x, 0.0], w, omega_1d(x, s));
            }
        }
    } else {
        let t = [mesh.point(v[0]), mesh.point(v[1]), mesh.point(v[2])];
        for cell in sub_triangles(t, level) {
            for (x, w) in triangle_points(&cell) {
                add(x, w, omega_annulus_exterior(x, s));
            }
        }
    }
    acc
}

/// Brute-force tail matrix `∫_{T_e} φ_i φ_j ω` over the vertices of `T_e`.
///
/// Rows and columns of boundary vertices are zeroed, since those hats are not
/// degrees of freedom.
pub fn brute_force_tail(mesh: &Mesh, e: usize, s: f64, levels: usize) -> Result<OraclePair> {
    check_args(mesh, e, e, s, levels)?;
    let nodes = mesh.element(e).to_vec();
    let n = nodes.len();
    let runs = [levels - 3, levels - 2, levels - 1, levels].map(|l| {
        let mut v = tail_level(mesh, e, s, l, &nodes);
        // boundary hats are not degrees of freedom and their tail diverges
        for i in 0..n {
            for j in 0..n {
                if mesh.is_boundary(nodes[i]) || mesh.is_boundary(nodes[j]) {
                    v[i * n + j] = 0.0;
                }
            }
        }
        v
    });
    let (values, error_estimate) = extrapolate(runs, 3.0 - 2.0 * s, 4.0 - 2.0 * s);
    let out = OraclePair { nodes, values, error_estimate };
    if out.error_estimate > tolerance(mesh) * out.scale().max(f64::MIN_POSITIVE) {
        return Err(Error::OracleInconclusive { estimate: out.error_estimate / out.scale() });
    }
    Ok(out)
}

// ---------------------------------------------------------------- global

fn add_pair(mesh: &Mesh, p: &OraclePair, factor: f64, out: &mut [Vec<f64>]) {
    for (a, &na) in p.nodes.iter().enumerate() {
        let Some(i) = mesh.dof(na) else { continue };
        for (b, &nb) in p.nodes.iter().enumerate() {
            let Some(j) = mesh.dof(nb) else { continue };
            out[i][j] += factor * p.values[a * p.nodes.len() + b];
        }
    }
}

fn shares_dof(mesh: &Mesh, a: usize, b: usize, wanted: Option<(usize, usize)>) -> bool {
    let dofs: Vec<usize> = mesh.element(a).iter().chain(mesh.element(b)).filter_map(|&v| mesh.dof(v)).collect();
    match wanted {
        None => !dofs.is_empty(),
        Some((i, j)) => dofs.contains(&i) && dofs.contains(&j),
    }
}

fn assemble_dense(mesh: &Mesh, s: f64, levels: usize, wanted: Option<(usize, usize)>) -> Result<Vec<Vec<f64>>> {
    let nd = mesh.num_dofs();
    let c = normalization_constant(mesh.dim(), s)?;
    let mut out = vec![vec![0.0; nd]; nd];
    let ne = mesh.num_elements();
    for a in 0..ne {
        for b in a..ne {
            if !shares_dof(mesh, a, b, wanted) {
                continue;
            }
            let p = brute_force_pair_matrix(mesh, a, b, s, levels)?;
            let factor = if a == b { 0.5 * c } else { c };
            add_pair(mesh, &p, factor, &mut out);
        }
        if shares_dof(mesh, a, a, wanted) {
            let t = brute_force_tail(mesh, a, s, levels)?;
            add_pair(mesh, &t, c, &mut out);
        }
    }
    Ok(out)
}

/// Dense brute-force stiffness matrix indexed by degree of freedom.
pub fn brute_force_matrix(mesh: &Mesh, s: f64, levels: usize) -> Result<Vec<Vec<f64>>> {
    assemble_dense(mesh, s, levels, None)
}

/// Brute-force value of one stiffness entry, indexed by degree of freedom.
pub fn brute_force_entry(mesh: &Mesh, i: usize, j: usize, s: f64, levels: usize) -> Result<f64> {
    let nd = mesh.num_dofs();
    if i >= nd || j >= nd {
        return Err(Error::Argument("dof index out of range".into()));
    }
    Ok(assemble_dense(mesh, s, levels, Some((i, j)))?[i][j])
}


