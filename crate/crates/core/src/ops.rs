//! Low-order discrete de Rham operators on the staggered grid: strong
//! grad/curl/div stencils, their exact transposes (which realize the weak dual
//! operators under unit lumped masses), diagonal mass matrices, the edge
//! projection of face fields, and the two discrete cross products used by the
//! velocity system.
//!
//! Everything here is matrix-free. Transposes are literal algebraic
//! transposes of the forward stencils, including the boundary truncation on
//! transmissive axes, so the composed implicit operators stay symmetric to
//! round-off.

use crate::field::{ScalarField, VectorField};
use crate::mesh::{Grid, Space};

/// Strong gradient: nodes -> edges, forward difference along each edge.
pub fn apply_grad(grid: &Grid, p: &ScalarField) -> VectorField {
    assert_eq!(p.space, Space::Node, "apply_grad expects a nodal field");
    let mut out = VectorField::zeros(grid, Space::Edge);
    let n = grid.n;
    let inv = [1.0 / grid.d[0], 1.0 / grid.d[1], 1.0 / grid.d[2]];
    let src = &p.data;
    let [gx, gy, gz] = out.comps_mut();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let e = grid.idx(i, j, k);
                if let Some(ip) = grid.next(0, i) {
                    gx[e] = (src[grid.idx(ip, j, k)] - src[e]) * inv[0];
                }
                if let Some(jp) = grid.next(1, j) {
                    gy[e] = (src[grid.idx(i, jp, k)] - src[e]) * inv[1];
                }
                if let Some(kp) = grid.next(2, k) {
                    gz[e] = (src[grid.idx(i, j, kp)] - src[e]) * inv[2];
                }
            }
        }
    }
    out
}

/// Strong curl: edges -> faces, circulation differences.
pub fn apply_curl(grid: &Grid, u: &VectorField) -> VectorField {
    assert_eq!(u.space, Space::Edge, "apply_curl expects an edge field");
    let mut out = VectorField::zeros(grid, Space::Face);
    let n = grid.n;
    let inv = [1.0 / grid.d[0], 1.0 / grid.d[1], 1.0 / grid.d[2]];
    let (ux, uy, uz) = (u.comp(0), u.comp(1), u.comp(2));
    let [fx, fy, fz] = out.comps_mut();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let e = grid.idx(i, j, k);
                let dx = |a: &[f64]| match grid.next(0, i) {
                    Some(ip) => (a[grid.idx(ip, j, k)] - a[e]) * inv[0],
                    None => 0.0,
                };
                let dy = |a: &[f64]| match grid.next(1, j) {
                    Some(jp) => (a[grid.idx(i, jp, k)] - a[e]) * inv[1],
                    None => 0.0,
                };
                let dz = |a: &[f64]| match grid.next(2, k) {
                    Some(kp) => (a[grid.idx(i, j, kp)] - a[e]) * inv[2],
                    None => 0.0,
                };
                fx[e] = dy(uz) - dz(uy);
                fy[e] = dz(ux) - dx(uz);
                fz[e] = dx(uy) - dy(ux);
            }
        }
    }
    out
}

/// Strong divergence: faces -> cells, flux differences.
pub fn apply_div(grid: &Grid, b: &VectorField) -> ScalarField {
    assert_eq!(b.space, Space::Face, "apply_div expects a face field");
    let mut out = ScalarField::zeros(grid, Space::Cell);
    let n = grid.n;
    let inv = [1.0 / grid.d[0], 1.0 / grid.d[1], 1.0 / grid.d[2]];
    let (bx, by, bz) = (b.comp(0), b.comp(1), b.comp(2));
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let e = grid.idx(i, j, k);
                let mut s = 0.0;
                if let Some(ip) = grid.next(0, i) {
                    s += (bx[grid.idx(ip, j, k)] - bx[e]) * inv[0];
                }
                if let Some(jp) = grid.next(1, j) {
                    s += (by[grid.idx(i, jp, k)] - by[e]) * inv[1];
                }
                if let Some(kp) = grid.next(2, k) {
                    s += (bz[grid.idx(i, j, kp)] - bz[e]) * inv[2];
                }
                out.data[e] = s;
            }
        }
    }
    out
}

/// Exact transpose of `apply_grad`: edges -> nodes.
pub fn grad_transpose(grid: &Grid, u: &VectorField) -> ScalarField {
    assert_eq!(u.space, Space::Edge);
    let mut out = ScalarField::zeros(grid, Space::Node);
    let n = grid.n;
    let inv = [1.0 / grid.d[0], 1.0 / grid.d[1], 1.0 / grid.d[2]];
    let (ux, uy, uz) = (u.comp(0), u.comp(1), u.comp(2));
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let e = grid.idx(i, j, k);
                let mut s = 0.0;
                // Incoming link (alive iff prev exists) minus outgoing link
                // (alive iff next exists), per axis.
                if let Some(im) = grid.prev(0, i) {
                    s += ux[grid.idx(im, j, k)] * inv[0];
                }
                if grid.next(0, i).is_some() {
                    s -= ux[e] * inv[0];
                }
                if let Some(jm) = grid.prev(1, j) {
                    s += uy[grid.idx(i, jm, k)] * inv[1];
                }
                if grid.next(1, j).is_some() {
                    s -= uy[e] * inv[1];
                }
                if let Some(km) = grid.prev(2, k) {
                    s += uz[grid.idx(i, j, km)] * inv[2];
                }
                if grid.next(2, k).is_some() {
                    s -= uz[e] * inv[2];
                }
                out.data[e] = s;
            }
        }
    }
    out
}

/// Exact transpose of `apply_curl`: faces -> edges (the dual-grid curl).
pub fn curl_transpose(grid: &Grid, b: &VectorField) -> VectorField {
    assert_eq!(b.space, Space::Face);
    let mut out = VectorField::zeros(grid, Space::Edge);
    let n = grid.n;
    let inv = [1.0 / grid.d[0], 1.0 / grid.d[1], 1.0 / grid.d[2]];
    let (bx, by, bz) = (b.comp(0), b.comp(1), b.comp(2));
    let [ex, ey, ez] = out.comps_mut();
    // Backward-difference curl; each half-term is present only when its
    // forward link in apply_curl exists.
    let bdiff = |a: &[f64], grid: &Grid, axis: usize, i: usize, j: usize, k: usize| -> f64 {
        let e = grid.idx(i, j, k);
        let idx_at = |m: usize| match axis {
            0 => grid.idx(m, j, k),
            1 => grid.idx(i, m, k),
            _ => grid.idx(i, j, m),
        };
        let c = [i, j, k][axis];
        let mut s = 0.0;
        if grid.next(axis, c).is_some() {
            s += a[e];
        }
        if let Some(m) = grid.prev(axis, c) {
            s -= a[idx_at(m)];
        }
        s * inv[axis]
    };
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let e = grid.idx(i, j, k);
                ex[e] = bdiff(bz, grid, 1, i, j, k) - bdiff(by, grid, 2, i, j, k);
                ey[e] = bdiff(bx, grid, 2, i, j, k) - bdiff(bz, grid, 0, i, j, k);
                ez[e] = bdiff(by, grid, 0, i, j, k) - bdiff(bx, grid, 1, i, j, k);
            }
        }
    }
    out
}

/// Exact transpose of `apply_div`: cells -> faces.
pub fn div_transpose(grid: &Grid, q: &ScalarField) -> VectorField {
    assert_eq!(q.space, Space::Cell);
    let mut out = VectorField::zeros(grid, Space::Face);
    let n = grid.n;
    let inv = [1.0 / grid.d[0], 1.0 / grid.d[1], 1.0 / grid.d[2]];
    let src = &q.data;
    let [ox, oy, oz] = out.comps_mut();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let e = grid.idx(i, j, k);
                if let Some(im) = grid.prev(0, i) {
                    ox[e] += src[grid.idx(im, j, k)] * inv[0];
                }
                if grid.next(0, i).is_some() {
                    ox[e] -= src[e] * inv[0];
                }
                if let Some(jm) = grid.prev(1, j) {
                    oy[e] += src[grid.idx(i, jm, k)] * inv[1];
                }
                if grid.next(1, j).is_some() {
                    oy[e] -= src[e] * inv[1];
                }
                if let Some(km) = grid.prev(2, k) {
                    oz[e] += src[grid.idx(i, j, km)] * inv[2];
                }
                if grid.next(2, k).is_some() {
                    oz[e] -= src[e] * inv[2];
                }
            }
        }
    }
    out
}

pub enum Weak {
    GradW,
    CurlW,
    DivW,
}

/// Weak dual operators under unit lumped masses:
/// grad_w = -D^T (cells -> faces), curl_w = C^T (faces -> edges),
/// div_w = -G^T (edges -> nodes).
pub fn apply_weak_grad(grid: &Grid, q: &ScalarField) -> VectorField {
    let mut out = div_transpose(grid, q);
    for v in out.data.iter_mut() {
        *v = -*v;
    }
    out
}

pub fn apply_weak_curl(grid: &Grid, b: &VectorField) -> VectorField {
    curl_transpose(grid, b)
}

pub fn apply_weak_div(grid: &Grid, u: &VectorField) -> ScalarField {
    let mut out = grad_transpose(grid, u);
    for v in out.data.iter_mut() {
        *v = -*v;
    }
    out
}

/// Lumped (diagonal) mass matrix: entry = weight(x_dof) * dx*dy*dz.
/// Returns `dof_count(space)` entries, vector spaces in component-block order.
pub fn diagonal_mass(grid: &Grid, space: Space, mut weight: impl FnMut([f64; 3]) -> f64) -> Vec<f64> {
    let vol = grid.volume();
    let ncomp = match space {
        Space::Node | Space::Cell => 1,
        Space::Edge | Space::Face => 3,
    };
    let mut out = vec![0.0; ncomp * grid.len()];
    for c in 0..ncomp {
        for k in 0..grid.n[2] {
            for j in 0..grid.n[1] {
                for i in 0..grid.n[0] {
                    let x = grid.dof_location(space, c, i, j, k).expect("in range");
                    let w = weight(x);
                    assert!(w.is_finite(), "non-finite mass weight at {x:?}");
                    out[c * grid.len() + grid.idx(i, j, k)] = w * vol;
                }
            }
        }
    }
    out
}

/// Edge density weights: arithmetic mean of the two nodal densities that share
/// the edge line. Errors on non-positive density.
pub fn average_rho_to_edges(grid: &Grid, rho: &ScalarField) -> crate::error::Result<VectorField> {
    assert_eq!(rho.space, Space::Node);
    for (m, &v) in rho.data.iter().enumerate() {
        if !(v > 0.0) {
            let (i, j, k) = grid.decompose(m);
            return Err(crate::error::SimError::State(format!(
                "non-positive density {v} at node ({i},{j},{k})"
            )));
        }
    }
    let mut out = VectorField::zeros(grid, Space::Edge);
    let src = &rho.data;
    let [ox, oy, oz] = out.comps_mut();
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let e = grid.idx(i, j, k);
                ox[e] = 0.5 * (src[e] + src[grid.idx(grid.next_clamp(0, i), j, k)]);
                oy[e] = 0.5 * (src[e] + src[grid.idx(i, grid.next_clamp(1, j), k)]);
                oz[e] = 0.5 * (src[e] + src[grid.idx(i, j, grid.next_clamp(2, k))]);
            }
        }
    }
    Ok(out)
}

/// Scalar nodal field averaged onto edges (same 2-node means as the density).
pub fn scalar_to_edges(grid: &Grid, s: &ScalarField) -> VectorField {
    assert_eq!(s.space, Space::Node);
    let mut out = VectorField::zeros(grid, Space::Edge);
    let src = &s.data;
    let [ox, oy, oz] = out.comps_mut();
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let e = grid.idx(i, j, k);
                ox[e] = 0.5 * (src[e] + src[grid.idx(grid.next_clamp(0, i), j, k)]);
                oy[e] = 0.5 * (src[e] + src[grid.idx(i, grid.next_clamp(1, j), k)]);
                oz[e] = 0.5 * (src[e] + src[grid.idx(i, j, grid.next_clamp(2, k))]);
            }
        }
    }
    out
}

/// V1 projection of a face field: exact integral of the V2 representation
/// against the V1 basis, divided by the lumped edge mass. Componentwise this
/// is the 8-point average of the surrounding face DOFs.
pub fn p1_face_to_edge(grid: &Grid, b: &VectorField) -> VectorField {
    assert_eq!(b.space, Space::Face);
    let mut out = VectorField::zeros(grid, Space::Edge);
    let (bx, by, bz) = (b.comp(0), b.comp(1), b.comp(2));
    let [px, py, pz] = out.comps_mut();
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let e = grid.idx(i, j, k);
                let ip = grid.next_clamp(0, i);
                let im = grid.prev_clamp(0, i);
                let jp = grid.next_clamp(1, j);
                let jm = grid.prev_clamp(1, j);
                let kp = grid.next_clamp(2, k);
                let km = grid.prev_clamp(2, k);
                // x-edge at (c,n,n): faces x in {i,i+1}, y in {j-1,j}, z in {k-1,k}
                px[e] = 0.125
                    * (bx[grid.idx(i, jm, km)]
                        + bx[grid.idx(ip, jm, km)]
                        + bx[grid.idx(i, j, km)]
                        + bx[grid.idx(ip, j, km)]
                        + bx[grid.idx(i, jm, k)]
                        + bx[grid.idx(ip, jm, k)]
                        + bx[grid.idx(i, j, k)]
                        + bx[grid.idx(ip, j, k)]);
                // y-edge at (n,c,n): faces x in {i-1,i}, y in {j,j+1}, z in {k-1,k}
                py[e] = 0.125
                    * (by[grid.idx(im, j, km)]
                        + by[grid.idx(i, j, km)]
                        + by[grid.idx(im, jp, km)]
                        + by[grid.idx(i, jp, km)]
                        + by[grid.idx(im, j, k)]
                        + by[grid.idx(i, j, k)]
                        + by[grid.idx(im, jp, k)]
                        + by[grid.idx(i, jp, k)]);
                // z-edge at (n,n,c): faces x in {i-1,i}, y in {j-1,j}, z in {k,k+1}
                pz[e] = 0.125
                    * (bz[grid.idx(im, jm, k)]
                        + bz[grid.idx(i, jm, k)]
                        + bz[grid.idx(im, j, k)]
                        + bz[grid.idx(i, j, k)]
                        + bz[grid.idx(im, jm, kp)]
                        + bz[grid.idx(i, jm, kp)]
                        + bz[grid.idx(im, j, kp)]
                        + bz[grid.idx(i, j, kp)]);
            }
        }
    }
    out
}

/// Direct evaluation of the face-based V2 field at edge midpoints: for each
/// edge direction, the two transverse Cartesian components. Transverse values
/// sit half a spacing off the edge in exactly one axis, so each is a 2-point
/// mean of the nearest face DOFs of that component.
///
/// Returns `(t1, t2)` shaped like edge fields, where for a d-edge `t1` holds
/// component d+1 and `t2` holds component d+2 (cyclic).
pub fn interp_face_to_edge(grid: &Grid, b: &VectorField) -> (VectorField, VectorField) {
    assert_eq!(b.space, Space::Face);
    let mut t1 = VectorField::zeros(grid, Space::Edge);
    let mut t2 = VectorField::zeros(grid, Space::Edge);
    let (bx, by, bz) = (b.comp(0), b.comp(1), b.comp(2));
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let e = grid.idx(i, j, k);
                let im = grid.prev_clamp(0, i);
                let jm = grid.prev_clamp(1, j);
                let km = grid.prev_clamp(2, k);
                // x-edge: By averaged across z, Bz averaged across y.
                t1.comp_mut(0)[e] = 0.5 * (by[grid.idx(i, j, km)] + by[e]);
                t2.comp_mut(0)[e] = 0.5 * (bz[grid.idx(i, jm, k)] + bz[e]);
                // y-edge: Bz averaged across x, Bx averaged across z.
                t1.comp_mut(1)[e] = 0.5 * (bz[grid.idx(im, j, k)] + bz[e]);
                t2.comp_mut(1)[e] = 0.5 * (bx[grid.idx(i, j, km)] + bx[e]);
                // z-edge: Bx averaged across y, By averaged across x.
                t1.comp_mut(2)[e] = 0.5 * (bx[grid.idx(i, jm, k)] + bx[e]);
                t2.comp_mut(2)[e] = 0.5 * (by[grid.idx(im, j, k)] + by[e]);
            }
        }
    }
    (t1, t2)
}

/// 4-point interpolation of an edge field's component `c` to the midpoint of a
/// d-edge (c != d): parallel edges one half-spacing off in the two axes where
/// the locations disagree.
#[inline]
fn edge_comp_at_edge(grid: &Grid, u: &VectorField, d: usize, c: usize, i: usize, j: usize, k: usize) -> f64 {
    debug_assert_ne!(d, c);
    let uc = u.comp(c);
    // Along axis d the target is a center, the source a node: offsets {0,+1}.
    // Along axis c the target is a node, the source a center: offsets {-1,0}.
    let idx = [i, j, k];
    let mut sum = 0.0;
    for od in 0..2usize {
        for oc in 0..2usize {
            let mut p = idx;
            p[d] = if od == 0 { idx[d] } else { grid.next_clamp(d, idx[d]) };
            p[c] = if oc == 0 { grid.prev_clamp(c, idx[c]) } else { idx[c] };
            sum += uc[grid.idx(p[0], p[1], p[2])];
        }
    }
    0.25 * sum
}

/// Full magnetic vector interpolated to the midpoint of a d-edge: the
/// longitudinal component averages the 8 surrounding faces, transverse
/// components are 2-point means (direct V2 evaluation).
pub fn b_vec_at_edge(grid: &Grid, b: &VectorField, d: usize, i: usize, j: usize, k: usize) -> [f64; 3] {
    let e = grid.idx(i, j, k);
    let mut out = [0.0; 3];
    // Longitudinal: target is (cell, node, node) in (d, d+1, d+2); the face
    // component d lives at (node, cell, cell), so average 2x2x2.
    {
        let bc = b.comp(d);
        let (a1, a2) = cyclic(d);
        let idx0 = [i, j, k];
        let mut sum = 0.0;
        for od in 0..2usize {
            for o1 in 0..2usize {
                for o2 in 0..2usize {
                    let mut p = idx0;
                    p[d] = if od == 0 { p[d] } else { grid.next_clamp(d, p[d]) };
                    p[a1] = if o1 == 0 { grid.prev_clamp(a1, p[a1]) } else { p[a1] };
                    p[a2] = if o2 == 0 { grid.prev_clamp(a2, p[a2]) } else { p[a2] };
                    sum += bc[grid.idx(p[0], p[1], p[2])];
                }
            }
        }
        out[d] = 0.125 * sum;
    }
    // Transverse component c differs from the edge location in exactly one
    // axis (the remaining one), hence a 2-point mean.
    let (d1, d2) = cyclic(d);
    for &c in [d1, d2].iter() {
        let bc = b.comp(c);
        let other = 3 - d - c; // the axis where locations disagree
        let mut p = [i, j, k];
        p[other] = grid.prev_clamp(other, p[other]);
        out[c] = 0.5 * (bc[e] + bc[grid.idx(p[0], p[1], p[2])]);
    }
    out
}

/// Full velocity vector at the midpoint of a d-edge: longitudinal is the DOF
/// itself, transverse components are 4-point means of parallel edges.
pub fn u_vec_at_edge(grid: &Grid, u: &VectorField, d: usize, i: usize, j: usize, k: usize) -> [f64; 3] {
    let e = grid.idx(i, j, k);
    let (d1, d2) = cyclic(d);
    let mut out = [0.0; 3];
    out[d] = u.comp(d)[e];
    out[d1] = edge_comp_at_edge(grid, u, d, d1, i, j, k);
    out[d2] = edge_comp_at_edge(grid, u, d, d2, i, j, k);
    out
}

#[inline]
pub fn cyclic(d: usize) -> (usize, usize) {
    match d {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    }
}

/// Edge component `c` averaged to nodes (2-point along the edge direction).
pub fn edge_comp_at_node(grid: &Grid, u: &VectorField, c: usize, i: usize, j: usize, k: usize) -> f64 {
    let uc = u.comp(c);
    let here = grid.idx(i, j, k);
    let mut p = [i, j, k];
    p[c] = grid.prev_clamp(c, p[c]);
    0.5 * (uc[here] + uc[grid.idx(p[0], p[1], p[2])])
}

/// Face component `c` averaged to nodes (4-point in the two transverse axes).
pub fn face_comp_at_node(grid: &Grid, b: &VectorField, c: usize, i: usize, j: usize, k: usize) -> f64 {
    let bc = b.comp(c);
    let (a1, a2) = match c {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let idx0 = [i, j, k];
    let mut sum = 0.0;
    for o1 in 0..2usize {
        for o2 in 0..2usize {
            let mut p = idx0;
            p[a1] = if o1 == 0 { grid.prev_clamp(a1, p[a1]) } else { p[a1] };
            p[a2] = if o2 == 0 { grid.prev_clamp(a2, p[a2]) } else { p[a2] };
            sum += bc[grid.idx(p[0], p[1], p[2])];
        }
    }
    0.25 * sum
}

/// Which discrete cross product the Alfvenic step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossKind {
    /// Single-interpolation collocation of u x B at edge midpoints.
    Default,
    /// Orthogonality-preserving P1(u x P1(B)) with exact outer integration.
    OrthoPreserving,
}

// 1D quadrature tables for the exact outer projection, as (u-offset, P-offset,
// weight) relative to the edge index along one axis. The three patterns cover
// the basis factor (cell indicator), the u-field factor, and the P-field
// factor being the piecewise-constant direction.
const NODE_NODE: [(i32, i32, f64); 4] = [
    (0, 0, 1.0 / 3.0),
    (0, 1, 1.0 / 6.0),
    (1, 0, 1.0 / 6.0),
    (1, 1, 1.0 / 3.0),
];
const CELL_NODE: [(i32, i32, f64); 4] = [
    (-1, -1, 1.0 / 6.0),
    (-1, 0, 1.0 / 3.0),
    (0, 0, 1.0 / 3.0),
    (0, 1, 1.0 / 6.0),
];
const NODE_CELL: [(i32, i32, f64); 4] = [
    (-1, -1, 1.0 / 6.0),
    (0, -1, 1.0 / 3.0),
    (0, 0, 1.0 / 3.0),
    (1, 0, 1.0 / 6.0),
];

#[inline]
fn offs_clamp(grid: &Grid, axis: usize, i: usize, off: i32) -> usize {
    match off {
        0 => i,
        1 => grid.next_clamp(axis, i),
        -1 => grid.prev_clamp(axis, i),
        _ => unreachable!(),
    }
}

/// One bilinear term of the exact-integration cross product:
/// contribution of u-component `ud` times P-component `pd` to the output
/// component `d`, with the given sign. `adjoint = false` gathers into
/// `out[d]`; `adjoint = true` scatters `sign * w * P * input[d]` into
/// `out[ud]`, which makes the adjoint exact by construction.
fn cross_term(
    grid: &Grid,
    d: usize,
    ud: usize,
    pd: usize,
    sign: f64,
    input: &VectorField,
    pb: &VectorField,
    out: &mut VectorField,
    adjoint: bool,
) {
    let table = |axis: usize| -> &'static [(i32, i32, f64); 4] {
        if axis == d {
            &NODE_NODE
        } else if axis == ud {
            &CELL_NODE
        } else {
            &NODE_CELL
        }
    };
    let (t0, t1, t2) = (table(0), table(1), table(2));
    let pcomp = pb.comp(pd).to_vec();
    let n = grid.n;
    if !adjoint {
        let ucomp = input.comp(ud).to_vec();
        let outd = out.comp_mut(d);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let e = grid.idx(i, j, k);
                    let mut acc = 0.0;
                    for &(a_u, a_p, wa) in t0.iter() {
                        let iu = offs_clamp(grid, 0, i, a_u);
                        let ip = offs_clamp(grid, 0, i, a_p);
                        for &(b_u, b_p, wb) in t1.iter() {
                            let ju = offs_clamp(grid, 1, j, b_u);
                            let jp = offs_clamp(grid, 1, j, b_p);
                            let wab = wa * wb;
                            for &(c_u, c_p, wc) in t2.iter() {
                                let ku = offs_clamp(grid, 2, k, c_u);
                                let kp = offs_clamp(grid, 2, k, c_p);
                                acc += wab
                                    * wc
                                    * ucomp[grid.idx(iu, ju, ku)]
                                    * pcomp[grid.idx(ip, jp, kp)];
                            }
                        }
                    }
                    outd[e] += sign * acc;
                }
            }
        }
    } else {
        let ycomp = input.comp(d).to_vec();
        let outu = out.comp_mut(ud);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let e = grid.idx(i, j, k);
                    let ye = sign * ycomp[e];
                    if ye == 0.0 {
                        continue;
                    }
                    for &(a_u, a_p, wa) in t0.iter() {
                        let iu = offs_clamp(grid, 0, i, a_u);
                        let ip = offs_clamp(grid, 0, i, a_p);
                        for &(b_u, b_p, wb) in t1.iter() {
                            let ju = offs_clamp(grid, 1, j, b_u);
                            let jp = offs_clamp(grid, 1, j, b_p);
                            let wab = wa * wb;
                            for &(c_u, c_p, wc) in t2.iter() {
                                let ku = offs_clamp(grid, 2, k, c_u);
                                let kp = offs_clamp(grid, 2, k, c_p);
                                outu[grid.idx(iu, ju, ku)] +=
                                    ye * wab * wc * pcomp[grid.idx(ip, jp, kp)];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Frozen magnetic data for the linear map u -> P_B u and its transpose.
pub struct CrossOperator {
    pub kind: CrossKind,
    /// For `OrthoPreserving`: P1(B) on edges. For `Default`: unused.
    p1b: Option<VectorField>,
    /// For `Default`: transverse face values at edges (t1 = comp d+1, t2 = comp d+2).
    t_face: Option<(VectorField, VectorField)>,
}

impl CrossOperator {
    pub fn new(grid: &Grid, kind: CrossKind, b: &VectorField) -> Self {
        match kind {
            CrossKind::OrthoPreserving => CrossOperator {
                kind,
                p1b: Some(p1_face_to_edge(grid, b)),
                t_face: None,
            },
            CrossKind::Default => CrossOperator {
                kind,
                p1b: None,
                t_face: Some(interp_face_to_edge(grid, b)),
            },
        }
    }

    /// P_B u: edge field -> edge field, linear in u.
    pub fn apply(&self, grid: &Grid, u: &VectorField) -> VectorField {
        assert_eq!(u.space, Space::Edge);
        let mut out = VectorField::zeros(grid, Space::Edge);
        match self.kind {
            CrossKind::OrthoPreserving => {
                let pb = self.p1b.as_ref().unwrap();
                for (d, d1, d2) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
                    cross_term(grid, d, d1, d2, 1.0, u, pb, &mut out, false);
                    cross_term(grid, d, d2, d1, -1.0, u, pb, &mut out, false);
                }
            }
            CrossKind::Default => {
                let (t1, t2) = self.t_face.as_ref().unwrap();
                for (d, d1, d2) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
                    let b1 = t1.comp(d); // component d1 at d-edges
                    let b2 = t2.comp(d); // component d2 at d-edges
                    for k in 0..grid.n[2] {
                        for j in 0..grid.n[1] {
                            for i in 0..grid.n[0] {
                                let e = grid.idx(i, j, k);
                                let u1 = edge_comp_at_edge(grid, u, d, d1, i, j, k);
                                let u2 = edge_comp_at_edge(grid, u, d, d2, i, j, k);
                                out.comp_mut(d)[e] = u1 * b2[e] - u2 * b1[e];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Exact transpose P_B^T y (scatter of the gather).
    pub fn apply_transpose(&self, grid: &Grid, y: &VectorField) -> VectorField {
        assert_eq!(y.space, Space::Edge);
        let mut out = VectorField::zeros(grid, Space::Edge);
        match self.kind {
            CrossKind::OrthoPreserving => {
                let pb = self.p1b.as_ref().unwrap();
                for (d, d1, d2) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
                    cross_term(grid, d, d1, d2, 1.0, y, pb, &mut out, true);
                    cross_term(grid, d, d2, d1, -1.0, y, pb, &mut out, true);
                }
            }
            CrossKind::Default => {
                let (t1, t2) = self.t_face.as_ref().unwrap();
                for (d, d1, d2) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
                    let b1 = t1.comp(d).to_vec();
                    let b2 = t2.comp(d).to_vec();
                    let yd = y.comp(d).to_vec();
                    for k in 0..grid.n[2] {
                        for j in 0..grid.n[1] {
                            for i in 0..grid.n[0] {
                                let e = grid.idx(i, j, k);
                                if yd[e] == 0.0 {
                                    continue;
                                }
                                // transpose of the two 4-point gathers
                                let w1 = 0.25 * yd[e] * b2[e];
                                let w2 = -0.25 * yd[e] * b1[e];
                                scatter_edge_comp(grid, &mut out, d, d1, i, j, k, w1);
                                scatter_edge_comp(grid, &mut out, d, d2, i, j, k, w2);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn p1b(&self) -> Option<&VectorField> {
        self.p1b.as_ref()
    }
}

#[inline]
fn scatter_edge_comp(grid: &Grid, out: &mut VectorField, d: usize, c: usize, i: usize, j: usize, k: usize, w: f64) {
    let idx0 = [i, j, k];
    for od in 0..2usize {
        for oc in 0..2usize {
            let mut p = idx0;
            p[d] = if od == 0 { p[d] } else { grid.next_clamp(d, p[d]) };
            p[c] = if oc == 0 { grid.prev_clamp(c, p[c]) } else { p[c] };
            out.comp_mut(c)[grid.idx(p[0], p[1], p[2])] += w;
        }
    }
}
