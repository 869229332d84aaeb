//! Ideal-gas thermodynamics, characteristic speeds of the split sub-systems,
//! and the coupled FE/FV solution state.
//!
//! Unit convention: the stored magnetic field absorbs sqrt(4*pi), so the
//! Alfven speed is c_a^2 = B_axis^2 / rho and the Lorentz force carries no
//! 4*pi factor. Table values quoted as B/sqrt(4*pi) are used directly.

use crate::error::{Result, SimError};
use crate::field::{DualConserved, ScalarField, VectorField};
use crate::mesh::{Grid, Space};
use crate::ops;

/// Physical parameters of a run.
#[derive(Debug, Clone, Copy)]
pub struct GasParams {
    pub gamma: f64,
    pub c_v: f64,
    pub mu: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl Default for GasParams {
    fn default() -> Self {
        GasParams { gamma: 5.0 / 3.0, c_v: 1.0, mu: 0.0, kappa: 0.0, eta: 0.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EosOut {
    pub e: f64,
    pub h: f64,
    pub temperature: f64,
    pub c: f64,
}

/// Ideal-gas relations. `p >= 0` is assumed for the sound speed; callers that
/// can see negative pressures go through the clamped-enthalpy path instead.
pub fn eos(p: f64, rho: f64, gamma: f64, c_v: f64) -> Result<EosOut> {
    if !(rho > 0.0) {
        return Err(SimError::State(format!("eos: non-positive density {rho}")));
    }
    let gm1 = gamma - 1.0;
    let e = p / (gm1 * rho);
    let h = gamma / gm1 * p / rho;
    let temperature = p / (rho * c_v * gm1);
    let c = if p >= 0.0 { (gamma * p / rho).sqrt() } else { f64::NAN };
    Ok(EosOut { e, h, temperature, c })
}

#[derive(Debug, Clone, Copy)]
pub struct WaveSpeeds {
    pub c_a: f64,
    pub c_s: f64,
    pub c_f: f64,
    pub c: f64,
}

/// Pointwise primitive sample used for the characteristic formulas.
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    pub rho: f64,
    pub u: [f64; 3],
    pub p: f64,
    pub b: [f64; 3],
}

/// Alfven / slow / fast magnetosonic speeds along `axis`.
pub fn wavespeeds(s: &PointState, axis: usize, gamma: f64) -> Result<WaveSpeeds> {
    if !(s.rho > 0.0) {
        return Err(SimError::State(format!("wavespeeds: non-positive density {}", s.rho)));
    }
    let c2 = (gamma * s.p.max(0.0) / s.rho).max(0.0);
    let b2 = (s.b[0] * s.b[0] + s.b[1] * s.b[1] + s.b[2] * s.b[2]) / s.rho;
    let ca2 = s.b[axis] * s.b[axis] / s.rho;
    let sum = b2 + c2;
    // Analytically non-negative; the clamp guards round-off.
    let disc = (sum * sum - 4.0 * ca2 * c2).max(0.0).sqrt();
    let cs2 = (0.5 * (sum - disc)).max(0.0);
    let cf2 = 0.5 * (sum + disc);
    Ok(WaveSpeeds { c_a: ca2.sqrt(), c_s: cs2.sqrt(), c_f: cf2.sqrt(), c: c2.sqrt() })
}

/// Which eigenvalue family bounds a quantity (Rusanov radius, time step).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaKind {
    V,
    P,
    B,
    Mhd,
}

impl LambdaKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "v" => Ok(LambdaKind::V),
            "p" => Ok(LambdaKind::P),
            "b" => Ok(LambdaKind::B),
            "mhd" => Ok(LambdaKind::Mhd),
            _ => Err(SimError::Config(format!("unknown lambda kind '{s}' (expected v|p|b|mhd)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LambdaKind::V => "v",
            LambdaKind::P => "p",
            LambdaKind::B => "b",
            LambdaKind::Mhd => "mhd",
        }
    }
}

/// Spectral radius of the selected mode family along `axis`.
pub fn lambda_set(kind: LambdaKind, s: &PointState, axis: usize, gamma: f64) -> Result<f64> {
    if !(s.rho > 0.0) {
        return Err(SimError::State(format!("lambda_set: non-positive density {}", s.rho)));
    }
    let v = s.u[axis];
    Ok(match kind {
        LambdaKind::V => v.abs(),
        LambdaKind::P => {
            let c2 = (gamma * s.p.max(0.0) / s.rho).max(0.0);
            0.5 * (v.abs() + (v * v + 4.0 * c2).sqrt())
        }
        LambdaKind::B => {
            let b2 = (s.b[0] * s.b[0] + s.b[1] * s.b[1] + s.b[2] * s.b[2]) / s.rho;
            0.5 * (v.abs() + (v * v + 4.0 * b2).sqrt())
        }
        LambdaKind::Mhd => v.abs() + wavespeeds(s, axis, gamma)?.c_f,
    })
}

/// Dual-cell conserved load (rho, m, rhoE) from primitives.
pub fn prim_to_cons(rho: f64, u: [f64; 3], p: f64, gamma: f64) -> [f64; 5] {
    let m = [rho * u[0], rho * u[1], rho * u[2]];
    let ke = 0.5 * (m[0] * u[0] + m[1] * u[1] + m[2] * u[2]);
    [rho, m[0], m[1], m[2], p / (gamma - 1.0) + ke]
}

/// Inverse map; the recovered pressure may be negative, which callers must
/// treat explicitly (the acoustic step clamps its enthalpy weights).
pub fn cons_to_prim(q: &[f64; 5], gamma: f64) -> Result<(f64, [f64; 3], f64)> {
    let rho = q[0];
    if !(rho > 0.0) {
        return Err(SimError::State(format!("cons_to_prim: non-positive density {rho}")));
    }
    let u = [q[1] / rho, q[2] / rho, q[3] / rho];
    let ke = 0.5 * (q[1] * u[0] + q[2] * u[1] + q[3] * u[2]);
    let p = (gamma - 1.0) * (q[4] - ke);
    Ok((rho, u, p))
}

/// Coupled solution state. Nodal rho doubles as the dual-cell density, so the
/// authoritative conserved set is (rho, dual.m, dual.rho_e); the nodal
/// pressure and edge velocity are derived fields refreshed by the
/// synchronization protocol.
#[derive(Debug, Clone)]
pub struct MhdState {
    pub rho: ScalarField,
    pub p: ScalarField,
    pub u: VectorField,
    pub b: VectorField,
    pub dual: DualConserved,
    pub gas: GasParams,
}

impl MhdState {
    pub fn zeros(grid: &Grid, gas: GasParams) -> Self {
        MhdState {
            rho: ScalarField::zeros(grid, Space::Node),
            p: ScalarField::zeros(grid, Space::Node),
            u: VectorField::zeros(grid, Space::Edge),
            b: VectorField::zeros(grid, Space::Face),
            dual: DualConserved::zeros(grid),
            gas,
        }
    }

    /// Fill the dual conserved arrays from the current primitive fields,
    /// sampling edge velocities back to nodes with two-point means.
    pub fn sync_dual_from_primitives(&mut self, grid: &Grid) {
        let gm1 = self.gas.gamma - 1.0;
        for k in 0..grid.n[2] {
            for j in 0..grid.n[1] {
                for i in 0..grid.n[0] {
                    let e = grid.idx(i, j, k);
                    let rho = self.rho.data[e];
                    let u = [
                        ops::edge_comp_at_node(grid, &self.u, 0, i, j, k),
                        ops::edge_comp_at_node(grid, &self.u, 1, i, j, k),
                        ops::edge_comp_at_node(grid, &self.u, 2, i, j, k),
                    ];
                    let m = [rho * u[0], rho * u[1], rho * u[2]];
                    let ke = 0.5 * (m[0] * u[0] + m[1] * u[1] + m[2] * u[2]);
                    self.dual.m[0][e] = m[0];
                    self.dual.m[1][e] = m[1];
                    self.dual.m[2][e] = m[2];
                    self.dual.rho_e[e] = self.p.data[e] / gm1 + ke;
                }
            }
        }
    }

    /// p := (gamma-1) (rhoE - |m|^2 / (2 rho)) on nodes. Returns how many
    /// nodes came out non-positive (flagged, not fatal: the acoustic clamp
    /// handles them).
    pub fn derive_pressure_from_energy(&mut self) -> usize {
        let gm1 = self.gas.gamma - 1.0;
        let mut negatives = 0;
        for e in 0..self.rho.data.len() {
            let rho = self.rho.data[e];
            let m2 = self.dual.m[0][e] * self.dual.m[0][e]
                + self.dual.m[1][e] * self.dual.m[1][e]
                + self.dual.m[2][e] * self.dual.m[2][e];
            let p = gm1 * (self.dual.rho_e[e] - 0.5 * m2 / rho);
            if p <= 0.0 {
                negatives += 1;
            }
            self.p.data[e] = p;
        }
        negatives
    }

    /// u_e := (two-adjacent-dual-cell mean of m) / rho_edge.
    pub fn derive_edge_velocity(&mut self, grid: &Grid) -> Result<()> {
        let rho_e = ops::average_rho_to_edges(grid, &self.rho)?;
        for c in 0..3 {
            let m = &self.dual.m[c];
            for k in 0..grid.n[2] {
                for j in 0..grid.n[1] {
                    for i in 0..grid.n[0] {
                        let e = grid.idx(i, j, k);
                        let mut pnb = [i, j, k];
                        pnb[c] = grid.next_clamp(c, pnb[c]);
                        let m_edge = 0.5 * (m[e] + m[grid.idx(pnb[0], pnb[1], pnb[2])]);
                        self.u.comp_mut(c)[e] = m_edge / rho_e.comp(c)[e];
                    }
                }
            }
        }
        Ok(())
    }

    /// Hard check used after explicit updates.
    pub fn check_positive_density(&self, grid: &Grid) -> Result<()> {
        for (e, &v) in self.rho.data.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                let (i, j, k) = grid.decompose(e);
                return Err(SimError::State(format!(
                    "non-positive density {v} at dual cell ({i},{j},{k})"
                )));
            }
        }
        Ok(())
    }

    /// Primitive point sample at a node (dual barycenter), with edge/face
    /// fields interpolated in.
    pub fn point_state_at_node(&self, grid: &Grid, i: usize, j: usize, k: usize) -> PointState {
        let e = grid.idx(i, j, k);
        PointState {
            rho: self.rho.data[e],
            p: self.p.data[e],
            u: [
                ops::edge_comp_at_node(grid, &self.u, 0, i, j, k),
                ops::edge_comp_at_node(grid, &self.u, 1, i, j, k),
                ops::edge_comp_at_node(grid, &self.u, 2, i, j, k),
            ],
            b: [
                ops::face_comp_at_node(grid, &self.b, 0, i, j, k),
                ops::face_comp_at_node(grid, &self.b, 1, i, j, k),
                ops::face_comp_at_node(grid, &self.b, 2, i, j, k),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eos_reference_values() {
        let g = 5.0 / 3.0;
        let out = eos(1.0, 1.0, g, 1.0).unwrap();
        assert!((out.c - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((out.h - 2.5).abs() < 1e-12);
        let z = eos(0.0, 2.0, g, 1.0).unwrap();
        assert_eq!(z.e, 0.0);
        assert_eq!(z.h, 0.0);
        assert_eq!(z.temperature, 0.0);
        assert_eq!(z.c, 0.0);
        assert!(eos(1.0, 0.0, g, 1.0).is_err());
        // linear in p
        let a = eos(0.3, 1.7, g, 1.0).unwrap();
        let b = eos(0.6, 1.7, g, 1.0).unwrap();
        assert!((b.e - 2.0 * a.e).abs() < 1e-14);
    }

    #[test]
    fn wavespeed_limits() {
        let g = 5.0 / 3.0;
        // Hydrodynamic limit: B = 0.
        let s = PointState { rho: 1.0, u: [0.0; 3], p: 1.0, b: [0.0; 3] };
        let w = wavespeeds(&s, 0, g).unwrap();
        assert!(w.c_a == 0.0 && w.c_s == 0.0);
        assert!((w.c_f - w.c).abs() < 1e-13);
        // Degenerate aligned case: |B|^2 = rho c^2 along the axis.
        let c2 = g;
        let s = PointState { rho: 1.0, u: [0.0; 3], p: 1.0, b: [c2.sqrt(), 0.0, 0.0] };
        let w = wavespeeds(&s, 0, g).unwrap();
        assert!((w.c_s - w.c).abs() < 1e-12);
        assert!((w.c_f - w.c).abs() < 1e-12);
        assert!((w.c_a - w.c).abs() < 1e-12);
    }

    #[test]
    fn wavespeeds_match_dispersion_roots() {
        // Cross-check c_s, c_f against a direct quadratic-root oracle in
        // lambda^2: lambda^4 - (b^2+c^2) lambda^2 + c_a^2 c^2 = 0.
        let g = 5.0 / 3.0;
        let mut r = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = PointState {
                rho: r.gen_range(0.2..3.0),
                u: [0.0; 3],
                p: r.gen_range(0.01..4.0),
                b: [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
            };
            let w = wavespeeds(&s, 0, g).unwrap();
            let c2 = g * s.p / s.rho;
            let b2 = (s.b[0] * s.b[0] + s.b[1] * s.b[1] + s.b[2] * s.b[2]) / s.rho;
            let ca2 = s.b[0] * s.b[0] / s.rho;
            for lam2 in [w.c_s * w.c_s, w.c_f * w.c_f] {
                let res = lam2 * lam2 - (b2 + c2) * lam2 + ca2 * c2;
                assert!(res.abs() < 1e-10 * (1.0 + lam2 * lam2));
            }
            assert!(w.c_s <= w.c_a + 1e-12 && w.c_a <= w.c_f + 1e-12);
        }
    }

    #[test]
    fn lambda_families() {
        let g = 5.0 / 3.0;
        let s = PointState { rho: 1.0, u: [0.0; 3], p: 1.0, b: [0.0; 3] };
        assert_eq!(lambda_set(LambdaKind::V, &s, 0, g).unwrap(), 0.0);
        let c = (5.0f64 / 3.0).sqrt();
        assert!((lambda_set(LambdaKind::P, &s, 0, g).unwrap() - c).abs() < 1e-13);
        assert!((lambda_set(LambdaKind::Mhd, &s, 0, g).unwrap() - c).abs() < 1e-13);
        // RP0-like: static but magnetically stiff.
        let s = PointState { rho: 1.0, u: [0.0; 3], p: 1e3, b: [100.0, 0.0, 100.0] };
        assert_eq!(lambda_set(LambdaKind::V, &s, 0, g).unwrap(), 0.0);
        assert!(lambda_set(LambdaKind::Mhd, &s, 0, g).unwrap() > 100.0);
        // b-family reduces to transport when B = 0.
        let s = PointState { rho: 1.0, u: [0.7, 0.0, 0.0], p: 1.0, b: [0.0; 3] };
        assert!((lambda_set(LambdaKind::B, &s, 0, g).unwrap() - 0.7).abs() < 1e-13);
        // Monotonicity on random states.
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = PointState {
                rho: r.gen_range(0.2..3.0),
                u: [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
                p: r.gen_range(0.01..4.0),
                b: [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
            };
            let sv = lambda_set(LambdaKind::V, &s, 0, g).unwrap();
            let sb = lambda_set(LambdaKind::B, &s, 0, g).unwrap();
            let sp = lambda_set(LambdaKind::P, &s, 0, g).unwrap();
            let sm = lambda_set(LambdaKind::Mhd, &s, 0, g).unwrap();
            assert!(sv <= sb + 1e-12);
            assert!(sp <= sm + 1e-12);
        }
    }

    #[test]
    fn cons_prim_round_trip() {
        let g = 5.0 / 3.0;
        // RP2 left state.
        let q = prim_to_cons(1.08, [1.2, 0.01, 0.5], 0.95, g);
        let expected = 0.95 / (g - 1.0) + 0.5 * 1.08 * (1.2f64 * 1.2 + 0.01 * 0.01 + 0.5 * 0.5);
        assert!((q[4] - expected).abs() < 1e-13);
        let (rho, u, p) = cons_to_prim(&q, g).unwrap();
        assert!((rho - 1.08).abs() < 1e-14);
        assert!((u[0] - 1.2).abs() < 1e-14);
        assert!((p - 0.95).abs() < 1e-14);
        // u = 0 gives rhoE = p/(gamma-1).
        let q = prim_to_cons(2.0, [0.0; 3], 3.0, g);
        assert!((q[4] - 3.0 / (g - 1.0)).abs() < 1e-14);
        // Random round trips.
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let rho = r.gen_range(0.1..5.0);
            let u = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
            let p = r.gen_range(0.01..10.0);
            let q = prim_to_cons(rho, u, p, g);
            let (r2, u2, p2) = cons_to_prim(&q, g).unwrap();
            assert!((r2 - rho).abs() < 1e-14 * rho);
            assert!((p2 - p).abs() < 1e-12 * p.max(1.0));
            for c in 0..3 {
                assert!((u2[c] - u[c]).abs() < 1e-12);
            }
        }
    }
}
