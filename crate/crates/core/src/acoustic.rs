//! Implicit pressure sub-system: SPD operator M0 + theta^2 dt^2 G^T M1[w] G
//! with clamped effective-enthalpy weights, Picard refresh of the weights,
//! matrix-free CG solve, momentum update m -= dt G p, and the conservative
//! dual-cell correctors.

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::fv;
use crate::linsolve::{cg, CgOptions};
use crate::mesh::{Grid, Space};
use crate::ops;
use crate::physics::MhdState;

#[derive(Debug, Clone)]
pub struct AcousticConfig {
    pub theta_p: f64,
    /// Number of Picard solves (>= 1).
    pub s_p: usize,
    /// Stabilization constant c_h in eps = c_h * dx / 2; 0 disables.
    pub c_h: f64,
    pub cg: CgOptions,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        AcousticConfig { theta_p: 1.0, s_p: 1, c_h: 0.0, cg: CgOptions::default() }
    }
}

/// Edge weights (gamma-1) * h_tilde: max(gamma p/rho, 0) plus the Rusanov-type
/// stabilization addend. `p_ref` is the Picard-frozen pressure iterate.
pub fn effective_enthalpy_weights(
    grid: &Grid,
    p_ref: &ScalarField,
    rho: &ScalarField,
    u: &VectorField,
    gamma: f64,
    theta_p: f64,
    dt: f64,
    c_h: f64,
) -> VectorField {
    let p_edge = ops::scalar_to_edges(grid, p_ref);
    let rho_edge = ops::scalar_to_edges(grid, rho);
    let mut w = VectorField::zeros(grid, Space::Edge);
    let gm1 = gamma - 1.0;
    for d in 0..3 {
        let stab_len = 0.5 * c_h * grid.d[d];
        for e in 0..grid.len() {
            let base = (gamma * p_edge.comp(d)[e] / rho_edge.comp(d)[e]).max(0.0);
            let mut val = base;
            if theta_p > 0.0 && c_h > 0.0 {
                // s_p at the edge: acoustic spectral radius with the clamped
                // sound speed.
                let v = u.comp(d)[e];
                let s_p = 0.5 * (v.abs() + (v * v + 4.0 * base).sqrt());
                val += gm1 * s_p * stab_len / (theta_p * dt);
            }
            w.comp_mut(d)[e] = val;
        }
    }
    w
}

/// y = M0 x + theta^2 dt^2 G^T M1[w] G x, matrix-free. `m1w` already carries
/// the volume factor.
pub fn apply_acoustic(grid: &Grid, m1w: &VectorField, theta_p: f64, dt: f64, x: &ScalarField) -> ScalarField {
    let vol = grid.volume();
    let gx = ops::apply_grad(grid, x);
    let mut weighted = VectorField::zeros(grid, Space::Edge);
    for c in 0..3 {
        for e in 0..grid.len() {
            weighted.comp_mut(c)[e] = m1w.comp(c)[e] * gx.comp(c)[e];
        }
    }
    let mut out = ops::grad_transpose(grid, &weighted);
    let s = theta_p * theta_p * dt * dt;
    for e in 0..grid.len() {
        out.data[e] = vol * x.data[e] + s * out.data[e];
    }
    out
}

/// Dual-cell average of u . m over the six incident edges (the overline
/// product of the kinetic-energy terms).
pub fn overline_um(grid: &Grid, u: &VectorField, m: &VectorField) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let e = grid.idx(i, j, k);
                let mut s = 0.0;
                for c in 0..3 {
                    let mut pm = [i, j, k];
                    pm[c] = grid.prev_clamp(c, pm[c]);
                    let em = grid.idx(pm[0], pm[1], pm[2]);
                    s += u.comp(c)[e] * m.comp(c)[e] + u.comp(c)[em] * m.comp(c)[em];
                }
                out[e] = 0.5 * s;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AcousticStats {
    pub cg_iterations: usize,
    pub picard_iterations: usize,
}

/// Full acoustic step: derive the entry pressure from the conserved energy,
/// run the Picard-CG loop, update momentum and the dual conserved load.
pub fn solve_acoustic_step(
    grid: &Grid,
    state: &mut MhdState,
    dt: f64,
    cfg: &AcousticConfig,
) -> Result<AcousticStats> {
    let gamma = state.gas.gamma;
    let gm1 = gamma - 1.0;
    let theta = cfg.theta_p;
    let vol = grid.volume();

    // Synchronization protocol: nodal p from the conserved energy.
    state.derive_pressure_from_energy();

    let p0 = state.p.clone();
    let u0 = state.u.clone();
    let rho_edge = ops::average_rho_to_edges(grid, &state.rho)?;
    let mut m_e0 = VectorField::zeros(grid, Space::Edge);
    for c in 0..3 {
        for e in 0..grid.len() {
            m_e0.comp_mut(c)[e] = rho_edge.comp(c)[e] * u0.comp(c)[e];
        }
    }
    let ovum0 = overline_um(grid, &u0, &m_e0);
    let gp0 = ops::apply_grad(grid, &p0);

    let mut p_new = p0.clone();
    let mut stats = AcousticStats::default();

    for s in 1..=cfg.s_p.max(1) {
        // Weights from the theta-weighted Picard iterate.
        let mut p_freeze = p0.clone();
        for e in 0..grid.len() {
            p_freeze.data[e] = (1.0 - theta) * p0.data[e] + theta * p_new.data[e];
        }
        let w = effective_enthalpy_weights(grid, &p_freeze, &state.rho, &u0, gamma, theta, dt, cfg.c_h);
        let mut m1w = VectorField::zeros(grid, Space::Edge);
        for c in 0..3 {
            for e in 0..grid.len() {
                m1w.comp_mut(c)[e] = w.comp(c)[e] * vol;
            }
        }

        // Kinetic-energy difference of the current momentum iterate.
        let ovum_s = if s == 1 {
            ovum0.clone()
        } else {
            let gpt = ops::apply_grad(grid, &p_freeze);
            let mut u_s = VectorField::zeros(grid, Space::Edge);
            let mut m_s = VectorField::zeros(grid, Space::Edge);
            for c in 0..3 {
                for e in 0..grid.len() {
                    let m = m_e0.comp(c)[e] - dt * gpt.comp(c)[e];
                    m_s.comp_mut(c)[e] = m;
                    u_s.comp_mut(c)[e] = m / rho_edge.comp(c)[e];
                }
            }
            overline_um(grid, &u_s, &m_s)
        };

        // Right-hand side.
        let mut transported = VectorField::zeros(grid, Space::Edge);
        let mut lap_p0 = VectorField::zeros(grid, Space::Edge);
        for c in 0..3 {
            for e in 0..grid.len() {
                transported.comp_mut(c)[e] = m1w.comp(c)[e] * m_e0.comp(c)[e];
                lap_p0.comp_mut(c)[e] = m1w.comp(c)[e] * gp0.comp(c)[e];
            }
        }
        let gt_m = ops::grad_transpose(grid, &transported);
        let gt_lap = ops::grad_transpose(grid, &lap_p0);
        let mut rhs = vec![0.0; grid.len()];
        let expl = theta * (1.0 - theta) * dt * dt;
        for e in 0..grid.len() {
            rhs[e] = vol * (p0.data[e] - gm1 * 0.5 * (ovum_s[e] - ovum0[e])) + dt * gt_m.data[e]
                - expl * gt_lap.data[e];
        }

        let apply = |x: &[f64], out: &mut [f64]| {
            let xf = ScalarField { space: Space::Node, data: x.to_vec() };
            let y = apply_acoustic(grid, &m1w, theta, dt, &xf);
            out.copy_from_slice(&y.data);
        };
        let res = cg(apply, &rhs, &p_new.data, &cfg.cg).require_converged("acoustic")?;
        stats.cg_iterations += res.iterations;
        stats.picard_iterations = s;
        p_new.data.copy_from_slice(&res.x);
    }

    // Momentum update at the theta-weighted pressure, then the conservative
    // dual-cell updates; edge velocity is re-derived from the dual momentum.
    let mut p_theta = p0.clone();
    for e in 0..grid.len() {
        p_theta.data[e] = (1.0 - theta) * p0.data[e] + theta * p_new.data[e];
    }
    let gpt = ops::apply_grad(grid, &p_theta);
    let mut m_e_theta = VectorField::zeros(grid, Space::Edge);
    for c in 0..3 {
        for e in 0..grid.len() {
            m_e_theta.comp_mut(c)[e] = m_e0.comp(c)[e] - theta * dt * gpt.comp(c)[e];
        }
    }
    fv::acoustic_corrector(grid, state, dt, &p_theta, &m_e_theta);
    state.p = p_new;
    state.derive_edge_velocity(grid)?;
    Ok(stats)
}
