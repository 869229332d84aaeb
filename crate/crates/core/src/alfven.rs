//! Implicit Alfvenic sub-system: SPD velocity operator
//! M1^rho + theta^2 dt^2 P_B^T C^T M2 C P_B with the cross-product stencil
//! frozen at the current Picard iterate, strong (divergence-free) magnetic
//! update, and the conservative dual-cell correctors.

use crate::error::{Result, SimError};
use crate::field::{norm2, VectorField};
use crate::fv;
use crate::linsolve::{cg, CgOptions};
use crate::mesh::{Grid, Space};
use crate::ops::{self, CrossKind, CrossOperator};
use crate::physics::MhdState;

#[derive(Debug, Clone)]
pub enum PicardPolicy {
    /// `Fixed(s_b)`: one solve plus `s_b` refreshes of the frozen field.
    Fixed(usize),
    /// Iterate until the relative change of B drops below `eps`.
    Tolerance { eps: f64, max_iter: usize },
}

impl Default for PicardPolicy {
    fn default() -> Self {
        PicardPolicy::Fixed(0)
    }
}

#[derive(Debug, Clone)]
pub struct AlfvenConfig {
    pub theta_b: f64,
    pub policy: PicardPolicy,
    pub cross: CrossKind,
    pub cg: CgOptions,
}

impl Default for AlfvenConfig {
    fn default() -> Self {
        AlfvenConfig {
            theta_b: 1.0,
            policy: PicardPolicy::default(),
            cross: CrossKind::Default,
            cg: CgOptions::default(),
        }
    }
}

pub struct AlfvenOperator<'a> {
    pub grid: &'a Grid,
    pub theta: f64,
    pub dt: f64,
    /// rho-weighted lumped edge mass (volume factor included).
    pub m1_rho: VectorField,
    pub cross: CrossOperator,
}

impl<'a> AlfvenOperator<'a> {
    /// K x = P_B^T C^T M2 C P_B x (five matrix-free sweeps).
    pub fn apply_curl_curl(&self, x: &VectorField) -> VectorField {
        let w = self.cross.apply(self.grid, x);
        let mut cb = ops::apply_curl(self.grid, &w);
        let vol = self.grid.volume();
        for v in cb.data.iter_mut() {
            *v *= vol;
        }
        let ct = ops::curl_transpose(self.grid, &cb);
        self.cross.apply_transpose(self.grid, &ct)
    }

    /// y = M1^rho x + theta^2 dt^2 K x.
    pub fn apply(&self, x: &VectorField) -> VectorField {
        let mut out = self.apply_curl_curl(x);
        let s = self.theta * self.theta * self.dt * self.dt;
        for e in 0..self.m1_rho.data.len() {
            out.data[e] = self.m1_rho.data[e] * x.data[e] + s * out.data[e];
        }
        out
    }

    /// rhs = M1^rho u0 - dt P_B^T C^T M2 B0 - theta(1-theta) dt^2 K u0.
    pub fn rhs(&self, u0: &VectorField, b0: &VectorField) -> Vec<f64> {
        let vol = self.grid.volume();
        let mut m2b = b0.clone();
        for v in m2b.data.iter_mut() {
            *v *= vol;
        }
        let ct = ops::curl_transpose(self.grid, &m2b);
        let ptb = self.cross.apply_transpose(self.grid, &ct);
        let ku0 = self.apply_curl_curl(u0);
        let expl = self.theta * (1.0 - self.theta) * self.dt * self.dt;
        let mut rhs = vec![0.0; u0.data.len()];
        for e in 0..rhs.len() {
            rhs[e] = self.m1_rho.data[e] * u0.data[e] - self.dt * ptb.data[e] - expl * ku0.data[e];
        }
        rhs
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlfvenStats {
    pub cg_iterations: usize,
    pub picard_iterations: usize,
}

/// Finite-element half of the step: Picard loop over the frozen field, CG
/// solve for the velocity, strong curl update of B (div B preserved
/// identically). Returns the new FE fields without touching the dual load.
pub fn fe_update(
    grid: &Grid,
    rho: &crate::field::ScalarField,
    u0: &VectorField,
    b0: &VectorField,
    dt: f64,
    cfg: &AlfvenConfig,
) -> Result<(VectorField, VectorField, AlfvenStats)> {
    let theta = cfg.theta_b;
    let vol = grid.volume();
    let rho_edge = ops::average_rho_to_edges(grid, rho)?;
    let mut m1_rho = rho_edge.clone();
    for v in m1_rho.data.iter_mut() {
        *v *= vol;
    }

    let mut b_iter = b0.clone();
    let mut u_new = u0.clone();
    let mut stats = AlfvenStats::default();

    let (max_iters, tol) = match cfg.policy {
        PicardPolicy::Fixed(s_b) => (s_b + 1, None),
        PicardPolicy::Tolerance { eps, max_iter } => (max_iter.max(1), Some(eps)),
    };

    for s in 1..=max_iters {
        // Freeze B at the theta-weighted current iterate.
        let mut b_freeze = b0.clone();
        for e in 0..b_freeze.data.len() {
            b_freeze.data[e] = (1.0 - theta) * b0.data[e] + theta * b_iter.data[e];
        }
        let op = AlfvenOperator {
            grid,
            theta,
            dt,
            m1_rho: m1_rho.clone(),
            cross: CrossOperator::new(grid, cfg.cross, &b_freeze),
        };
        let rhs = op.rhs(u0, b0);
        let apply = |x: &[f64], out: &mut [f64]| {
            let xf = VectorField::from_flat(grid, Space::Edge, x.to_vec());
            out.copy_from_slice(&op.apply(&xf).data);
        };
        let res = cg(apply, &rhs, &u_new.data, &cfg.cg).require_converged("alfven")?;
        stats.cg_iterations += res.iterations;
        stats.picard_iterations = s;
        u_new = VectorField::from_flat(grid, Space::Edge, res.x);

        // Strong induction update from the theta-weighted velocity.
        let mut u_theta = u0.clone();
        for e in 0..u_theta.data.len() {
            u_theta.data[e] = (1.0 - theta) * u0.data[e] + theta * u_new.data[e];
        }
        let w = op.cross.apply(grid, &u_theta);
        let cw = ops::apply_curl(grid, &w);
        let mut b_new = b0.clone();
        for e in 0..b_new.data.len() {
            b_new.data[e] += dt * cw.data[e];
        }

        match tol {
            None => {
                b_iter = b_new;
                if s == max_iters {
                    break;
                }
            }
            Some(eps) => {
                let mut diff = 0.0f64;
                for e in 0..b_new.data.len() {
                    let d = b_new.data[e] - b_iter.data[e];
                    diff += d * d;
                }
                let scale = norm2(&b_iter.data).max(1e-300);
                let rel = diff.sqrt() / scale;
                b_iter = b_new;
                if rel <= eps {
                    break;
                }
                if s == max_iters {
                    return Err(SimError::NonConvergence {
                        phase: "alfven picard".to_string(),
                        iterations: s,
                        residual: rel,
                        history: Vec::new(),
                    });
                }
            }
        }
    }

    Ok((u_new, b_iter, stats))
}

/// Full Alfvenic step: the FE update followed by the conservative dual-cell
/// correctors; the edge velocity is re-derived from the corrected dual
/// momentum per the synchronization protocol.
pub fn solve_alfven_step(
    grid: &Grid,
    state: &mut MhdState,
    dt: f64,
    cfg: &AlfvenConfig,
) -> Result<AlfvenStats> {
    let theta = cfg.theta_b;
    let u0 = state.u.clone();
    let b0 = state.b.clone();
    let (u_new, b_new, stats) = fe_update(grid, &state.rho, &u0, &b0, dt, cfg)?;
    state.u = u_new.clone();
    state.b = b_new.clone();

    let mut u_theta = u0.clone();
    let mut b_theta = b0.clone();
    for e in 0..u_theta.data.len() {
        u_theta.data[e] = (1.0 - theta) * u0.data[e] + theta * u_new.data[e];
        b_theta.data[e] = (1.0 - theta) * b0.data[e] + theta * b_new.data[e];
    }
    fv::alfven_corrector(grid, state, dt, &u_theta, &b_theta);
    state.derive_edge_velocity(grid)?;
    Ok(stats)
}
