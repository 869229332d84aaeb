//! Diagnostic recovery of the edge-based vector potential with weakly
//! vanishing divergence, by pseudo-time relaxation of the curl-curl system
//! with a projection enforcing the gauge, and the magnetic-helicity integral.

use crate::error::{Result, SimError};
use crate::field::{norm2, norm_inf, ScalarField, VectorField};
use crate::linsolve::{cg, CgOptions};
use crate::mesh::{BcKind, Grid, Space};
use crate::ops;

#[derive(Debug, Clone)]
pub struct VecPotOptions {
    /// Relative stagnation tolerance on consecutive iterates.
    pub eps: f64,
    pub max_outer: usize,
    pub cg: CgOptions,
    /// Pseudo-time step; `None` picks a value resolving the slowest mode of
    /// the implicitly-integrated curl-curl relaxation.
    pub pseudo_dt: Option<f64>,
}

impl Default for VecPotOptions {
    fn default() -> Self {
        VecPotOptions {
            eps: 1e-12,
            max_outer: 400,
            cg: CgOptions { rel_tol: 1e-13, ..Default::default() },
            pseudo_dt: None,
        }
    }
}

/// Solve curl A = B with <A, grad q> = 0, on fully periodic grids with
/// discretely divergence-free, zero-mean B. `guess` warm-starts the
/// relaxation (useful when tracking helicity along a run).
pub fn solve_vector_potential(
    grid: &Grid,
    b: &VectorField,
    guess: Option<&VectorField>,
    opts: &VecPotOptions,
) -> Result<VectorField> {
    assert_eq!(b.space, Space::Face);
    if grid.bc.iter().any(|&bc| bc != BcKind::Periodic) {
        return Err(SimError::Config("vector-potential recovery requires periodic axes".into()));
    }
    let div = ops::apply_div(grid, b);
    let bscale = norm_inf(&b.data).max(1e-300);
    let dmin = grid.d[0].min(grid.d[1]).min(grid.d[2]);
    if norm_inf(&div.data) > 1e-10 * bscale / dmin {
        return Err(SimError::State(format!(
            "vector-potential source is not divergence-free: |div B| = {:.3e}",
            norm_inf(&div.data)
        )));
    }
    // Harmonic (mean) components are not representable as a curl.
    let n = grid.len() as f64;
    for c in 0..3 {
        let mean: f64 = b.comp(c).iter().sum::<f64>() / n;
        if mean.abs() > 1e-10 * bscale {
            return Err(SimError::State(format!(
                "component {c} of B has nonzero mean {mean:.3e}: harmonic part not representable"
            )));
        }
    }

    let vol = grid.volume();
    let lmax = (0..3)
        .filter(|&a| grid.n[a] > 1)
        .map(|a| grid.domain_length(a))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let tau = opts
        .pseudo_dt
        .unwrap_or_else(|| 10.0 * (lmax / (2.0 * std::f64::consts::PI)).powi(2));

    let mut a = match guess {
        Some(g0) => g0.clone(),
        None => VectorField::zeros(grid, Space::Edge),
    };

    // rhs curl term is fixed: tau * C^T M2 B.
    let mut m2b = b.clone();
    for v in m2b.data.iter_mut() {
        *v *= vol;
    }
    let ctb = ops::curl_transpose(grid, &m2b);

    let apply_curlcurl = |x: &[f64], out: &mut [f64]| {
        let xf = VectorField::from_flat(grid, Space::Edge, x.to_vec());
        let mut cx = ops::apply_curl(grid, &xf);
        for v in cx.data.iter_mut() {
            *v *= vol;
        }
        let ct = ops::curl_transpose(grid, &cx);
        for e in 0..out.len() {
            out[e] = vol * x[e] + tau * ct.data[e];
        }
    };
    let apply_poisson = |x: &[f64], out: &mut [f64]| {
        let xf = ScalarField { space: Space::Node, data: x.to_vec() };
        let mut gx = ops::apply_grad(grid, &xf);
        for v in gx.data.iter_mut() {
            *v *= vol;
        }
        out.copy_from_slice(&ops::grad_transpose(grid, &gx).data);
    };

    let mut converged = false;
    for _ in 0..opts.max_outer {
        // Implicit curl-curl relaxation step.
        let mut rhs = vec![0.0; a.data.len()];
        for e in 0..rhs.len() {
            rhs[e] = vol * a.data[e] + tau * ctb.data[e];
        }
        let res = cg(apply_curlcurl, &rhs, &a.data, &opts.cg).require_converged("vecpot curl-curl")?;
        let a_star = VectorField::from_flat(grid, Space::Edge, res.x);

        // Gauge projection: A <- A* - grad chi with G^T M1 G chi = G^T M1 A*.
        let mut m1a = a_star.clone();
        for v in m1a.data.iter_mut() {
            *v *= vol;
        }
        let prhs = ops::grad_transpose(grid, &m1a).data;
        let chi = cg(apply_poisson, &prhs, &vec![0.0; grid.len()], &opts.cg)
            .require_converged("vecpot projection")?;
        let gchi = ops::apply_grad(grid, &ScalarField { space: Space::Node, data: chi.x });
        let mut a_new = a_star;
        for e in 0..a_new.data.len() {
            a_new.data[e] -= gchi.data[e];
        }

        let mut diff = 0.0f64;
        for e in 0..a_new.data.len() {
            let d = a_new.data[e] - a.data[e];
            diff += d * d;
        }
        let rel = diff.sqrt() / norm2(&a.data).max(1e-300);
        a = a_new;
        if rel <= opts.eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SimError::NonConvergence {
            phase: "vecpot relaxation".to_string(),
            iterations: opts.max_outer,
            residual: f64::NAN,
            history: Vec::new(),
        });
    }
    Ok(a)
}

/// H = sum_e A_e (P1 B)_e vol: with the exact-integral projection this equals
/// the integral of A_h . B_h, the pairing used by the conservation argument.
pub fn magnetic_helicity(grid: &Grid, a: &VectorField, b: &VectorField) -> f64 {
    let p1b = ops::p1_face_to_edge(grid, b);
    let vol = grid.volume();
    let mut h = 0.0;
    for e in 0..a.data.len() {
        h += a.data[e] * p1b.data[e] * vol;
    }
    h
}
