//! Matrix-free conjugate gradient for the SPD sub-systems. No preconditioning;
//! dot products are plain ordered reductions so serial runs are bitwise
//! reproducible.

use crate::error::{Result, SimError};
use crate::field::{axpy, dot, norm2};

#[derive(Debug, Clone)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-12, abs_tol: 0.0, max_iter: 10_000, record_history: false }
    }
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub history: Vec<f64>,
}

impl CgResult {
    /// Promote non-convergence to an error, tagging the phase for diagnostics.
    pub fn require_converged(self, phase: &str) -> Result<CgResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(SimError::NonConvergence {
                phase: phase.to_string(),
                iterations: self.iterations,
                residual: self.final_residual,
                history: self.history,
            })
        }
    }
}

/// Solve A x = b for symmetric positive definite `apply`, starting from `x0`.
pub fn cg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x0: &[f64],
    opts: &CgOptions,
) -> CgResult {
    let n = b.len();
    assert_eq!(x0.len(), n);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return CgResult {
            x: vec![0.0; n],
            iterations: 0,
            converged: true,
            final_residual: 0.0,
            history: if opts.record_history { vec![0.0] } else { Vec::new() },
        };
    }
    let target = (opts.rel_tol * bnorm).max(opts.abs_tol);

    let mut x = x0.to_vec();
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect();
    let mut rs = dot(&r, &r);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(rs.sqrt());
    }
    if rs.sqrt() <= target {
        return CgResult { x, iterations: 0, converged: true, final_residual: rs.sqrt(), history };
    }

    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= 0.0 {
            // Either round-off on an effectively converged system or a
            // non-SPD operator; report what we have.
            return CgResult {
                x,
                iterations: it - 1,
                converged: rs.sqrt() <= target,
                final_residual: rs.sqrt(),
                history,
            };
        }
        let alpha = rs / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        let rs_new = dot(&r, &r);
        if opts.record_history {
            history.push(rs_new.sqrt());
        }
        if rs_new.sqrt() <= target {
            return CgResult {
                x,
                iterations: it,
                converged: true,
                final_residual: rs_new.sqrt(),
                history,
            };
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    CgResult {
        x,
        iterations: opts.max_iter,
        converged: false,
        final_residual: rs.sqrt(),
        history,
    }
}

/// Dense Gaussian elimination with partial pivoting; test-oracle quality, also
/// used by the tiny-grid dense cross-checks.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().map(|row| row.clone()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 0.0, "singular matrix in dense_solve");
        for row in col + 1..n {
            let f = m[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for c in row + 1..n {
            s -= m[row][c] * x[c];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// Assemble the dense matrix of a linear operator by probing unit vectors.
pub fn assemble_dense(n: usize, mut apply: impl FnMut(&[f64], &mut [f64])) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![0.0; n]; n];
    let mut e = vec![0.0; n];
    let mut out = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        apply(&e, &mut out);
        for r in 0..n {
            cols[r][c] = out[r];
        }
        e[c] = 0.0;
    }
    cols
}
