//! Uniform Cartesian grid with a barycentric dual, shared by the finite-element
//! and finite-volume halves of the solver.
//!
//! Index conventions (0-based arrays, one scalar DOF of every space per cell on
//! periodic grids):
//!   node  (i,j,k) sits at (x_{i-1/2}, y_{j-1/2}, z_{k-1/2})
//!   x-edge(i,j,k) sits at (x_i,       y_{j-1/2}, z_{k-1/2})
//!   x-face(i,j,k) sits at (x_{i-1/2}, y_j,       z_k      )
//!   cell  (i,j,k) sits at (x_i,       y_j,       z_k      )
//! where x_i = origin.x + i*dx are the primal cell centers. The dual cell of
//! node (i,j,k) spans [x_{i-1}, x_i] x [y_{j-1}, y_j] x [z_{k-1}, z_k]; its
//! barycenter is the node itself, so nodal values double as dual-cell averages.
//!
//! All dimensionalities are 3D grids with collapsed axes (count 1, periodic).

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Periodic,
    /// Ghost values replicate the nearest interior DOF; implicit operators use
    /// a homogeneous-Neumann stencil truncation on these axes.
    Transmissive,
}

/// The four discrete de Rham spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Sigma_0: vertex values (doubles as dual-cell averages).
    Node,
    /// Sigma_1: edge values, 3 components.
    Edge,
    /// Sigma_2: face values, 3 components.
    Face,
    /// Sigma_3: cell values.
    Cell,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub n: [usize; 3],
    pub d: [f64; 3],
    /// Center of cell (0,0,0); the domain starts half a spacing below it.
    pub origin: [f64; 3],
    pub bc: [BcKind; 3],
}

impl Grid {
    /// Grid over `[0, L]` per axis. Collapsed axes (count 1) should be periodic.
    pub fn new(n: [usize; 3], lengths: [f64; 3], bc: [BcKind; 3]) -> Result<Self> {
        Self::with_start(n, lengths, [0.0; 3], bc)
    }

    /// Grid over `[start, start + L]` per axis.
    pub fn with_start(
        n: [usize; 3],
        lengths: [f64; 3],
        start: [f64; 3],
        bc: [BcKind; 3],
    ) -> Result<Self> {
        for a in 0..3 {
            if n[a] < 1 {
                return Err(SimError::Config(format!("axis {a}: cell count must be >= 1")));
            }
            if !(lengths[a] > 0.0) {
                return Err(SimError::Config(format!(
                    "axis {a}: length must be positive, got {}",
                    lengths[a]
                )));
            }
        }
        let d = [lengths[0] / n[0] as f64, lengths[1] / n[1] as f64, lengths[2] / n[2] as f64];
        let origin = [start[0] + 0.5 * d[0], start[1] + 0.5 * d[1], start[2] + 0.5 * d[2]];
        Ok(Grid { n, d, origin, bc })
    }

    /// Scalar DOFs per space (vector spaces have 3 of these blocks).
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dof_count(&self, space: Space) -> usize {
        match space {
            Space::Node | Space::Cell => self.len(),
            Space::Edge | Space::Face => 3 * self.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.d[0] * self.d[1] * self.d[2]
    }

    pub fn domain_start(&self, axis: usize) -> f64 {
        self.origin[axis] - 0.5 * self.d[axis]
    }

    pub fn domain_length(&self, axis: usize) -> f64 {
        self.n[axis] as f64 * self.d[axis]
    }

    /// Primal cell center coordinate along `axis`.
    #[inline]
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.d[axis]
    }

    /// Primal node coordinate along `axis` (x_{i-1/2}).
    #[inline]
    pub fn node(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 - 0.5) * self.d[axis]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n[0] && j < self.n[1] && k < self.n[2]);
        (k * self.n[1] + j) * self.n[0] + i
    }

    #[inline]
    pub fn decompose(&self, lin: usize) -> (usize, usize, usize) {
        let i = lin % self.n[0];
        let j = (lin / self.n[0]) % self.n[1];
        let k = lin / (self.n[0] * self.n[1]);
        (i, j, k)
    }

    /// Physical location of a DOF. `comp` is ignored for scalar spaces.
    pub fn dof_location(&self, space: Space, comp: usize, i: usize, j: usize, k: usize) -> Result<[f64; 3]> {
        if i >= self.n[0] || j >= self.n[1] || k >= self.n[2] {
            return Err(SimError::Config(format!(
                "DOF index ({i},{j},{k}) out of range for grid {:?}",
                self.n
            )));
        }
        let nd = |a: usize, m: usize| self.node(a, m);
        let ct = |a: usize, m: usize| self.center(a, m);
        let loc = match (space, comp) {
            (Space::Node, _) => [nd(0, i), nd(1, j), nd(2, k)],
            (Space::Cell, _) => [ct(0, i), ct(1, j), ct(2, k)],
            (Space::Edge, 0) => [ct(0, i), nd(1, j), nd(2, k)],
            (Space::Edge, 1) => [nd(0, i), ct(1, j), nd(2, k)],
            (Space::Edge, 2) => [nd(0, i), nd(1, j), ct(2, k)],
            (Space::Face, 0) => [nd(0, i), ct(1, j), ct(2, k)],
            (Space::Face, 1) => [ct(0, i), nd(1, j), ct(2, k)],
            (Space::Face, 2) => [ct(0, i), ct(1, j), nd(2, k)],
            _ => return Err(SimError::Config(format!("invalid component {comp}"))),
        };
        Ok(loc)
    }

    /// Neighbor one step up along `axis`; `None` across a transmissive boundary
    /// (the associated stencil link is dropped, i.e. the difference is zero).
    #[inline]
    pub fn next(&self, axis: usize, i: usize) -> Option<usize> {
        let n = self.n[axis];
        if i + 1 < n {
            Some(i + 1)
        } else {
            match self.bc[axis] {
                BcKind::Periodic => Some(0),
                BcKind::Transmissive => None,
            }
        }
    }

    #[inline]
    pub fn prev(&self, axis: usize, i: usize) -> Option<usize> {
        if i > 0 {
            Some(i - 1)
        } else {
            match self.bc[axis] {
                BcKind::Periodic => Some(self.n[axis] - 1),
                BcKind::Transmissive => None,
            }
        }
    }

    /// Offset by `off` in {-1, 0, 1}, `None` across transmissive boundaries.
    #[inline]
    pub fn offset(&self, axis: usize, i: usize, off: i32) -> Option<usize> {
        match off {
            0 => Some(i),
            1 => self.next(axis, i),
            -1 => self.prev(axis, i),
            _ => unreachable!("stencil offsets are at most one cell"),
        }
    }

    /// Ghost-replicating neighbor for finite-volume reconstruction.
    #[inline]
    pub fn next_clamp(&self, axis: usize, i: usize) -> usize {
        self.next(axis, i).unwrap_or(i)
    }

    #[inline]
    pub fn prev_clamp(&self, axis: usize, i: usize) -> usize {
        self.prev(axis, i).unwrap_or(i)
    }

    /// Axes that actually carry variation (count > 1).
    pub fn active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|&a| self.n[a] > 1)
    }
}
