//! DOF containers tagged by de Rham space. Vector fields store their three
//! component blocks contiguously (x | y | z), each of length `grid.len()`, so
//! the implicit solvers can treat them as one flat unknown vector.

use crate::mesh::{Grid, Space};

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub space: Space,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, space: Space) -> Self {
        assert!(matches!(space, Space::Node | Space::Cell), "scalar field needs a scalar space");
        ScalarField { space, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, space: Space, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let mut out = Self::zeros(grid, space);
        for k in 0..grid.n[2] {
            for j in 0..grid.n[1] {
                for i in 0..grid.n[0] {
                    let x = grid.dof_location(space, 0, i, j, k).expect("in range");
                    out.data[grid.idx(i, j, k)] = f(x);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub space: Space,
    /// Length 3N; component c occupies `[c*N, (c+1)*N)`.
    pub data: Vec<f64>,
    n: usize,
}

impl VectorField {
    pub fn zeros(grid: &Grid, space: Space) -> Self {
        assert!(matches!(space, Space::Edge | Space::Face), "vector field needs a vector space");
        VectorField { space, data: vec![0.0; 3 * grid.len()], n: grid.len() }
    }

    pub fn from_flat(grid: &Grid, space: Space, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), 3 * grid.len());
        VectorField { space, data, n: grid.len() }
    }

    /// Sample an analytic vector field component-wise at the DOF locations.
    pub fn from_fn(grid: &Grid, space: Space, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid, space);
        for c in 0..3 {
            for k in 0..grid.n[2] {
                for j in 0..grid.n[1] {
                    for i in 0..grid.n[0] {
                        let x = grid.dof_location(space, c, i, j, k).expect("in range");
                        out.comp_mut(c)[grid.idx(i, j, k)] = f(x)[c];
                    }
                }
            }
        }
        out
    }

    #[inline]
    pub fn comp(&self, c: usize) -> &[f64] {
        &self.data[c * self.n..(c + 1) * self.n]
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.n..(c + 1) * self.n]
    }

    /// Split into the three component slices at once.
    #[inline]
    pub fn comps_mut(&mut self) -> [&mut [f64]; 3] {
        let (x, rest) = self.data.split_at_mut(self.n);
        let (y, z) = rest.split_at_mut(self.n);
        [x, y, z]
    }
}

/// Dual-cell conserved load: density aliases the nodal array, so only momentum
/// and total (hydrodynamic) energy live here.
#[derive(Debug, Clone)]
pub struct DualConserved {
    pub m: [Vec<f64>; 3],
    pub rho_e: Vec<f64>,
}

impl DualConserved {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.len();
        DualConserved { m: [vec![0.0; n], vec![0.0; n], vec![0.0; n]], rho_e: vec![0.0; n] }
    }
}

// Flat-slice helpers shared by the matrix-free solvers.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BcKind, Grid};

    #[test]
    fn component_blocks_are_disjoint() {
        let g = Grid::new([3, 2, 2], [1.0; 3], [BcKind::Periodic; 3]).unwrap();
        let mut v = VectorField::zeros(&g, Space::Edge);
        v.comp_mut(1)[0] = 7.0;
        assert_eq!(v.comp(0).iter().copied().sum::<f64>(), 0.0);
        assert_eq!(v.comp(1)[0], 7.0);
        assert_eq!(v.data[g.len()], 7.0);
    }
}
