//! P1 finite elements on layered triangulations.

pub mod assemble;
pub mod solve;
pub mod sparse;

pub use solve::{
    cg, fem_norms, gradients, solve_cell, solve_full, CgOutcome, Norms, ReducedSystem,
    DEFAULT_CG_MAX_ITER, DEFAULT_CG_TOL,
};
pub use sparse::Csr;

use crate::error::Result;
use crate::geometry::CellDomain;
use crate::mesh::{PeriodicPairing, SharedMesh};

/// Solution of the periodic cell flux problem.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub cell: CellDomain,
    pub mesh: SharedMesh,
    pub pairing: PeriodicPairing,
    /// Nodal values on the full mesh; paired vertices carry equal values and
    /// the domain mean is zero.
    pub values: Vec<f64>,
    /// Per-triangle constant gradients.
    pub grad: Vec<[f64; 2]>,
    pub iterations: usize,
    pub residual: f64,
}

impl CellSolution {
    /// Value at horizontal coordinate `y` and height fraction `frac`.
    pub fn value_fraction(&self, y: f64, frac: f64) -> Result<f64> {
        let (t, bary) = self.mesh.locate_fraction(y, frac)?;
        let tri = self.mesh.triangles[t];
        Ok((0..3).map(|k| bary[k] * self.values[tri[k]]).sum())
    }

    /// Value and gradient at a height fraction; the gradient is the constant
    /// gradient of the containing triangle.
    pub fn value_grad_fraction(&self, y: f64, frac: f64) -> Result<(f64, [f64; 2])> {
        let (t, bary) = self.mesh.locate_fraction(y, frac)?;
        let tri = self.mesh.triangles[t];
        let v = (0..3).map(|k| bary[k] * self.values[tri[k]]).sum();
        Ok((v, self.grad[t]))
    }

    pub fn norms(&self) -> Norms {
        fem_norms(&self.mesh, &self.values)
    }
}

/// Solution of -Δu + u = f on a meshed domain with natural boundary
/// conditions.
#[derive(Clone, Debug)]
pub struct FemSolution {
    pub mesh: SharedMesh,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl FemSolution {
    pub fn value_at(&self, y: f64, z: f64) -> Result<f64> {
        let (t, bary) = self.mesh.locate_point(y, z)?;
        let tri = self.mesh.triangles[t];
        Ok((0..3).map(|k| bary[k] * self.values[tri[k]]).sum())
    }

    pub fn norms(&self) -> Norms {
        fem_norms(&self.mesh, &self.values)
    }
}
