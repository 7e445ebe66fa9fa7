//! Linear solves: preconditioned CG with an optional kernel projection,
//! periodic reduction, and the two driver routines (periodic cell flux
//! problem, reaction-diffusion problem on the thin strip).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem2d::assemble::{
    load_vector, lumped_mass, mass_triplets, neumann_rhs_cell, stiffness_triplets, tri_geometry,
};
use crate::fem2d::sparse::Csr;
use crate::fem2d::{CellSolution, FemSolution};
use crate::geometry::CellDomain;
use crate::mesh::{PeriodicPairing, SharedMesh};

pub const DEFAULT_CG_TOL: f64 = 1e-10;
pub const DEFAULT_CG_MAX_ITER: usize = 50_000;

/// Full-to-reduced index map identifying each right periodic vertex with
/// its left partner.
pub fn merge_map(n: usize, pairing: &PeriodicPairing) -> (Vec<usize>, usize) {
    let mut alias: Vec<Option<usize>> = vec![None; n];
    for &(l, r) in &pairing.pairs {
        debug_assert!(l < n && r < n && l != r);
        alias[r] = Some(l);
    }
    let mut map = vec![usize::MAX; n];
    let mut next = 0;
    for v in 0..n {
        if alias[v].is_none() {
            map[v] = next;
            next += 1;
        }
    }
    for v in 0..n {
        if let Some(l) = alias[v] {
            map[v] = map[l];
        }
    }
    (map, next)
}

/// A linear system with periodic identifications folded in.
pub struct ReducedSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub map: Vec<usize>,
    pub n_full: usize,
}

pub fn reduce(
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    rhs: &[f64],
    pairing: &PeriodicPairing,
) -> ReducedSystem {
    let (map, n_red) = merge_map(n, pairing);
    let mapped = triplets
        .into_iter()
        .map(|(i, j, v)| (map[i], map[j], v))
        .collect();
    let mut rhs_red = vec![0.0; n_red];
    for (v, &b) in rhs.iter().enumerate() {
        rhs_red[map[v]] += b;
    }
    ReducedSystem {
        matrix: Csr::from_triplets(n_red, mapped),
        rhs: rhs_red,
        map,
        n_full: n,
    }
}

impl ReducedSystem {
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&k| reduced[k]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final ||r|| / ||b||.
    pub residual: f64,
    pub history: Vec<f64>,
}

fn project_out_mean(v: &mut [f64], enabled: bool) {
    if enabled {
        let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
        for x in v.iter_mut() {
            *x -= mean;
        }
    }
}

/// Jacobi-preconditioned conjugate gradients. With `project_constants` the
/// residual and preconditioned residual are kept orthogonal to the constant
/// vector: for a symmetric singular system with kernel = constants this is
/// the orthogonal projector onto range(A), so PCG stays well defined (an
/// oblique, e.g. mass-weighted, projection would break the symmetry of the
/// projected preconditioner and can make the iteration diverge).
pub fn cg(
    a: &Csr,
    b: &[f64],
    diag_precond: Option<&[f64]>,
    project_constants: bool,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgOutcome)> {
    let n = a.n;
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            CgOutcome {
                iterations: 0,
                residual: 0.0,
                history: Vec::new(),
            },
        ));
    }
    let apply_m = |r: &[f64], z: &mut [f64]| match diag_precond {
        Some(d) => {
            for i in 0..n {
                z[i] = r[i] / d[i];
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    project_out_mean(&mut r, project_constants);
    let mut z = vec![0.0; n];
    apply_m(&r, &mut z);
    project_out_mean(&mut z, project_constants);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    let mut history = Vec::new();
    for it in 1..=max_iter {
        a.matvec(&p, &mut q);
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if pq <= 0.0 {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: f64::NAN,
                tail: history.iter().rev().take(5).cloned().collect(),
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        project_out_mean(&mut r, project_constants);
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.push(r_norm / b_norm);
        if r_norm <= tol * b_norm {
            return Ok((
                x,
                CgOutcome {
                    iterations: it,
                    residual: r_norm / b_norm,
                    history,
                },
            ));
        }
        apply_m(&r, &mut z);
        project_out_mean(&mut z, project_constants);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = *history.last().unwrap_or(&f64::NAN);
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        tail: history.iter().rev().take(5).cloned().collect(),
    })
}

/// Solve the periodic cell flux problem on an already built mesh. The
/// solution is returned on the full mesh with its domain-mean removed
/// (consistent-mass weighting, whose row sums coincide with the lumped
/// weights for P1).
pub fn solve_cell(
    cell: &CellDomain,
    mesh: &SharedMesh,
    pairing: &PeriodicPairing,
    tol: f64,
    max_iter: usize,
) -> Result<CellSolution> {
    let n = mesh.vertices.len();
    let triplets = stiffness_triplets(mesh);
    let rhs = neumann_rhs_cell(mesh)?;
    let sys = reduce(n, triplets, &rhs, pairing);
    let lumped = lumped_mass(mesh);
    let diag = sys.matrix.diag();
    let (u_red, outcome) = cg(&sys.matrix, &sys.rhs, Some(&diag), true, tol, max_iter)?;
    let mut values = sys.expand(&u_red);
    let total: f64 = lumped.iter().sum();
    let mean: f64 = values.iter().zip(&lumped).map(|(a, b)| a * b).sum::<f64>() / total;
    for v in values.iter_mut() {
        *v -= mean;
    }
    let grad = gradients(mesh, &values);
    Ok(CellSolution {
        cell: cell.clone(),
        mesh: Arc::clone(mesh),
        pairing: pairing.clone(),
        values,
        grad,
        iterations: outcome.iterations,
        residual: outcome.residual,
    })
}

/// Per-triangle gradient of a P1 function.
pub fn gradients(mesh: &SharedMesh, values: &[f64]) -> Vec<[f64; 2]> {
    (0..mesh.triangles.len())
        .map(|t| {
            let (_, g) = tri_geometry(mesh, t);
            let tri = mesh.triangles[t];
            let mut dy = 0.0;
            let mut dz = 0.0;
            for k in 0..3 {
                dy += values[tri[k]] * g[k][0];
                dz += values[tri[k]] * g[k][1];
            }
            [dy, dz]
        })
        .collect()
}

/// Solve -Δu + u = f with natural boundary conditions on the meshed domain.
pub fn solve_full<F>(mesh: &SharedMesh, f: F, tol: f64, max_iter: usize) -> Result<FemSolution>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let n = mesh.vertices.len();
    let mut triplets = stiffness_triplets(mesh);
    triplets.extend(mass_triplets(mesh));
    let a = Csr::from_triplets(n, triplets);
    let rhs = load_vector(mesh, f)?;
    let diag = a.diag();
    let (values, outcome) = cg(&a, &rhs, Some(&diag), false, tol, max_iter)?;
    Ok(FemSolution {
        mesh: Arc::clone(mesh),
        values,
        iterations: outcome.iterations,
        residual: outcome.residual,
    })
}

/// L2 and H1-seminorm of a P1 function, computed element-wise with the
/// consistent mass (exact for the piecewise-linear interpolant).
#[derive(Clone, Copy, Debug)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
}

impl Norms {
    pub fn h1(&self) -> f64 {
        (self.l2 * self.l2 + self.h1_semi * self.h1_semi).sqrt()
    }
}

pub fn fem_norms(mesh: &SharedMesh, values: &[f64]) -> Norms {
    let mut l2sq = 0.0;
    let mut h1sq = 0.0;
    for t in 0..mesh.triangles.len() {
        let (area, g) = tri_geometry(mesh, t);
        let tri = mesh.triangles[t];
        let u = [values[tri[0]], values[tri[1]], values[tri[2]]];
        let s1 = u[0] + u[1] + u[2];
        let s2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        l2sq += area / 12.0 * (s2 + s1 * s1);
        let mut dy = 0.0;
        let mut dz = 0.0;
        for k in 0..3 {
            dy += u[k] * g[k][0];
            dz += u[k] * g[k][1];
        }
        h1sq += area * (dy * dy + dz * dz);
    }
    Norms {
        l2: l2sq.max(0.0).sqrt(),
        h1_semi: h1sq.max(0.0).sqrt(),
    }
}
