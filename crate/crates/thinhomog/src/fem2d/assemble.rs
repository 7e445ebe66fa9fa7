//! P1 assembly: stiffness, mass, boundary and volume load vectors.

use crate::error::{Error, Result};
use crate::fem2d::sparse::Csr;
use crate::mesh::{BoundaryTag, TriMesh};

/// Area and the three constant P1 basis gradients of triangle `t`.
pub fn tri_geometry(mesh: &TriMesh, t: usize) -> (f64, [[f64; 2]; 3]) {
    let [a, b, c] = mesh.triangles[t];
    let p = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let inv = 1.0 / (2.0 * area);
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grads[i] = [(p[j][1] - p[k][1]) * inv, (p[k][0] - p[j][0]) * inv];
    }
    (area, grads)
}

pub fn stiffness_triplets(mesh: &TriMesh) -> Vec<(usize, usize, f64)> {
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let (area, g) = tri_geometry(mesh, t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    triplets
}

pub fn stiffness(mesh: &TriMesh) -> Csr {
    Csr::from_triplets(mesh.vertices.len(), stiffness_triplets(mesh))
}

pub fn mass_triplets(mesh: &TriMesh) -> Vec<(usize, usize, f64)> {
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let area = mesh.tri_area(t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = if i == j { area / 6.0 } else { area / 12.0 };
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    triplets
}

pub fn mass(mesh: &TriMesh) -> Csr {
    Csr::from_triplets(mesh.vertices.len(), mass_triplets(mesh))
}

/// Row sums of the consistent mass matrix (area/3 per incident triangle).
pub fn lumped_mass(mesh: &TriMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.vertices.len()];
    for t in 0..mesh.triangles.len() {
        let w = mesh.tri_area(t) / 3.0;
        for &v in &mesh.triangles[t] {
            m[v] += w;
        }
    }
    m
}

/// Boundary load for the cell problem: the flux datum is the horizontal
/// component of the outward normal on the oscillating top, zero elsewhere.
/// On a chord edge from (y_a, z_a) to (y_b, z_b) the integral against either
/// endpoint basis function is exactly -(z_b - z_a)/2: the slope-times-length
/// factors cancel between the normal component and the surface measure.
pub fn neumann_rhs_cell(mesh: &TriMesh) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; mesh.vertices.len()];
    let mut seen_top = false;
    for e in &mesh.boundary_edges {
        if e.tag != BoundaryTag::Top {
            continue;
        }
        seen_top = true;
        let dz = mesh.vertices[e.b][1] - mesh.vertices[e.a][1];
        rhs[e.a] -= 0.5 * dz;
        rhs[e.b] -= 0.5 * dz;
    }
    if !seen_top {
        return Err(Error::Mesh("mesh has no top boundary edges".into()));
    }
    Ok(rhs)
}

/// Volume load ∫ f φ_i by the edge-midpoint rule (exact for quadratic f on
/// straight triangles, which keeps constant loads consistent to roundoff).
pub fn load_vector<F>(mesh: &TriMesh, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let mut rhs = vec![0.0; mesh.vertices.len()];
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangles[t];
        let p = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
        let area = mesh.tri_area(t);
        // Midpoint of edge (i, i+1); basis i and i+1 are 1/2 there, the
        // opposite one vanishes.
        let mut fm = [0.0; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let my = 0.5 * (p[i][0] + p[j][0]);
            let mz = 0.5 * (p[i][1] + p[j][1]);
            fm[i] = f(my, mz)?;
        }
        let w = area / 3.0;
        for i in 0..3 {
            let prev = (i + 2) % 3;
            rhs[mesh.triangles[t][i]] += w * 0.5 * (fm[i] + fm[prev]);
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cell_at;
    use crate::mesh::mesh_cell;
    use crate::profile::ProfileSpec;
    use crate::quadrature::GAUSS3;
    use nalgebra::DMatrix;

    fn reference_triangle() -> TriMesh {
        TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![],
            grid: None,
        }
    }

    #[test]
    fn reference_element_matrices() {
        let mesh = reference_triangle();
        let k = stiffness(&mesh);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - expect[i][j]).abs() < 1e-15, "K[{i}{j}]");
            }
        }
        let m = mass(&mesh);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((m.get(i, j) - e).abs() < 1e-15, "M[{i}{j}]");
            }
        }
        assert_eq!(lumped_mass(&mesh), vec![1.0 / 6.0; 3]);
    }

    #[test]
    fn mass_is_positive_definite() {
        let p = ProfileSpec::with_density("0.25", "2+sin(2*pi*y)", 1.0, 64).unwrap();
        let cell = cell_at(&p, 0.0).unwrap();
        let (mesh, _) = mesh_cell(&cell, 4, 3).unwrap();
        let m = mass(&mesh).to_dense();
        let sym = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        let eig = sym.symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "min eigenvalue {min}");
        // Total mass equals the polygon area.
        let total: f64 = m.iter().sum();
        assert!((total - mesh.polygonal_area()).abs() < 1e-12);
    }

    #[test]
    fn neumann_rhs_flat_roof_vanishes_and_always_telescopes() {
        let p = ProfileSpec::with_density("0", "1", 1.0, 64).unwrap();
        let cell = cell_at(&p, 0.0).unwrap();
        let (mesh, _) = mesh_cell(&cell, 8, 4).unwrap();
        let rhs = neumann_rhs_cell(&mesh).unwrap();
        assert!(rhs.iter().all(|&v| v == 0.0));

        let p = ProfileSpec::with_density("0", "2+sin(2*pi*y)", 1.0, 64).unwrap();
        let cell = cell_at(&p, 0.0).unwrap();
        let (mesh, _) = mesh_cell(&cell, 16, 4).unwrap();
        let rhs = neumann_rhs_cell(&mesh).unwrap();
        // The roof chain is closed by the copied right column, so the total
        // flux telescopes to exactly zero.
        let sum: f64 = rhs.iter().sum();
        assert_eq!(sum, 0.0);
    }

    #[test]
    fn neumann_rhs_matches_fine_quadrature_of_slope_integral() {
        // Oracle: F_i = -∫ G'(y) φ_i(y) dy with the *chord* geometry replaced
        // by the smooth slope; agreement is O(h^2) per entry. At ny=64 the
        // largest entry error for this roof is around 4e-5.
        let p = ProfileSpec::with_density("0", "2+0.5*sin(2*pi*y)", 1.0, 64).unwrap();
        let cell = cell_at(&p, 0.0).unwrap();
        let (mesh, _) = mesh_cell(&cell, 64, 4).unwrap();
        let rhs = neumann_rhs_cell(&mesh).unwrap();
        let grid = mesh.grid.unwrap();
        let hy = 1.0 / grid.cols as f64;
        let mut worst: f64 = 0.0;
        for i in 0..=grid.cols {
            let v = i * (grid.layers + 1) + grid.layers; // top vertex of column i
            let mut oracle = 0.0;
            // hat function support: columns i-1 and i (wrapping ignored:
            // endpoints carry half-hats, consistent with the mesh rhs).
            for seg in 0..2 {
                if (seg == 0 && i == 0) || (seg == 1 && i == grid.cols) {
                    continue;
                }
                let y0 = if seg == 0 { (i - 1) as f64 * hy } else { i as f64 * hy };
                for &(q, w) in GAUSS3.iter() {
                    let y = y0 + q * hy;
                    let phi = if seg == 0 { q } else { 1.0 - q };
                    oracle -= w * hy * cell.roof_slope(y).unwrap() * phi;
                }
            }
            worst = worst.max((rhs[v] - oracle).abs());
        }
        assert!(worst < 2e-4, "worst entry deviation {worst:.2e}");
    }

    #[test]
    fn load_vector_constant_sums_to_area() {
        let p = ProfileSpec::with_density("0.5", "2+sin(2*pi*y)", 1.0, 64).unwrap();
        let cell = cell_at(&p, 0.0).unwrap();
        let (mesh, _) = mesh_cell(&cell, 12, 6).unwrap();
        let rhs = load_vector(&mesh, |_, _| Ok(1.0)).unwrap();
        let sum: f64 = rhs.iter().sum();
        assert!((sum - mesh.polygonal_area()).abs() < 1e-12);
        // Quadratic integrand: edge-midpoint rule is exact per triangle.
        let rhs = load_vector(&mesh, |y, z| Ok(y * y + z * z)).unwrap();
        let total: f64 = rhs.iter().sum();
        let mut exact = 0.0;
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangles[t];
            let p3 = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
            let area = mesh.tri_area(t);
            for i in 0..3 {
                let j = (i + 1) % 3;
                let my = 0.5 * (p3[i][0] + p3[j][0]);
                let mz = 0.5 * (p3[i][1] + p3[j][1]);
                exact += area / 3.0 * (my * my + mz * mz);
            }
        }
        assert!((total - exact).abs() < 1e-12);
    }
}
