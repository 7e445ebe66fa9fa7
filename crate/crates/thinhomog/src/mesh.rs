//! Structured triangulations of cells and thin domains, plus the 1D mesh
//! for the limit equation.
//!
//! Both 2D generators produce the same layered layout: equispaced columns
//! along the horizontal axis, and on every column `layers+1` vertices at
//! fixed height fractions between the floor and the (piecewise-linearly
//! interpolated) roof. Each quad is split into two triangles. The layout is
//! recorded on the mesh so point location is O(1).

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{CellDomain, ThinDomainSpec};

/// Reject triangles flatter than this. Layered meshes of tall cells are
/// legitimately anisotropic — a 40:1 quad split diagonally already has a
/// 1.4-degree corner, and steep roofs shear the quads further — so the gate
/// only guards against outright degeneracy (near-zero heights or widths).
pub const MIN_ANGLE_DEG: f64 = 0.5;

/// Hard cap on triangle count; protects against absurd thickness values.
pub const TRIANGLE_BUDGET: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Top,
    Bottom,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    /// Endpoint vertex ids; for Top/Bottom edges `a` is the left one, for
    /// Left/Right edges `a` is the lower one.
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

/// Column/layer structure of a layered mesh.
#[derive(Clone, Copy, Debug)]
pub struct GridLayout {
    pub cols: usize,
    pub layers: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    /// `[horizontal, vertical]` coordinates.
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub grid: Option<GridLayout>,
}

/// Left/right vertex identifications for periodic cells. Paired vertices
/// have identical heights (the right column copies the left column's roof
/// value, which the profile's periodicity check justifies), so merging them
/// introduces no geometric inconsistency.
#[derive(Clone, Debug)]
pub struct PeriodicPairing {
    /// `(left, right)` vertex ids, bottom to top.
    pub pairs: Vec<(usize, usize)>,
}

impl TriMesh {
    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Area of the meshed polygon (sum of triangle areas).
    pub fn polygonal_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.tri_area(t)).sum()
    }

    /// Smallest interior angle over the whole mesh, with the triangle that
    /// attains it.
    pub fn min_angle_deg(&self) -> (f64, usize) {
        let mut worst = (f64::INFINITY, 0);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = self.vertices[tri[k]];
                let b = self.vertices[tri[(k + 1) % 3]];
                let c = self.vertices[tri[(k + 2) % 3]];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
                let angle = (dot / (nu * nv)).clamp(-1.0, 1.0).acos().to_degrees();
                if angle < worst.0 {
                    worst = (angle, t);
                }
            }
        }
        worst
    }

    /// Plain-text dump: `vertex x z` lines, then `tri i j k` lines.
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "vertex {} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "tri {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    fn layout(&self) -> Result<GridLayout> {
        self.grid.ok_or_else(|| {
            Error::Mesh("point location requires a layered mesh with a recorded layout".into())
        })
    }

    #[inline]
    fn vid(layout: &GridLayout, i: usize, j: usize) -> usize {
        i * (layout.layers + 1) + j
    }

    /// Floor and roof of the mesh at horizontal position described by
    /// column `i` and intra-column fraction `xi`.
    fn column_bounds(&self, layout: &GridLayout, i: usize, xi: f64) -> (f64, f64) {
        let zf0 = self.vertices[Self::vid(layout, i, 0)][1];
        let zf1 = self.vertices[Self::vid(layout, i + 1, 0)][1];
        let zr0 = self.vertices[Self::vid(layout, i, layout.layers)][1];
        let zr1 = self.vertices[Self::vid(layout, i + 1, layout.layers)][1];
        (zf0 + xi * (zf1 - zf0), zr0 + xi * (zr1 - zr0))
    }

    /// Locate the point at horizontal coordinate `y` and height fraction
    /// `frac` in `[0, 1]` between the mesh floor and roof. Returns the
    /// triangle and barycentric coordinates.
    pub fn locate_fraction(&self, y: f64, frac: f64) -> Result<(usize, [f64; 3])> {
        const FRAC_TOL: f64 = 1e-9;
        let layout = self.layout()?;
        if !(-FRAC_TOL..=1.0 + FRAC_TOL).contains(&frac) {
            return Err(Error::PointLocation { x: y, z: frac });
        }
        let frac = frac.clamp(0.0, 1.0);
        let (i, xi) = self.column_of(&layout, y)?;
        let (zf, zr) = self.column_bounds(&layout, i, xi);
        let z = zf + frac * (zr - zf);
        self.scan_column(&layout, i, frac, y, z)
    }

    /// Locate a physical point `(y, z)`; the height must fall within the
    /// mesh up to a relative clamp of 1e-9.
    pub fn locate_point(&self, y: f64, z: f64) -> Result<(usize, [f64; 3])> {
        let layout = self.layout()?;
        let (i, xi) = self.column_of(&layout, y)?;
        let (zf, zr) = self.column_bounds(&layout, i, xi);
        let height = zr - zf;
        let frac = (z - zf) / height;
        let tol = 1e-9 * (1.0 + z.abs() / height.abs().max(f64::MIN_POSITIVE));
        if !(-tol..=1.0 + tol).contains(&frac) {
            return Err(Error::PointLocation { x: y, z });
        }
        let frac = frac.clamp(0.0, 1.0);
        let z = zf + frac * height;
        self.scan_column(&layout, i, frac, y, z)
    }

    fn column_of(&self, layout: &GridLayout, y: f64) -> Result<(usize, f64)> {
        let width = layout.x_max - layout.x_min;
        let hx = width / layout.cols as f64;
        let tol = 1e-9 * width.abs();
        if y < layout.x_min - tol || y > layout.x_max + tol {
            return Err(Error::PointLocation { x: y, z: f64::NAN });
        }
        let raw = ((y - layout.x_min) / hx).floor();
        let i = (raw as isize).clamp(0, layout.cols as isize - 1) as usize;
        let x0 = layout.x_min + i as f64 * hx;
        let xi = ((y - x0) / hx).clamp(0.0, 1.0);
        Ok((i, xi))
    }

    fn scan_column(
        &self,
        layout: &GridLayout,
        i: usize,
        frac: f64,
        y: f64,
        z: f64,
    ) -> Result<(usize, [f64; 3])> {
        let layers = layout.layers;
        let j0 = ((frac * layers as f64).floor() as isize).clamp(0, layers as isize - 1) as usize;
        // The quad at (i, j0) almost always contains the point; the diagonal
        // split and roundoff can push it into a vertical neighbour.
        let candidates = [Some(j0), j0.checked_sub(1), Some(j0 + 1)];
        for j in candidates.into_iter().flatten() {
            if j >= layers {
                continue;
            }
            if let Some(hit) = self.test_quad(layout, i, j, y, z) {
                return Ok(hit);
            }
        }
        for j in 0..layers {
            if let Some(hit) = self.test_quad(layout, i, j, y, z) {
                return Ok(hit);
            }
        }
        Err(Error::PointLocation { x: y, z })
    }

    fn test_quad(
        &self,
        layout: &GridLayout,
        i: usize,
        j: usize,
        y: f64,
        z: f64,
    ) -> Option<(usize, [f64; 3])> {
        let t0 = 2 * (i * layout.layers + j);
        for t in [t0, t0 + 1] {
            if let Some(bary) = self.barycentric(t, y, z) {
                return Some((t, bary));
            }
        }
        None
    }

    fn barycentric(&self, t: usize, y: f64, z: f64) -> Option<[f64; 3]> {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        if det == 0.0 {
            return None;
        }
        let l1 = ((pb[0] - y) * (pc[1] - z) - (pc[0] - y) * (pb[1] - z)) / det;
        let l2 = ((pc[0] - y) * (pa[1] - z) - (pa[0] - y) * (pc[1] - z)) / det;
        let l3 = 1.0 - l1 - l2;
        let tol = -1e-9;
        if l1 >= tol && l2 >= tol && l3 >= tol {
            Some([l1.max(0.0), l2.max(0.0), l3.max(0.0)])
        } else {
            None
        }
    }
}

/// Shared layered builder. `floors[i]`/`roofs[i]` give the vertical extent
/// of column `i`; `xs` are the column abscissae.
fn build_layered(xs: &[f64], floors: &[f64], roofs: &[f64], layers: usize) -> Result<TriMesh> {
    let cols = xs.len() - 1;
    for i in 0..=cols {
        let h = roofs[i] - floors[i];
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Mesh(format!(
                "column {i} has non-positive height {h} (roof {} / floor {})",
                roofs[i], floors[i]
            )));
        }
    }
    let mut vertices = Vec::with_capacity((cols + 1) * (layers + 1));
    for i in 0..=cols {
        let h = roofs[i] - floors[i];
        for j in 0..=layers {
            let frac = j as f64 / layers as f64;
            vertices.push([xs[i], floors[i] + frac * h]);
        }
    }
    let vid = |i: usize, j: usize| i * (layers + 1) + j;
    let mut triangles = Vec::with_capacity(2 * cols * layers);
    for i in 0..cols {
        for j in 0..layers {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v11 = vid(i + 1, j + 1);
            let v01 = vid(i, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * cols + 2 * layers);
    for i in 0..cols {
        boundary_edges.push(BoundaryEdge {
            a: vid(i, 0),
            b: vid(i + 1, 0),
            tag: BoundaryTag::Bottom,
        });
        boundary_edges.push(BoundaryEdge {
            a: vid(i, layers),
            b: vid(i + 1, layers),
            tag: BoundaryTag::Top,
        });
    }
    for j in 0..layers {
        boundary_edges.push(BoundaryEdge {
            a: vid(0, j),
            b: vid(0, j + 1),
            tag: BoundaryTag::Left,
        });
        boundary_edges.push(BoundaryEdge {
            a: vid(cols, j),
            b: vid(cols, j + 1),
            tag: BoundaryTag::Right,
        });
    }
    let mesh = TriMesh {
        vertices,
        triangles,
        boundary_edges,
        grid: Some(GridLayout {
            cols,
            layers,
            x_min: xs[0],
            x_max: xs[cols],
        }),
    };
    let (angle, tri) = mesh.min_angle_deg();
    if angle < MIN_ANGLE_DEG {
        return Err(Error::MeshQuality {
            triangle: tri,
            worst_deg: angle,
            gate_deg: MIN_ANGLE_DEG,
        });
    }
    Ok(mesh)
}

/// Triangulate one periodic cell with `ny` columns and `nz` layers.
pub fn mesh_cell(cell: &CellDomain, ny: usize, nz: usize) -> Result<(TriMesh, PeriodicPairing)> {
    if ny < 2 || nz < 1 {
        return Err(Error::InvalidArgument(format!(
            "cell mesh needs ny >= 2 and nz >= 1, got ny={ny}, nz={nz}"
        )));
    }
    let l = cell.period();
    let mut xs = Vec::with_capacity(ny + 1);
    let mut roofs = Vec::with_capacity(ny + 1);
    for i in 0..=ny {
        xs.push(i as f64 * l / ny as f64);
        if i == ny {
            // Copy the first roof value so periodic pairs match exactly.
            roofs.push(roofs[0]);
        } else {
            roofs.push(cell.roof(xs[i])?);
        }
    }
    let floors = vec![cell.floor(); ny + 1];
    let mesh = build_layered(&xs, &floors, &roofs, nz)?;
    let pairs = (0..=nz)
        .map(|j| (j, ny * (nz + 1) + j))
        .collect::<Vec<_>>();
    Ok((mesh, PeriodicPairing { pairs }))
}

/// Triangulate a thin domain with `cells_per_period` columns per horizontal
/// oscillation and `nz` layers through the thickness.
pub fn mesh_thin(spec: &ThinDomainSpec, cells_per_period: usize, nz: usize) -> Result<TriMesh> {
    if cells_per_period < 8 {
        return Err(Error::InvalidArgument(format!(
            "cells_per_period must be at least 8, got {cells_per_period}"
        )));
    }
    if nz < 1 {
        return Err(Error::InvalidArgument("nz must be at least 1".into()));
    }
    let l = spec.profile.period();
    let cols_f = (cells_per_period as f64 / (spec.epsilon * l)).ceil();
    let tri_f = 2.0 * cols_f * nz as f64;
    if tri_f > TRIANGLE_BUDGET as f64 {
        return Err(Error::MeshBudget {
            requested: if tri_f < usize::MAX as f64 {
                tri_f as usize
            } else {
                usize::MAX
            },
            budget: TRIANGLE_BUDGET,
        });
    }
    let cols = cols_f as usize;
    let mut xs = Vec::with_capacity(cols + 1);
    let mut floors = Vec::with_capacity(cols + 1);
    let mut roofs = Vec::with_capacity(cols + 1);
    for i in 0..=cols {
        let x = i as f64 / cols as f64;
        xs.push(x);
        floors.push(spec.lower(x)?);
        roofs.push(spec.upper(x)?);
    }
    build_layered(&xs, &floors, &roofs, nz)
}

/// Uniform 1D mesh on [0, 1]; `order` 1 or 2 (order 2 adds midpoint DOFs).
#[derive(Clone, Debug)]
pub struct Interval1DMesh {
    pub nodes: Vec<f64>,
    pub order: u8,
}

impl Interval1DMesh {
    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dof_count(&self) -> usize {
        match self.order {
            1 => self.nodes.len(),
            _ => 2 * self.nodes.len() - 1,
        }
    }

    pub fn element_size(&self) -> f64 {
        1.0 / self.elements() as f64
    }
}

pub fn mesh_interval(n: usize, order: u8) -> Result<Interval1DMesh> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "interval mesh needs at least 2 elements, got {n}"
        )));
    }
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!(
            "interval mesh order must be 1 or 2, got {order}"
        )));
    }
    let nodes = (0..=n).map(|i| i as f64 / n as f64).collect();
    Ok(Interval1DMesh { nodes, order })
}

/// Arc convenience used throughout the solvers.
pub type SharedMesh = Arc<TriMesh>;
