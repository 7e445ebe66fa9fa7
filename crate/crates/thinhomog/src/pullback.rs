//! Fixed-cell verification of the periodic flux problem.
//!
//! The flux problem for a roof `ghat` is normally posed on the cell under
//! `ghat` itself. Here it is instead solved on the *reference* cell under a
//! roof `g`, by pulling the unknown through the vertical stretch
//! `(z1, z2) -> (z1, f(z1) z2)` with `f = ghat / g`. The change of variables
//! turns the Laplacian into a variable-coefficient operator and divides the
//! test functions by `f`, which makes the assembled system nonsymmetric; the
//! module solves that system and checks the result against a direct solve on
//! the `ghat` cell composed back through the stretch. A finite-difference
//! probe reuses the same height-fraction transplant to confirm that cell
//! solutions of a two-variable profile depend smoothly on the slow
//! coordinate.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem2d::assemble::{lumped_mass, tri_geometry};
use crate::fem2d::solve::reduce;
use crate::fem2d::{fem_norms, solve_cell, Csr, FemSolution};
use crate::geometry::{cell_at, CellDomain};
use crate::mesh::{mesh_cell, BoundaryTag, PeriodicPairing, SharedMesh};
use crate::par;
use crate::profile::{ProfileBounds, ProfileSpec, Var};
use crate::quadrature::GAUSS2;

/// Systems at or below this many unknowns are solved by dense factorization
/// with a bordering row/column for the mean constraint; larger ones fall
/// back to a stabilized Krylov iteration on the same bordered operator.
pub const DIRECT_DOF_LIMIT: usize = 2000;

/// A validated one-variable roof `g(y)`: positive, periodic, continuously
/// differentiable, with certified bounds. Cells under such roofs sit on a
/// flat bottom at height zero.
#[derive(Clone, Debug)]
pub struct AdmissibleProfile {
    spec: Arc<ProfileSpec>,
}

impl AdmissibleProfile {
    pub fn new(roof: &str, l: f64) -> Result<Self> {
        let spec = ProfileSpec::with_density("0", roof, l, 256)
            .map_err(|e| e.context("roof validation"))?;
        if spec.g_expr().depends_on(Var::X) {
            return Err(Error::Validation(
                "a transplantable roof must depend on y only".into(),
            ));
        }
        Ok(AdmissibleProfile { spec })
    }

    pub fn period(&self) -> f64 {
        self.spec.period()
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        self.spec.g(0.0, y)
    }

    pub fn slope(&self, y: f64) -> Result<f64> {
        self.spec.dg_dy(0.0, y)
    }

    /// Certified roof bounds (min/max with sampling margin, slope cap).
    pub fn bounds(&self) -> ProfileBounds {
        self.spec.bounds
    }

    /// The periodic cell under this roof, flat bottom at height zero.
    pub fn cell(&self) -> Result<CellDomain> {
        cell_at(&self.spec, 0.0)
    }
}

/// The vertical stretch tying the transplanted cell to the reference cell.
///
/// `f(y) = transplant(y) / reference(y)` and its derivative
/// `(transplant' g - transplant g') / g^2` are both evaluated from the
/// symbolic roofs. When the two roofs are the same expression the ratio is
/// exactly one and the derivative exactly zero, so the transformed assembly
/// degenerates to the plain one without rounding drift.
#[derive(Clone, Debug)]
pub struct PullbackMap {
    reference: AdmissibleProfile,
    transplant: AdmissibleProfile,
}

impl PullbackMap {
    pub fn f(&self, y: f64) -> Result<f64> {
        Ok(self.transplant.eval(y)? / self.reference.eval(y)?)
    }

    pub fn f_prime(&self, y: f64) -> Result<f64> {
        let g = self.reference.eval(y)?;
        let gh = self.transplant.eval(y)?;
        let dg = self.reference.slope(y)?;
        let dgh = self.transplant.slope(y)?;
        Ok((dgh * g - gh * dg) / (g * g))
    }

    pub fn reference(&self) -> &AdmissibleProfile {
        &self.reference
    }

    pub fn transplant(&self) -> &AdmissibleProfile {
        &self.transplant
    }
}

/// Pair two roofs of equal period and certify the stretch-ratio bounds:
/// with both roofs inside `[lo, hi]`, the ratio must lie inside
/// `[lo/hi, hi/lo]` at every sampled point.
pub fn build_pullback(
    reference: &AdmissibleProfile,
    transplant: &AdmissibleProfile,
) -> Result<PullbackMap> {
    let (la, lb) = (reference.period(), transplant.period());
    if (la - lb).abs() > 1e-12 * la.abs().max(lb.abs()) {
        return Err(Error::Validation(format!(
            "roof periods differ: {la} vs {lb}"
        )));
    }
    let map = PullbackMap {
        reference: reference.clone(),
        transplant: transplant.clone(),
    };
    let (ba, bb) = (reference.bounds(), transplant.bounds());
    let lo = ba.g0.min(bb.g0);
    let hi = ba.g1.max(bb.g1);
    let slack = 1e-12 * (hi / lo);
    let samples = 512;
    for k in 0..=samples {
        let y = la * k as f64 / samples as f64;
        let f = map.f(y)?;
        if f < lo / hi - slack || f > hi / lo + slack {
            return Err(Error::Validation(format!(
                "stretch ratio {f:.6} at y={y:.6} escapes [{:.6}, {:.6}]",
                lo / hi,
                hi / lo
            )));
        }
    }
    Ok(map)
}

/// Coefficient matrix of the transformed operator at a point of the
/// reference cell:
///
/// ```text
/// [ f          -f' z2                ]
/// [ -f' z2     (1 + (z2 f')^2) / f   ]
/// ```
///
/// Pointwise symmetric positive definite; the assembled system is still
/// nonsymmetric because the test functions carry an extra `1/f` factor.
pub fn b_matrix(map: &PullbackMap, z1: f64, z2: f64) -> Result<[[f64; 2]; 2]> {
    let f = map.f(z1)?;
    let fp = map.f_prime(z1)?;
    let c = fp * z2;
    Ok([[f, -c], [-c, (1.0 + c * c) / f]])
}

/// The reduced linear system of the transformed problem on the reference
/// mesh: a generally nonsymmetric matrix, the boundary load, the periodic
/// merge map, and the integration weights expressing the zero-mean
/// constraint `weights . u = 0`.
pub struct TransformedSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    /// Full-to-reduced vertex map of the periodic merge.
    pub map: Vec<usize>,
    pub n_full: usize,
    /// Reduced lumped integration weights.
    pub weights: Vec<f64>,
    pub mesh: SharedMesh,
}

impl TransformedSystem {
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&k| reduced[k]).collect()
    }

    /// Euclidean norm of `matrix * [1, 1, ...]`. Constants span the kernel
    /// of the transformed operator, so this measures how far assembly is
    /// from annihilating them; it sits at the rounding floor by
    /// construction (the basis gradients of each triangle sum to zero).
    pub fn kernel_defect(&self) -> f64 {
        let ones = vec![1.0; self.matrix.n];
        let mut out = vec![0.0; self.matrix.n];
        self.matrix.matvec(&ones, &mut out);
        out.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Assemble the transformed flux problem on a mesh of the reference cell.
///
/// Element contributions are `area * (B grad_j) . grad(test_i)` with the
/// coefficient matrix frozen at the triangle centroid; the test gradient of
/// `hat_i / f` at the centroid is `grad_i / f - (1/3) f'/f^2 e1` since every
/// corner hat equals 1/3 there. The boundary load on each top edge uses the
/// chord slope of the transplanted roof (from its symbolic values at the
/// edge endpoints) integrated against `hat_i / f` by 2-point Gauss: the
/// chord deviates from the smooth slope only at the discretization order,
/// and it makes the load telescope exactly into the direct formulation's
/// `-(dz)/2` per endpoint when the transplanted roof equals the reference
/// roof.
pub fn assemble_transformed(
    mesh: &SharedMesh,
    pairing: &PeriodicPairing,
    map: &PullbackMap,
) -> Result<TransformedSystem> {
    let n = mesh.vertices.len();
    // The stretch fixes the bottom line pointwise, so the reference cell
    // must sit on a flat bottom at height zero.
    for e in &mesh.boundary_edges {
        if e.tag == BoundaryTag::Bottom {
            let z = mesh.vertices[e.a][1].abs().max(mesh.vertices[e.b][1].abs());
            if z > 1e-12 {
                return Err(Error::Geometry(format!(
                    "reference mesh bottom sits at |z| = {z:.3e}, expected height 0"
                )));
            }
        }
    }

    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let (area, g) = tri_geometry(mesh, t);
        let tri = mesh.triangles[t];
        let p = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let cy = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        let cz = (p[0][1] + p[1][1] + p[2][1]) / 3.0;
        let f = map.f(cy)?;
        let fp = map.f_prime(cy)?;
        let s = fp * cz;
        let bm = [[f, -s], [-s, (1.0 + s * s) / f]];
        let corr = fp / (3.0 * f * f);
        for i in 0..3 {
            let ti = [g[i][0] / f - corr, g[i][1] / f];
            for j in 0..3 {
                let bg0 = bm[0][0] * g[j][0] + bm[0][1] * g[j][1];
                let bg1 = bm[1][0] * g[j][0] + bm[1][1] * g[j][1];
                let v = area * (bg0 * ti[0] + bg1 * ti[1]);
                triplets.push((tri[i], tri[j], v));
            }
        }
    }

    let mut rhs = vec![0.0; n];
    let mut seen_top = false;
    for e in &mesh.boundary_edges {
        if e.tag != BoundaryTag::Top {
            continue;
        }
        seen_top = true;
        let ya = mesh.vertices[e.a][0];
        let yb = mesh.vertices[e.b][0];
        let dy = yb - ya;
        let s = (map.transplant.eval(yb)? - map.transplant.eval(ya)?) / dy;
        for (t, w) in GAUSS2 {
            let y = ya + t * dy;
            let f = map.f(y)?;
            let c = w * dy * s / f;
            rhs[e.a] -= c * (1.0 - t);
            rhs[e.b] -= c * t;
        }
    }
    if !seen_top {
        return Err(Error::Mesh("mesh has no top boundary edges".into()));
    }

    let sys = reduce(n, triplets, &rhs, pairing);
    let lumped = lumped_mass(mesh);
    let mut weights = vec![0.0; sys.matrix.n];
    for (v, &w) in lumped.iter().enumerate() {
        weights[sys.map[v]] += w;
    }
    Ok(TransformedSystem {
        matrix: sys.matrix,
        rhs: sys.rhs,
        map: sys.map,
        n_full: n,
        weights,
        mesh: Arc::clone(mesh),
    })
}

/// Solve the transformed system. The matrix is singular (constants in the
/// kernel), so the zero-mean constraint is enforced through one bordering
/// row/column: dense LU below [`DIRECT_DOF_LIMIT`] unknowns, stabilized
/// bi-conjugate gradients on the bordered operator above it. The reported
/// residual is the relative residual of the bordered system.
pub fn solve_transformed(sys: &TransformedSystem, tol: f64) -> Result<FemSolution> {
    let n = sys.matrix.n;
    let b_norm = norm(&sys.rhs);
    if b_norm == 0.0 {
        return Ok(FemSolution {
            mesh: Arc::clone(&sys.mesh),
            values: vec![0.0; sys.n_full],
            iterations: 0,
            residual: 0.0,
        });
    }
    let (mut u, iterations, residual) = if n <= DIRECT_DOF_LIMIT {
        solve_bordered_dense(sys)?
    } else {
        solve_bordered_krylov(sys, tol, 10 * (n + 1))?
    };
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            tail: vec![residual],
        });
    }
    // The multiplier already pins the constraint at rounding level; snap
    // the weighted mean to exactly zero for downstream comparisons.
    let wsum: f64 = sys.weights.iter().sum();
    let mean: f64 = u.iter().zip(&sys.weights).map(|(a, b)| a * b).sum::<f64>() / wsum;
    for v in u.iter_mut() {
        *v -= mean;
    }
    Ok(FemSolution {
        mesh: Arc::clone(&sys.mesh),
        values: sys.expand(&u),
        iterations,
        residual,
    })
}

/// Scale for the bordering column so it sits at the magnitude of the matrix
/// diagonal; this only rescales the multiplier, not the solution.
fn border_scale(sys: &TransformedSystem) -> f64 {
    let d = sys.matrix.diag();
    let da: f64 = d.iter().map(|v| v.abs()).sum::<f64>() / d.len().max(1) as f64;
    let wa: f64 = sys.weights.iter().map(|v| v.abs()).sum::<f64>() / sys.weights.len().max(1) as f64;
    if da > 0.0 && wa > 0.0 {
        da / wa
    } else {
        1.0
    }
}

fn solve_bordered_dense(sys: &TransformedSystem) -> Result<(Vec<f64>, usize, f64)> {
    let n = sys.matrix.n;
    let scale = border_scale(sys);
    let m = n + 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..n {
        for k in sys.matrix.row_ptr[i]..sys.matrix.row_ptr[i + 1] {
            a[(i, sys.matrix.col_idx[k])] = sys.matrix.values[k];
        }
        a[(i, n)] = scale * sys.weights[i];
        a[(n, i)] = scale * sys.weights[i];
    }
    let mut b = DVector::<f64>::zeros(m);
    for i in 0..n {
        b[i] = sys.rhs[i];
    }
    let x = a.clone().lu().solve(&b).ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
        tail: vec![],
    })?;
    let r = &a * &x - &b;
    let residual = r.norm() / b.norm();
    Ok((x.as_slice()[..n].to_vec(), 0, residual))
}

/// Jacobi-scaled BiCGStab on the bordered operator. The recurrence residual
/// drives the stopping test at half the requested tolerance and the true
/// residual is recomputed on exit, so the reported value is trustworthy.
fn solve_bordered_krylov(
    sys: &TransformedSystem,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = sys.matrix.n;
    let m = n + 1;
    let scale = border_scale(sys);
    let sw: Vec<f64> = sys.weights.iter().map(|w| scale * w).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        sys.matrix.matvec(&x[..n], &mut y[..n]);
        for i in 0..n {
            y[i] += sw[i] * x[n];
        }
        y[n] = x[..n].iter().zip(&sw).map(|(a, b)| a * b).sum();
    };
    let mut precond = sys.matrix.diag();
    let dmean = precond.iter().map(|v| v.abs()).sum::<f64>() / n.max(1) as f64;
    for d in precond.iter_mut() {
        if d.abs() < 1e-300 {
            *d = 1.0;
        }
    }
    precond.push(dmean.max(1e-300));

    let mut b = vec![0.0; m];
    b[..n].copy_from_slice(&sys.rhs);
    let b_norm = norm(&b);
    let inner_tol = 0.5 * tol;

    let mut x = vec![0.0; m];
    let mut r = b.clone();
    let rhat = r.clone();
    let mut rho_prev = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; m];
    let mut p = vec![0.0; m];
    let mut t = vec![0.0; m];
    let mut history: Vec<f64> = Vec::new();
    let breakdown = |it: usize, history: &[f64]| Error::NoConvergence {
        iterations: it,
        residual: history.last().copied().unwrap_or(f64::NAN),
        tail: history.iter().rev().take(5).cloned().collect(),
    };
    let finish = |x: &[f64], it: usize| -> Result<(Vec<f64>, usize, f64)> {
        let mut ax = vec![0.0; m];
        apply(x, &mut ax);
        let res = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt()
            / b_norm;
        if res > tol {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
                tail: vec![res],
            });
        }
        Ok((x[..n].to_vec(), it, res))
    };
    for it in 1..=max_iter {
        let rho = dot(&rhat, &r);
        if rho.abs() < 1e-300 {
            return Err(breakdown(it, &history));
        }
        if it == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_prev) * (alpha / omega);
            for i in 0..m {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        let phat: Vec<f64> = p.iter().zip(&precond).map(|(a, d)| a / d).collect();
        apply(&phat, &mut v);
        let denom = dot(&rhat, &v);
        if denom.abs() < 1e-300 {
            return Err(breakdown(it, &history));
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(a, b)| a - alpha * b).collect();
        let s_norm = norm(&s);
        if s_norm <= inner_tol * b_norm {
            for i in 0..m {
                x[i] += alpha * phat[i];
            }
            return finish(&x, it);
        }
        let shat: Vec<f64> = s.iter().zip(&precond).map(|(a, d)| a / d).collect();
        apply(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt <= 0.0 {
            return Err(breakdown(it, &history));
        }
        omega = dot(&t, &s) / tt;
        if omega == 0.0 {
            return Err(breakdown(it, &history));
        }
        for i in 0..m {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let r_norm = norm(&r);
        history.push(r_norm / b_norm);
        if r_norm <= inner_tol * b_norm {
            return finish(&x, it);
        }
        rho_prev = rho;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
        tail: history.iter().rev().take(5).cloned().collect(),
    })
}

/// Relative discrepancy between the transformed solve on the reference mesh
/// and a direct solve on the transplanted cell composed back through the
/// stretch. Norms are taken on the reference mesh relative to the composed
/// field; absolute values are reported when the composed field is
/// numerically zero.
#[derive(Clone, Copy, Debug)]
pub struct EquivalenceReport {
    pub ny: usize,
    pub nz: usize,
    pub l2_rel: f64,
    pub h1_rel: f64,
}

pub fn equivalence_check(
    reference: &AdmissibleProfile,
    transplant: &AdmissibleProfile,
    ny: usize,
    nz: usize,
    tol: f64,
    max_iter: usize,
) -> Result<EquivalenceReport> {
    let map = build_pullback(reference, transplant)?;
    let ref_cell = reference.cell()?;
    let (ref_mesh, ref_pairing) = mesh_cell(&ref_cell, ny, nz)?;
    let ref_mesh: SharedMesh = Arc::new(ref_mesh);
    let sys = assemble_transformed(&ref_mesh, &ref_pairing, &map)?;
    let transformed = solve_transformed(&sys, tol)?;

    let hat_cell = transplant.cell()?;
    let (hat_mesh, hat_pairing) = mesh_cell(&hat_cell, ny, nz)?;
    let hat_mesh: SharedMesh = Arc::new(hat_mesh);
    let direct = solve_cell(&hat_cell, &hat_mesh, &hat_pairing, tol, max_iter)?;

    // Compose the direct solution with the stretch: the reference vertex in
    // column i, layer j maps to the point at height fraction j/nz of the
    // transplanted cell at the same horizontal coordinate.
    let layers = ref_mesh
        .grid
        .ok_or_else(|| Error::Mesh("reference mesh lost its layer structure".into()))?
        .layers;
    let mut composed = Vec::with_capacity(ref_mesh.vertices.len());
    for (vid, vert) in ref_mesh.vertices.iter().enumerate() {
        let j = vid % (layers + 1);
        let frac = j as f64 / layers as f64;
        let val = direct
            .value_fraction(vert[0], frac)
            .map_err(|e| e.context(format!("composition at vertex {vid}")))?;
        composed.push(val);
    }
    let lumped = lumped_mass(&ref_mesh);
    subtract_weighted_mean(&mut composed, &lumped);
    let mut transformed_vals = transformed.values;
    subtract_weighted_mean(&mut transformed_vals, &lumped);

    let diff: Vec<f64> = transformed_vals
        .iter()
        .zip(&composed)
        .map(|(a, b)| a - b)
        .collect();
    let dn = fem_norms(&ref_mesh, &diff);
    let cn = fem_norms(&ref_mesh, &composed);
    Ok(EquivalenceReport {
        ny,
        nz,
        l2_rel: rel(dn.l2, cn.l2),
        h1_rel: rel(dn.h1(), cn.h1()),
    })
}

/// CSV dump of discrepancy reports: header `ny,nz,l2_rel,h1_rel`, one row
/// per report.
pub fn equivalence_csv(reports: &[EquivalenceReport]) -> String {
    let mut out = String::from("ny,nz,l2_rel,h1_rel\n");
    for r in reports {
        out.push_str(&format!("{},{},{},{}\n", r.ny, r.nz, r.l2_rel, r.h1_rel));
    }
    out
}

/// Finite-difference evidence that the cell solution of a two-variable
/// profile varies smoothly with the slow coordinate: for each step `delta`,
/// the solution at `x + delta` is pulled onto the cell at `x` by
/// height-fraction matching and `||pulled - X(x)||_H1 / delta` is reported.
/// For a differentiable dependence these ratios stabilize as `delta`
/// shrinks.
#[derive(Clone, Debug)]
pub struct ContinuityProbe {
    pub x: f64,
    /// `(delta, difference_h1 / delta)` rows, in the caller's order.
    pub rows: Vec<(f64, f64)>,
}

pub fn x_continuity_probe(
    profile: &Arc<ProfileSpec>,
    x: f64,
    deltas: &[f64],
    ny: usize,
    nz: usize,
    tol: f64,
    max_iter: usize,
) -> Result<ContinuityProbe> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("no probe steps supplied".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "probe anchor x={x} outside [0, 1]"
        )));
    }
    for &d in deltas {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "probe step must be positive, got {d}"
            )));
        }
        if x + d > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "probe point x+delta = {} leaves [0, 1]",
                x + d
            )));
        }
    }
    let base_cell = cell_at(profile, x)?;
    let (base_mesh, base_pairing) = mesh_cell(&base_cell, ny, nz)?;
    let base_mesh: SharedMesh = Arc::new(base_mesh);
    let base = solve_cell(&base_cell, &base_mesh, &base_pairing, tol, max_iter)
        .map_err(|e| e.context(format!("cell solve at x={x}")))?;
    let layers = base_mesh
        .grid
        .ok_or_else(|| Error::Mesh("probe mesh lost its layer structure".into()))?
        .layers;
    let lumped = lumped_mass(&base_mesh);

    let results = par::map_collect(deltas.to_vec(), |d| -> Result<(f64, f64)> {
        let cell = cell_at(profile, x + d)?;
        let (mesh, pairing) = mesh_cell(&cell, ny, nz)?;
        let mesh: SharedMesh = Arc::new(mesh);
        let sol = solve_cell(&cell, &mesh, &pairing, tol, max_iter)
            .map_err(|e| e.context(format!("cell solve at x={}", x + d)))?;
        let mut pulled = Vec::with_capacity(base_mesh.vertices.len());
        for (vid, vert) in base_mesh.vertices.iter().enumerate() {
            let j = vid % (layers + 1);
            pulled.push(sol.value_fraction(vert[0], j as f64 / layers as f64)?);
        }
        subtract_weighted_mean(&mut pulled, &lumped);
        let diff: Vec<f64> = pulled.iter().zip(&base.values).map(|(a, b)| a - b).collect();
        Ok((d, fem_norms(&base_mesh, &diff).h1() / d))
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    Ok(ContinuityProbe { x, rows })
}

fn subtract_weighted_mean(values: &mut [f64], weights: &[f64]) {
    let total: f64 = weights.iter().sum();
    let mean: f64 = values.iter().zip(weights.iter()).map(|(a, b)| a * b).sum::<f64>() / total;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

fn rel(err: f64, reference: f64) -> f64 {
    if reference > 1e-14 {
        err / reference
    } else {
        err
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
