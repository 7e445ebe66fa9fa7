//! Cross-section cells and the thin physical domain they come from.
//!
//! At a slow coordinate `x` the representative cell is
//! `{ 0 < y < L, -b(x) < z < G(x, y) }`. The thin domain at thickness
//! `epsilon` is `{ 0 < x < 1, -eps*b(x) < z < eps*G(x, x/eps) }`; its
//! vertical slice at `x` is the cell at `x`, scaled by `eps` and traced
//! along the diagonal `y = x/eps`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profile::{ExprAst, ProfileSpec, Var};
use crate::quadrature::GAUSS2;

/// Largest thickness accepted unless the caller overrides it.
pub const DEFAULT_EPSILON_MAX: f64 = 0.5;

#[derive(Clone, Debug)]
enum RoofSource {
    /// Roof `G(x, .)` of a two-variable profile, frozen at `x`.
    Profile(Arc<ProfileSpec>),
    /// A one-variable roof `g(y)` with flat floor; used by the pullback
    /// machinery where cells have no x-dependence.
    Expr { g: Arc<ExprAst>, dg: Arc<ExprAst> },
}

/// One periodic cell: `0 < y < l`, `floor < z < roof(y)`.
#[derive(Clone, Debug)]
pub struct CellDomain {
    pub x: f64,
    l: f64,
    floor: f64,
    roof: RoofSource,
}

impl CellDomain {
    pub fn period(&self) -> f64 {
        self.l
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn roof(&self, y: f64) -> Result<f64> {
        match &self.roof {
            RoofSource::Profile(p) => p.g(self.x, y),
            RoofSource::Expr { g, .. } => g.eval(self.x, y),
        }
    }

    /// dRoof/dy, used by boundary-consistency checks.
    pub fn roof_slope(&self, y: f64) -> Result<f64> {
        match &self.roof {
            RoofSource::Profile(p) => p.dg_dy(self.x, y),
            RoofSource::Expr { dg, .. } => dg.eval(self.x, y),
        }
    }

    pub fn height(&self, y: f64) -> Result<f64> {
        Ok(self.roof(y)? - self.floor)
    }

    /// Build a cell directly from a one-variable roof expression in `y`
    /// (floor fixed at 0).
    pub fn from_roof_expr(g: Arc<ExprAst>, dg: Arc<ExprAst>, l: f64) -> Self {
        CellDomain {
            x: 0.0,
            l,
            floor: 0.0,
            roof: RoofSource::Expr { g, dg },
        }
    }
}

/// The cell at slow coordinate `x` in `[0, 1]`.
pub fn cell_at(profile: &Arc<ProfileSpec>, x: f64) -> Result<CellDomain> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Geometry(format!(
            "cell coordinate x={x} outside [0, 1]"
        )));
    }
    Ok(CellDomain {
        x,
        l: profile.period(),
        floor: -profile.b(x)?,
        roof: RoofSource::Profile(Arc::clone(profile)),
    })
}

/// Cell area `|Y*(x)| = ∫_0^L (G(x,y) + b(x)) dy`, composite 2-point Gauss
/// on `quad_points` subintervals (error O(quad_points^-4)).
pub fn area(cell: &CellDomain, quad_points: usize) -> Result<f64> {
    if quad_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "area quadrature needs at least 2 subintervals, got {quad_points}"
        )));
    }
    let h = cell.period() / quad_points as f64;
    let mut total = 0.0;
    for k in 0..quad_points {
        let y0 = k as f64 * h;
        for (t, w) in GAUSS2 {
            total += w * h * cell.height(y0 + t * h)?;
        }
    }
    Ok(total)
}

/// Thin domain of thickness `epsilon` over a validated profile.
#[derive(Clone, Debug)]
pub struct ThinDomainSpec {
    pub epsilon: f64,
    pub profile: Arc<ProfileSpec>,
}

impl ThinDomainSpec {
    /// Upper boundary `eps * G(x, x/eps)`.
    pub fn upper(&self, x: f64) -> Result<f64> {
        Ok(self.epsilon * self.profile.g(x, x / self.epsilon)?)
    }

    /// Lower boundary `-eps * b(x)`.
    pub fn lower(&self, x: f64) -> Result<f64> {
        Ok(-self.epsilon * self.profile.b(x)?)
    }
}

/// Validate the thickness against `(0, epsilon_max]` and bundle it with the
/// profile.
pub fn thin_domain(
    profile: &Arc<ProfileSpec>,
    epsilon: f64,
    epsilon_max: f64,
) -> Result<ThinDomainSpec> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Geometry(format!(
            "thickness must be positive, got {epsilon}"
        )));
    }
    if epsilon > epsilon_max {
        return Err(Error::Geometry(format!(
            "thickness {epsilon} exceeds the ceiling {epsilon_max}"
        )));
    }
    Ok(ThinDomainSpec {
        epsilon,
        profile: Arc::clone(profile),
    })
}

/// Convenience: does the expression pair describe an x-independent profile?
pub fn is_x_independent(profile: &ProfileSpec) -> bool {
    !profile.g_expr().depends_on(Var::X) && !profile.b_expr().depends_on(Var::X)
}
