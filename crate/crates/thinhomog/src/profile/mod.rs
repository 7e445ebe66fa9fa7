//! Boundary-profile expressions and their validation.
//!
//! A profile is a pair of expressions: a floor depth `b(x) >= 0` and an
//! oscillating roof `G(x, y) > 0` that is `L`-periodic in the fast variable
//! `y`. Validation samples both on a dense grid, checks positivity and
//! periodicity, and records safety-margined bounds that the geometry and
//! mesh layers rely on.

mod ast;
mod deriv;
mod parse;

pub use ast::{ExprAst, Func, Var};
pub use deriv::{deriv, fold};
pub use parse::parse;

use std::sync::Arc;

use crate::error::{Error, Result};

/// Grid used by [`validate`] unless the caller picks another density.
pub const DEFAULT_GRID_DENSITY: usize = 512;

const PERIODICITY_TOL: f64 = 1e-12;

/// Bounds certified by validation. `g0/g1` bracket the roof, `b1` caps the
/// floor depth and `m` caps `|dG/dy|`; all are widened by the observed grid
/// Lipschitz increment so points between samples stay inside.
#[derive(Clone, Copy, Debug)]
pub struct ProfileBounds {
    pub b1: f64,
    pub g0: f64,
    pub g1: f64,
    pub m: f64,
}

/// A validated profile: expressions, period, partial derivatives and bounds.
#[derive(Debug)]
pub struct ProfileSpec {
    b: ExprAst,
    g: ExprAst,
    l: f64,
    db_dx: ExprAst,
    dg_dx: ExprAst,
    dg_dy: ExprAst,
    pub bounds: ProfileBounds,
}

impl ProfileSpec {
    /// Parse, differentiate and validate at the default grid density.
    pub fn new(b_text: &str, g_text: &str, l: f64) -> Result<Arc<Self>> {
        Self::with_density(b_text, g_text, l, DEFAULT_GRID_DENSITY)
    }

    pub fn with_density(b_text: &str, g_text: &str, l: f64, density: usize) -> Result<Arc<Self>> {
        let b = parse(b_text).map_err(|e| e.context("floor expression"))?;
        let g = parse(g_text).map_err(|e| e.context("roof expression"))?;
        if b.depends_on(Var::Y) {
            return Err(Error::Validation(
                "floor expression must not depend on y".into(),
            ));
        }
        let bounds = validate(&b, &g, l, density)?;
        let db_dx = deriv(&b, Var::X)?;
        let dg_dx = deriv(&g, Var::X)?;
        let dg_dy = deriv(&g, Var::Y)?;
        Ok(Arc::new(ProfileSpec {
            b,
            g,
            l,
            db_dx,
            dg_dx,
            dg_dy,
            bounds,
        }))
    }

    /// Skip validation; for internal tests that need profiles outside the
    /// admissible class (e.g. roofs with corners). Derivatives that do not
    /// exist simply fail at evaluation time.
    #[cfg(test)]
    pub(crate) fn unchecked(b_text: &str, g_text: &str, l: f64, bounds: ProfileBounds) -> Arc<Self> {
        let b = parse(b_text).unwrap();
        let g = parse(g_text).unwrap();
        let db_dx = deriv(&b, Var::X).unwrap();
        let dg_dx = deriv(&g, Var::X).unwrap();
        let dg_dy = deriv(&g, Var::Y).unwrap();
        Arc::new(ProfileSpec {
            b,
            g,
            l,
            db_dx,
            dg_dx,
            dg_dy,
            bounds,
        })
    }

    pub fn period(&self) -> f64 {
        self.l
    }

    pub fn b(&self, x: f64) -> Result<f64> {
        self.b.eval(x, 0.0)
    }

    pub fn g(&self, x: f64, y: f64) -> Result<f64> {
        self.g.eval(x, y)
    }

    pub fn db_dx(&self, x: f64) -> Result<f64> {
        self.db_dx.eval(x, 0.0)
    }

    pub fn dg_dx(&self, x: f64, y: f64) -> Result<f64> {
        self.dg_dx.eval(x, y)
    }

    pub fn dg_dy(&self, x: f64, y: f64) -> Result<f64> {
        self.dg_dy.eval(x, y)
    }

    pub fn b_expr(&self) -> &ExprAst {
        &self.b
    }

    pub fn g_expr(&self) -> &ExprAst {
        &self.g
    }
}

/// Sample `b` on `[0,1]` and `G` on `[0,1] x [0,L]` at `(density+1)` points
/// per axis; reject non-positive roofs, negative floors and aperiodic roofs;
/// return bounds widened by the observed per-cell Lipschitz increment.
pub fn validate(b: &ExprAst, g: &ExprAst, l: f64, density: usize) -> Result<ProfileBounds> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Validation(format!("period L must be positive, got {l}")));
    }
    if density < 8 {
        return Err(Error::Validation(format!(
            "grid density {density} too small (need at least 8)"
        )));
    }
    let n = density;
    let hx = 1.0 / n as f64;
    let hy = l / n as f64;

    // Floor: range plus largest successive increment.
    let mut b_vals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        b_vals.push(b.eval(i as f64 * hx, 0.0)?);
    }
    let b_min = b_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_max = b_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let b_step = max_step(&b_vals);
    if b_min < -1e-12 {
        return Err(Error::Validation(format!(
            "floor depth must satisfy b(x) >= 0; sampled minimum {b_min}"
        )));
    }

    // Roof and its y-derivative over the full grid.
    let dg_dy = deriv(g, Var::Y)?;
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    let mut m_max: f64 = 0.0;
    let mut g_step: f64 = 0.0;
    let mut m_step: f64 = 0.0;
    let mut row = vec![0.0; n + 1];
    let mut drow = vec![0.0; n + 1];
    for i in 0..=n {
        let x = i as f64 * hx;
        let mut prev_g = f64::NAN;
        let mut prev_d = f64::NAN;
        for j in 0..=n {
            let y = j as f64 * hy;
            let gv = g.eval(x, y)?;
            let dv = dg_dy.eval(x, y)?;
            g_min = g_min.min(gv);
            g_max = g_max.max(gv);
            m_max = m_max.max(dv.abs());
            if j > 0 {
                g_step = g_step.max((gv - prev_g).abs());
                m_step = m_step.max((dv - prev_d).abs());
            }
            if i > 0 {
                g_step = g_step.max((gv - row[j]).abs());
                m_step = m_step.max((dv - drow[j]).abs());
            }
            prev_g = gv;
            prev_d = dv;
            row[j] = gv;
            drow[j] = dv;
        }
    }

    // Periodicity of the roof in y, on a coarser probe grid.
    let probe = 64.min(n);
    for i in 0..=probe {
        let x = i as f64 / probe as f64;
        for j in 0..=probe {
            let y = j as f64 * l / probe as f64;
            let diff = (g.eval(x, y + l)? - g.eval(x, y)?).abs();
            if diff > PERIODICITY_TOL {
                return Err(Error::Validation(format!(
                    "roof is not {l}-periodic in y: |G(x,y+L)-G(x,y)| = {diff:.3e} at (x,y)=({x},{y})"
                )));
            }
        }
    }

    let g0 = g_min - g_step;
    let g1 = g_max + g_step;
    let m = m_max + m_step;
    let b1 = (b_max + b_step).max(0.0);
    if g0 <= 0.0 {
        return Err(Error::Validation(format!(
            "roof must stay positive: sampled minimum {g_min:.6} with margin {g_step:.2e} gives inf G <= {g0:.6}"
        )));
    }
    Ok(ProfileBounds { b1, g0, g1, m })
}

fn max_step(vals: &[f64]) -> f64 {
    vals.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoidal_roof_bounds() {
        let p = ProfileSpec::new("0", "2+sin(2*pi*y)", 1.0).unwrap();
        let b = p.bounds;
        assert!((b.b1 - 0.0).abs() < 1e-12);
        assert!((b.g0 - 1.0).abs() < 0.05, "g0={}", b.g0);
        assert!((b.g1 - 3.0).abs() < 0.05, "g1={}", b.g1);
        assert!((b.m - 2.0 * std::f64::consts::PI).abs() < 0.1, "m={}", b.m);
        // The certified bounds really do enclose the samples.
        for j in 0..=97 {
            let y = j as f64 / 97.0;
            let gv = p.g(0.0, y).unwrap();
            assert!(b.g0 <= gv + 1e-12 && gv <= b.g1 + 1e-12);
            assert!(p.dg_dy(0.0, y).unwrap().abs() <= b.m + 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_roof() {
        let e = ProfileSpec::new("0", "sin(2*pi*y)", 1.0).unwrap_err();
        assert!(matches!(e, Error::Validation(_)), "{e}");
    }

    #[test]
    fn rejects_negative_floor() {
        let e = ProfileSpec::new("0-1", "2", 1.0).unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
    }

    #[test]
    fn rejects_aperiodic_roof() {
        let e = ProfileSpec::new("0", "2+sin(3*y)", 1.0).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("periodic"), "{msg}");
    }

    #[test]
    fn rejects_floor_depending_on_y() {
        let e = ProfileSpec::new("y", "2", 1.0).unwrap_err();
        assert!(e.to_string().contains("must not depend on y"));
    }

    #[test]
    fn locally_periodic_roof_validates() {
        let p = ProfileSpec::new("0", "2+(1+0.5*x)*sin(2*pi*y)", 1.0).unwrap();
        assert!(p.bounds.g0 > 0.4 && p.bounds.g0 < 0.55);
        assert!(p.bounds.g1 > 3.4 && p.bounds.g1 < 3.6);
    }

    #[test]
    fn print_parse_round_trip_evaluates_identically() {
        let texts = [
            "2+sin(2*pi*y)",
            "2+(1+0.5*x)*sin(2*pi*y)",
            "-x^2 + 3*(y - 1)/(x + 2)",
            "sqrt(1+x^2)*exp(-y)",
            "2^-3 + abs(x-y)",
        ];
        for t in texts {
            let a = parse(t).unwrap();
            let b = parse(&a.to_string()).unwrap();
            for k in 0..100 {
                let x = -1.0 + 0.027 * k as f64;
                let y = 2.0 - 0.041 * k as f64;
                let va = a.eval(x, y).unwrap();
                let vb = b.eval(x, y).unwrap();
                assert_eq!(va.to_bits(), vb.to_bits(), "{t} at ({x},{y})");
            }
        }
    }
}
