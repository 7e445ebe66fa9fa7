//! Convergence-study driver: builds the coefficient table and the limit
//! solution once, runs one thin-strip error report per thickness
//! (concurrently), fits log-log rates across the sweep, and renders the
//! results as CSV and SVG artifacts.

use std::path::{Path, PathBuf};

use crate::corrector::{error_report, ErrorReport, MeshParams};
use crate::error::{io_err, Error, Result};
use crate::geometry::{thin_domain, DEFAULT_EPSILON_MAX};
use crate::homog::{build_table, hat_f_limit, solve_homog};
use crate::par;
use crate::profile::{parse, ExprAst, ProfileSpec, Var};
use crate::quadrature::log_log_slope;

/// Everything a sweep needs, with defaults matching the reference
/// configuration (flat floor, sinusoidal roof, cosine load, thickness
/// halving from 1/8 to 1/64). Overridable through a line-oriented
/// `section.key = value` text file.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    /// Floor expression `b(x)` (profile.b).
    pub floor: String,
    /// Roof expression `g(x, y)` (profile.g).
    pub roof: String,
    /// Cell period (profile.l).
    pub period: f64,
    /// Validation grid density (profile.grid_density).
    pub grid_density: usize,
    /// Slow-variable load `f0(x)` (source.f0).
    pub f0: String,
    /// Strictly decreasing thicknesses (sweep.eps, comma-separated).
    pub eps_list: Vec<f64>,
    /// Thickness ceiling (sweep.eps_max).
    pub eps_max: f64,
    /// Uniform mesh refinement multiplier for the thin strips
    /// (sweep.mesh_factor); may be fractional.
    pub mesh_factor: f64,
    /// Coefficient-table stations on [0, 1] (table.x_samples).
    pub x_samples: usize,
    /// Cell-problem mesh resolution (cell.ny / cell.nz).
    pub cell_ny: usize,
    pub cell_nz: usize,
    /// Thin-strip columns per oscillation period and vertical layers at
    /// mesh_factor 1 (thin.cells_per_period / thin.nz).
    pub cells_per_period: usize,
    pub thin_nz: usize,
    /// Elements for the quadratic limit solve (limit.n).
    pub homog_n: usize,
    /// Iterative solver controls (solver.tol / solver.max_iter).
    pub tol: f64,
    pub max_iter: usize,
    /// Artifact directory used by the command-line driver (output.dir).
    pub out_dir: PathBuf,
    /// Transplanted roof for the fixed-cell cross-check (pullback.ghat);
    /// the reference roof is profile.g, which must then be y-only.
    pub pullback_ghat: String,
    /// Mesh levels `ny` for the cross-check (pullback.levels); each level
    /// uses nz = ny / 2.
    pub pullback_levels: Vec<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            floor: "0".into(),
            roof: "2+sin(2*pi*y)".into(),
            period: 1.0,
            grid_density: 512,
            f0: "cos(pi*x)".into(),
            eps_list: vec![0.125, 0.0625, 0.03125, 0.015625],
            eps_max: DEFAULT_EPSILON_MAX,
            mesh_factor: 1.0,
            x_samples: 17,
            cell_ny: 128,
            cell_nz: 64,
            cells_per_period: 128,
            thin_nz: 64,
            homog_n: 64,
            tol: 1e-10,
            max_iter: 200_000,
            out_dir: PathBuf::from("out"),
            pullback_ghat: "1+0.2*sin(2*pi*y)".into(),
            pullback_levels: vec![32, 64, 128],
        }
    }
}

impl StudyConfig {
    /// Parse a `section.key = value` text: `#` starts a comment, blank
    /// lines are skipped, unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                Error::Config(format!("line {}: bad {what} `{value}`", lineno + 1))
            };
            match key {
                "profile.b" => cfg.floor = value.to_string(),
                "profile.g" => cfg.roof = value.to_string(),
                "profile.l" => cfg.period = value.parse().map_err(|_| bad("number"))?,
                "profile.grid_density" => {
                    cfg.grid_density = value.parse().map_err(|_| bad("integer"))?
                }
                "source.f0" => cfg.f0 = value.to_string(),
                "sweep.eps" => {
                    cfg.eps_list = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("thickness list"))?
                }
                "sweep.eps_max" => cfg.eps_max = value.parse().map_err(|_| bad("number"))?,
                "sweep.mesh_factor" => {
                    cfg.mesh_factor = value.parse().map_err(|_| bad("number"))?
                }
                "table.x_samples" => {
                    cfg.x_samples = value.parse().map_err(|_| bad("integer"))?
                }
                "cell.ny" => cfg.cell_ny = value.parse().map_err(|_| bad("integer"))?,
                "cell.nz" => cfg.cell_nz = value.parse().map_err(|_| bad("integer"))?,
                "thin.cells_per_period" => {
                    cfg.cells_per_period = value.parse().map_err(|_| bad("integer"))?
                }
                "thin.nz" => cfg.thin_nz = value.parse().map_err(|_| bad("integer"))?,
                "limit.n" => cfg.homog_n = value.parse().map_err(|_| bad("integer"))?,
                "solver.tol" => cfg.tol = value.parse().map_err(|_| bad("number"))?,
                "solver.max_iter" => {
                    cfg.max_iter = value.parse().map_err(|_| bad("integer"))?
                }
                "output.dir" => cfg.out_dir = PathBuf::from(value),
                "pullback.ghat" => cfg.pullback_ghat = value.to_string(),
                "pullback.levels" => {
                    cfg.pullback_levels = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("level list"))?
                }
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{key}`",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::parse(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::Config("sweep.eps must list at least one thickness".into()));
        }
        for &e in &self.eps_list {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::Config(format!("thickness {e} must be positive")));
            }
            if e > self.eps_max {
                return Err(Error::Config(format!(
                    "thickness {e} exceeds the ceiling {}",
                    self.eps_max
                )));
            }
        }
        for w in self.eps_list.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Config(format!(
                    "thicknesses must strictly decrease, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !(self.mesh_factor > 0.0) || !self.mesh_factor.is_finite() {
            return Err(Error::Config(format!(
                "mesh factor must be positive, got {}",
                self.mesh_factor
            )));
        }
        if self.x_samples < 2 {
            return Err(Error::Config(format!(
                "table.x_samples must be at least 2, got {}",
                self.x_samples
            )));
        }
        Ok(())
    }

    /// Thin-strip mesh parameters after applying the (possibly fractional)
    /// refinement multiplier.
    pub fn thin_params(&self) -> MeshParams {
        MeshParams {
            cells_per_period: ((self.cells_per_period as f64 * self.mesh_factor).round()
                as usize)
                .max(4),
            nz: ((self.thin_nz as f64 * self.mesh_factor).round() as usize).max(2),
        }
    }
}

/// A fitted convergence rate: the least-squares slope of log(error) against
/// log(thickness), or `Exact` when the whole column sits at rounding level
/// and a slope would be meaningless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateFit {
    Exact,
    Slope(f64),
}

impl RateFit {
    pub fn label(&self) -> String {
        match self {
            RateFit::Exact => "exact".to_string(),
            RateFit::Slope(s) => format!("{s}"),
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            RateFit::Exact => None,
            RateFit::Slope(s) => Some(*s),
        }
    }
}

/// Sweep results ordered by decreasing thickness, with fitted rates and the
/// cross-checks that decide whether the rates can be trusted.
#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ErrorReport>,
    pub rate_l2: RateFit,
    pub rate_h1_plain: RateFit,
    pub rate_h1_corr: RateFit,
    /// Relative change of the corrected error at the largest thickness when
    /// the strip mesh is refined twofold; small values mean discretization
    /// error is subdominant and the rates reflect the thickness sweep.
    pub mesh_gate_rel_change: f64,
    /// The doubled-mesh report behind the gate value.
    pub gate_row: ErrorReport,
    /// max/min of the rescaled source norm across the sweep (uniform
    /// boundedness of the data).
    pub norm_f_spread: f64,
    /// max/min of the rescaled cell-solution norm across the sweep.
    pub norm_x_spread: f64,
}

const EXACT_FLOOR: f64 = 1e-10;

fn fit_rate(rows: &[ErrorReport], col: impl Fn(&ErrorReport) -> f64) -> Result<RateFit> {
    let max = rows.iter().map(&col).fold(0.0f64, f64::max);
    if max <= EXACT_FLOOR {
        return Ok(RateFit::Exact);
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, col(r))).collect();
    match log_log_slope(&pts) {
        Some(s) if s.is_finite() => Ok(RateFit::Slope(s)),
        _ => Err(Error::Validation(
            "rate fit degenerate: errors are neither at rounding level nor positive".into(),
        )),
    }
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Run the whole pipeline: profile → coefficient table → limit solution →
/// per-thickness error reports (concurrently, including the doubled-mesh
/// gate run) → fitted rates. Deterministic for a fixed config: parallel
/// results are aggregated in index order and every stage is pure
/// arithmetic.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceTable> {
    config.validate()?;
    let profile = ProfileSpec::with_density(
        &config.floor,
        &config.roof,
        config.period,
        config.grid_density,
    )
    .map_err(|e| e.context("profile stage"))?;
    let f0: ExprAst = parse(&config.f0).map_err(|e| e.context("source stage"))?;
    if f0.depends_on(Var::Y) {
        return Err(Error::Config(
            "source.f0 must depend on the slow variable x only".into(),
        ));
    }

    let table = build_table(
        &profile,
        config.x_samples,
        config.cell_ny,
        config.cell_nz,
        config.tol,
        config.max_iter,
    )
    .map_err(|e| e.context("coefficient table stage"))?;
    let w0 = solve_homog(&table, hat_f_limit(&table, &f0), config.homog_n)
        .map_err(|e| e.context("limit solve stage"))?;

    let params = config.thin_params();
    let mut jobs: Vec<(f64, MeshParams)> =
        config.eps_list.iter().map(|&e| (e, params)).collect();
    // One extra run at the largest thickness with a twofold-refined strip
    // mesh: the discretization gate.
    jobs.push((config.eps_list[0], params.scaled(2)));

    let results = par::map_collect(jobs, |(eps, mp)| -> Result<ErrorReport> {
        let spec = thin_domain(&profile, eps, config.eps_max)?;
        error_report(&spec, &f0, &table, &w0, mp, config.tol, config.max_iter)
            .map_err(|e| e.context(format!("error report stage at eps={eps}")))
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    let gate_row = rows.pop().expect("gate job present");

    let base = rows[0].e_h1_corr;
    let mesh_gate_rel_change = if base.abs() <= EXACT_FLOOR && gate_row.e_h1_corr.abs() <= EXACT_FLOOR
    {
        0.0
    } else {
        (gate_row.e_h1_corr - base).abs() / base.abs().max(f64::MIN_POSITIVE)
    };

    let norm_f_spread = spread(rows.iter().map(|r| r.norm_f));
    if !(norm_f_spread <= 4.0) {
        return Err(Error::Validation(format!(
            "rescaled source norm is not uniformly bounded across the sweep (max/min = {norm_f_spread:.3})"
        )));
    }
    let norm_x_spread = spread(rows.iter().map(|r| r.norm_x));

    Ok(ConvergenceTable {
        rate_l2: fit_rate(&rows, |r| r.e_l2_plain)?,
        rate_h1_plain: fit_rate(&rows, |r| r.e_h1_plain)?,
        rate_h1_corr: fit_rate(&rows, |r| r.e_h1_corr)?,
        rows,
        mesh_gate_rel_change,
        gate_row,
        norm_f_spread,
        norm_x_spread,
    })
}

/// CSV rendering: header
/// `eps,h,e_l2_plain,e_h1_plain,e_h1_corr,norm_X,rate_l2,rate_h1corr`,
/// one row per thickness. The fitted rates are table-level values repeated
/// on every row. Plain `Display` formatting keeps re-runs byte-identical.
pub fn csv_string(table: &ConvergenceTable) -> String {
    let mut out = String::from("eps,h,e_l2_plain,e_h1_plain,e_h1_corr,norm_X,rate_l2,rate_h1corr\n");
    let rate_l2 = table.rate_l2.label();
    let rate_corr = table.rate_h1_corr.label();
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epsilon,
            r.column_width,
            r.e_l2_plain,
            r.e_h1_plain,
            r.e_h1_corr,
            r.norm_x,
            rate_l2,
            rate_corr,
        ));
    }
    out
}

pub fn emit_csv(table: &ConvergenceTable, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(table)).map_err(|e| io_err(path, e))
}

const SVG_SERIES: [(&str, &str); 3] = [
    ("e_l2_plain", "#1f77b4"),
    ("e_h1_plain", "#d62728"),
    ("e_h1_corr", "#2ca02c"),
];

fn series_value(r: &ErrorReport, name: &str) -> f64 {
    match name {
        "e_l2_plain" => r.e_l2_plain,
        "e_h1_plain" => r.e_h1_plain,
        _ => r.e_h1_corr,
    }
}

/// Hand-rolled log-log SVG chart: one polyline per error column against
/// thickness. Non-positive values cannot be placed on a log axis and are
/// skipped point-wise.
pub fn svg_string(table: &ConvergenceTable) -> String {
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (80.0, 20.0, 20.0, 60.0);

    let xs: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.epsilon)
        .filter(|&e| e > 0.0)
        .collect();
    let ys: Vec<f64> = table
        .rows
        .iter()
        .flat_map(|r| SVG_SERIES.iter().map(|(name, _)| series_value(r, name)))
        .filter(|&v| v > 0.0)
        .collect();
    let (x0, x1) = log_range(&xs, (1e-2, 1.0));
    let (y0, y1) = log_range(&ys, (1e-16, 1.0));
    let sx = |v: f64| ml + (v.log10() - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |v: f64| h - mb - (v.log10() - y0) / (y1 - y0) * (h - mt - mb);

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    // Axes.
    out.push_str(&format!(
        "  <line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    out.push_str(&format!(
        "  <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        h - mb
    ));
    // Thickness ticks: one per sweep value.
    for &e in &xs {
        let px = sx(e);
        out.push_str(&format!(
            "  <line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            h - mb,
            h - mb + 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{e}</text>\n",
            h - mb + 18.0
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">eps</text>\n",
        (ml + w - mr) / 2.0,
        h - mb + 38.0
    ));
    // Error decades.
    let (d0, d1) = (y0.ceil() as i64, y1.floor() as i64);
    for d in d0..=d1 {
        let py = sy(10f64.powi(d as i32));
        out.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{ml}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">1e{d}</text>\n",
            ml - 8.0,
            py + 4.0
        ));
    }
    out.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">rescaled error</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    // One polyline per error column plus a legend entry.
    for (k, (name, color)) in SVG_SERIES.iter().enumerate() {
        let pts: Vec<String> = table
            .rows
            .iter()
            .filter(|r| r.epsilon > 0.0 && series_value(r, name) > 0.0)
            .map(|r| format!("{:.2},{:.2}", sx(r.epsilon), sy(series_value(r, name))))
            .collect();
        out.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let ly = mt + 16.0 + 18.0 * k as f64;
        out.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            w - mr - 150.0,
            ly - 10.0
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"12\">{name}</text>\n",
            w - mr - 132.0
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn log_range(values: &[f64], fallback: (f64, f64)) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo > 0.0) || !(hi > 0.0) {
        (fallback.0.log10(), fallback.1.log10())
    } else {
        let (mut a, mut b) = (lo.log10(), hi.log10());
        if b - a < 1e-9 {
            a -= 0.5;
            b += 0.5;
        }
        let pad = 0.05 * (b - a);
        (a - pad, b + pad)
    }
}

pub fn emit_svg(table: &ConvergenceTable, path: &Path) -> Result<()> {
    std::fs::write(path, svg_string(table)).map_err(|e| io_err(path, e))
}
