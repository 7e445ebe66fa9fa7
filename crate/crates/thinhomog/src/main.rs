//! Command-line driver: convergence sweeps, single cell solves, and the
//! fixed-cell cross-check.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use thinhomog::geometry::cell_at;
use thinhomog::homog::{cell_flux_residuals, compute_rp, r_energy};
use thinhomog::mesh::mesh_cell;
use thinhomog::par;
use thinhomog::profile::ProfileSpec;
use thinhomog::pullback::{equivalence_check, equivalence_csv, AdmissibleProfile};
use thinhomog::study::{csv_string, emit_csv, emit_svg, run_study, StudyConfig};
use thinhomog::{fem2d, Error};

#[derive(Parser)]
#[command(
    name = "thinhomog",
    version,
    about = "Effective coefficients and corrector convergence for thin domains with an oscillating top boundary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence sweep and write CSV/SVG artifacts.
    Run {
        /// Study configuration (`section.key = value` lines); defaults
        /// apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Artifact directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Thin-strip refinement multiplier (overrides sweep.mesh_factor).
        #[arg(long)]
        mesh_factor: Option<f64>,
        /// Comma-separated decreasing thicknesses (overrides sweep.eps).
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Solve one periodic cell problem and print the effective
    /// coefficients with their identity residuals.
    Cell {
        /// Profile configuration file (profile.b / profile.g / profile.l).
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Slow coordinate of the cell, in [0, 1].
        #[arg(long)]
        x: f64,
        /// Horizontal subdivisions of the cell mesh.
        #[arg(long, default_value_t = 128)]
        ny: usize,
        /// Vertical layers of the cell mesh.
        #[arg(long, default_value_t = 64)]
        nz: usize,
        /// Relative solver tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the cell mesh as text to this path.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
    },
    /// Cross-check the transplanted cell solve against direct solves and
    /// print one CSV row per mesh level.
    PullbackCheck {
        /// Configuration supplying profile.g (reference roof, y-only),
        /// pullback.ghat and pullback.levels.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> thinhomog::Result<StudyConfig> {
    match path {
        Some(p) => StudyConfig::from_file(p),
        None => Ok(StudyConfig::default()),
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    mesh_factor: Option<f64>,
    eps: Option<Vec<f64>>,
) -> thinhomog::Result<()> {
    let mut cfg = load_config(&config)?;
    if let Some(dir) = out {
        cfg.out_dir = dir;
    }
    if let Some(f) = mesh_factor {
        cfg.mesh_factor = f;
    }
    if let Some(list) = eps {
        cfg.eps_list = list;
    }
    cfg.validate()?;

    let table = run_study(&cfg)?;
    print!("{}", csv_string(&table));
    println!(
        "# rate_h1_plain = {} (expected to stall near 0)",
        table.rate_h1_plain.label()
    );
    println!(
        "# mesh gate: refining the strip mesh twofold at eps = {} moves e_h1_corr by {:.2}%",
        table.rows[0].epsilon,
        100.0 * table.mesh_gate_rel_change
    );
    println!(
        "# rescaled norms: source spread {:.4}, cell-solution spread {:.4}",
        table.norm_f_spread, table.norm_x_spread
    );

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    })?;
    let csv_path = cfg.out_dir.join("study.csv");
    let svg_path = cfg.out_dir.join("study.svg");
    emit_csv(&table, &csv_path)?;
    emit_svg(&table, &svg_path)?;
    println!("# wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

fn cmd_cell(
    profile: Option<PathBuf>,
    x: f64,
    ny: usize,
    nz: usize,
    tol: f64,
    dump_mesh: Option<PathBuf>,
) -> thinhomog::Result<()> {
    let cfg = load_config(&profile)?;
    let spec = ProfileSpec::with_density(&cfg.floor, &cfg.roof, cfg.period, cfg.grid_density)?;
    let cell = cell_at(&spec, x)?;
    let (mesh, pairing) = mesh_cell(&cell, ny, nz)?;
    let mesh = Arc::new(mesh);
    if let Some(path) = &dump_mesh {
        let io = |e| Error::Io {
            path: path.clone(),
            source: e,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        mesh.write_text(std::io::BufWriter::new(file)).map_err(io)?;
    }
    let sol = fem2d::solve_cell(&cell, &mesh, &pairing, tol, cfg.max_iter)?;
    let (r, p) = compute_rp(&sol);
    let re = r_energy(&sol);
    let fr = cell_flux_residuals(&sol)?;
    println!("x = {x}");
    println!("ny = {ny}, nz = {nz}, vertices = {}", mesh.vertices.len());
    println!("r = {r}");
    println!("p = {p}");
    println!("r_energy = {re} (relative gap {:.3e})", (r - re).abs() / r);
    println!("flux residual, discrete load = {:.6e}", fr.discrete);
    println!("flux residual, smooth slope  = {:.6e}", fr.smooth);
    println!(
        "solver: {} iterations, relative residual {:.3e}",
        sol.iterations, sol.residual
    );
    if let Some(path) = dump_mesh {
        println!("mesh written to {}", path.display());
    }
    Ok(())
}

fn cmd_pullback_check(config: Option<PathBuf>) -> thinhomog::Result<()> {
    let cfg = load_config(&config)?;
    let reference = AdmissibleProfile::new(&cfg.roof, cfg.period)
        .map_err(|e| e.context("reference roof"))?;
    let transplant = AdmissibleProfile::new(&cfg.pullback_ghat, cfg.period)
        .map_err(|e| e.context("transplanted roof"))?;
    if cfg.pullback_levels.is_empty() {
        return Err(Error::Config("pullback.levels must not be empty".into()));
    }
    let jobs: Vec<usize> = cfg.pullback_levels.clone();
    let reports = par::map_collect(jobs, |ny| {
        equivalence_check(
            &reference,
            &transplant,
            ny,
            (ny / 2).max(2),
            cfg.tol,
            cfg.max_iter,
        )
    });
    let mut rows = Vec::with_capacity(reports.len());
    for r in reports {
        rows.push(r?);
    }
    print!("{}", equivalence_csv(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            mesh_factor,
            eps,
        } => cmd_run(config, out, mesh_factor, eps),
        Command::Cell {
            profile,
            x,
            ny,
            nz,
            tol,
            dump_mesh,
        } => cmd_cell(profile, x, ny, nz, tol, dump_mesh),
        Command::PullbackCheck { config } => cmd_pullback_check(config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
