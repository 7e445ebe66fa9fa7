//! Scratch measurement harness (not part of the shipped crate).

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use thinhomog::geometry::cell_at;
use thinhomog::homog::{
    cell_flux_residuals, compute_rp, r_energy, solve_homog, CoeffSample, CoefficientTable,
};
use thinhomog::mesh::mesh_cell;
use thinhomog::profile::ProfileSpec;
use thinhomog::study::{run_study, StudyConfig};
use thinhomog::{fem2d, Result};

fn main() -> Result<()> {
    // --- criterion 2/3 numbers: sine cell at three mesh levels ---
    let spec = ProfileSpec::with_density("0", "2+0.5*sin(2*pi*y)", 1.0, 512)?;
    let cell = cell_at(&spec, 0.0)?;
    for (ny, nz) in [(64usize, 32usize), (128, 64), (256, 128)] {
        let t = Instant::now();
        let (mesh, pairing) = mesh_cell(&cell, ny, nz)?;
        let mesh = Arc::new(mesh);
        let poly = mesh.polygonal_area();
        let sol = fem2d::solve_cell(&cell, &mesh, &pairing, 1e-10, 200_000)?;
        let (r, p) = compute_rp(&sol);
        let re = r_energy(&sol);
        let fr = cell_flux_residuals(&sol)?;
        println!(
            "cell ny={ny:<3} r={r:.12} p={p:.12} |p-poly/L|={:.3e} gap_re={:.3e} smooth={:.6e} discrete={:.3e} t={:.2?}",
            (p - poly / 1.0).abs(),
            (r - re).abs() / r,
            fr.smooth,
            fr.discrete,
            t.elapsed()
        );
    }

    // --- criterion 8: manufactured limit solve ---
    let table = CoefficientTable::from_samples(
        vec![
            CoeffSample { x: 0.0, r: 1.0, p: 1.0, cell: None },
            CoeffSample { x: 1.0, r: 1.0, p: 1.0, cell: None },
        ],
        1.0,
    )?;
    let mut errs = Vec::new();
    for n in [16usize, 32, 64] {
        let w = solve_homog(&table, |x| Ok((1.0 + PI * PI) * (PI * x).cos()), n)?;
        // Simpson on 4096 intervals.
        let m = 4096usize;
        let h = 1.0 / m as f64;
        let f = |x: f64| {
            let d = w.w0(x) - (PI * x).cos();
            d * d
        };
        let mut s = f(0.0) + f(1.0);
        for i in 1..m {
            let x = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let e = (s * h / 3.0).sqrt();
        println!("homog n={n:<3} l2_err={e:.6e}");
        errs.push((n as f64, e));
    }
    for w in errs.windows(2) {
        println!(
            "  order {:.3}",
            (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln()
        );
    }

    // --- criterion 4 gate for the default roof, short sweep ---
    let mut cfg = StudyConfig::default();
    cfg.eps_list = vec![0.125, 0.0625];
    let t = Instant::now();
    let study = run_study(&cfg)?;
    for row in &study.rows {
        println!(
            "sweep eps={:<9} e_l2={:.5e} e_h1_plain={:.5e} e_h1_corr={:.5e}",
            row.epsilon, row.e_l2_plain, row.e_h1_plain, row.e_h1_corr
        );
    }
    println!(
        "default-roof mesh_gate_rel_change = {:.4} (elapsed {:.1?})",
        study.mesh_gate_rel_change,
        t.elapsed()
    );
    Ok(())
}
