//! Compares the rayon-backed build against the sequential fallback.
//!
//! Run twice and diff the criterion reports:
//! ```text
//! cargo bench
//! cargo bench --no-default-features
//! ```
//! Both invocations exercise the same work; the group names carry the
//! active mode so the reports stay side by side.

use criterion::{criterion_group, criterion_main, Criterion};
use thinhomog::homog::build_table;
use thinhomog::par;
use thinhomog::profile::ProfileSpec;
use thinhomog::study::{run_study, StudyConfig};

fn mode() -> &'static str {
    if par::parallel_enabled() {
        "parallel"
    } else {
        "sequential"
    }
}

/// One cell solve per table station; the stations fan out across threads.
fn bench_cell_table(c: &mut Criterion) {
    let spec = ProfileSpec::with_density("0", "2+(1+0.5*x)*sin(2*pi*y)", 1.0, 128)
        .expect("profile parses");
    c.bench_function(&format!("cell_table/{}/nx9_ny32", mode()), |b| {
        b.iter(|| build_table(&spec, 9, 32, 16, 1e-8, 50_000).expect("table builds"))
    });
}

/// Whole pipeline at toy resolution; the per-thickness error jobs fan out.
fn bench_study_sweep(c: &mut Criterion) {
    let mut cfg = StudyConfig::default();
    cfg.eps_list = vec![0.25, 0.125];
    cfg.cells_per_period = 8;
    cfg.thin_nz = 4;
    cfg.cell_ny = 16;
    cfg.cell_nz = 8;
    cfg.x_samples = 5;
    cfg.homog_n = 8;
    cfg.grid_density = 64;
    cfg.tol = 1e-8;
    cfg.validate().expect("config valid");
    c.bench_function(&format!("study_sweep/{}/toy", mode()), |b| {
        b.iter(|| run_study(&cfg).expect("study runs"))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_cell_table, bench_study_sweep
}
criterion_main!(benches);
