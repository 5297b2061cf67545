use std::path::Path;

use pmlde::driver::Simulation;
use pmlde::io::{read_energy_csv, read_snapshot, OutputSink};
use pmlde::presets::example_4_1;

fn run_into(dir: &Path) {
    let mut c = example_4_1();
    c.grid.nx = 40;
    c.grid.ny = 40;
    c.time.tau = 2e-2;
    c.time.t_end = 1.0;
    c.output.snapshot_every = Some(0.5);
    let mut sim = Simulation::new(c).unwrap();
    let sink = OutputSink::create(dir).unwrap();
    sim.run(Some(&sink)).unwrap();
    sink.finish().unwrap();
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(a.path());
    run_into(b.path());
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "energy.csv"));
    assert_eq!(names.iter().filter(|n| n.to_string_lossy().starts_with("p_")).count(), 3);
    for n in &names {
        assert_eq!(std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn energy_rows_and_snapshots_read_back() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path());
    let rows = read_energy_csv(&dir.path().join("energy.csv")).unwrap();
    assert_eq!((rows[0].n, rows.len()), (2, 49));
    assert!(rows.windows(2).all(|w| w[1].n == w[0].n + 1));
    assert!(rows.iter().all(|r| r.residual.abs() <= 1e-10 * r.e_embed.max(1e-300)));
    let s = read_snapshot(&dir.path().join("p_00002.bin")).unwrap();
    assert_eq!(s.n, 50);
    assert_eq!(s.data.len(), 40 * 40);
}
