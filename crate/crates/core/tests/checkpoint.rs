use pmlde::config::RunConfig;
use pmlde::driver::Simulation;
use pmlde::presets::{example_4_1, example_4_3, Body, Frequency};
use pmlde::stepper::BoundaryKind;

fn small_static() -> RunConfig {
    let mut c = example_4_1();
    c.grid.nx = 48;
    c.grid.ny = 48;
    c.time.tau = 2e-2;
    c.time.t_end = 2.0;
    c
}

fn small_moving() -> RunConfig {
    let mut c = example_4_3(Body::Circle, BoundaryKind::Soft, Frequency::Moderate);
    c.grid.nx = 48;
    c.grid.ny = 48;
    c.time.tau = 1e-2;
    c.time.t_end = 0.6;
    c.amr.thresholds.regrid_interval = 10;
    c
}

fn pressures(sim: &Simulation) -> Vec<Vec<u64>> {
    sim.hierarchy.levels.iter().map(|l| l.state.p_curr.data.iter().map(|v| v.to_bits()).collect()).collect()
}

fn run_split(cfg: RunConfig, at: u64) {
    let total = cfg.n_steps();
    let mut whole = Simulation::new(cfg.clone()).unwrap();
    whole.run(None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.bin");
    let mut first = Simulation::new(cfg.clone()).unwrap();
    while first.step_index() < at {
        first.step().unwrap();
    }
    let saved = first.step_index();
    first.save_checkpoint(&path).unwrap();
    drop(first);

    let mut resumed = Simulation::load_checkpoint(cfg, &path).unwrap();
    assert_eq!(resumed.step_index(), saved);
    resumed.run(None).unwrap();
    assert_eq!(resumed.step_index(), total);
    assert_eq!(pressures(&resumed), pressures(&whole));
    assert_eq!(resumed.ledger.last(), whole.ledger.last());
}

#[test]
fn resume_is_bit_identical_on_a_fixed_grid() {
    run_split(small_static(), 50);
}

#[test]
fn resume_is_bit_identical_with_moving_body_and_refinement() {
    let cfg = small_moving();
    assert!(cfg.amr.enabled);
    run_split(cfg, 25);
}

#[test]
fn checkpoint_straight_after_construction_restores() {
    // construction already takes the bootstrap step
    run_split(small_static(), 0);
}

#[test]
fn mismatched_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.bin");
    let sim = Simulation::new(small_static()).unwrap();
    sim.save_checkpoint(&path).unwrap();
    let mut other = small_static();
    other.grid.nx = 64;
    let err = Simulation::load_checkpoint(other, &path).err().expect("grid mismatch must fail");
    assert_eq!(err.exit_code(), 2);
    let mut other = small_static();
    other.time.tau = 1e-2;
    assert!(Simulation::load_checkpoint(other, &path).is_err());
}

#[test]
fn truncated_checkpoint_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.bin");
    let mut sim = Simulation::new(small_static()).unwrap();
    sim.step().unwrap();
    sim.save_checkpoint(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    let err = Simulation::load_checkpoint(small_static(), &path).err().expect("truncated file must fail");
    assert_eq!(err.exit_code(), 5);
}
