use pmlde::amr::{
    prolong_cells_window, restrict_cells, restrict_edges, AdvanceInputs, AmrSettings, LevelHierarchy, Patch, SensorThresholds, RATIO,
};
use pmlde::geometry::{Body, RigidMotion, Scene, Shape};
use pmlde::grid::{CellField, EdgeField, StaggeredGrid};
use pmlde::pml::{PmlCoefficients, PmlLayout};
use pmlde::solver::SolverSettings;
use pmlde::stepper::{bootstrap_first_step, pml_de_step_soft, BoundaryKind, ModelParams, StepContext, WaveState};

fn layout() -> PmlLayout {
    PmlLayout::with_reflection(2.0, 2.0, 1.0, 1.0, 1.0, 1e-4)
}

fn grid(n: usize) -> StaggeredGrid {
    StaggeredGrid::new(n, n, (-3.0, 3.0), (-3.0, 3.0)).unwrap()
}

fn params(tau: f64) -> ModelParams {
    ModelParams { c: 1.0, tau, eta_d: 0.05, alpha: 10.0, beta: 100.0, psi_hat: 0.5, eta_n: 1.0, bc: BoundaryKind::Soft }
}

fn scene(center: [f64; 2]) -> Scene {
    Scene { body: Some(Body { shape: Shape::Circle { center, radius: 0.5 }, motion: RigidMotion::stationary() }), eps: 0.1 }
}

fn pulse(x: f64, y: f64) -> f64 {
    (-8.0 * ((x + 0.8).powi(2) + y * y)).exp()
}

fn zero(_: f64, _: f64) -> f64 {
    0.0
}

fn adaptive(tile: usize) -> AmrSettings {
    AmrSettings {
        enabled: true,
        max_level: 1,
        tile,
        thresholds: SensorThresholds { tau_sol: 0.05, buffer_cells: 2, regrid_interval: 5, ..Default::default() },
        ..Default::default()
    }
}

fn inputs<'a>(p: &'a ModelParams, s: &'a SolverSettings, sc: &'a Scene) -> AdvanceInputs<'a> {
    AdvanceInputs { params: p, solver: s, scene: sc, source: None, balance: false }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn single_level_matches_plain_stepper() {
    let g = grid(24);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.5, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let mut h = LevelHierarchy::new(g, layout(), AmrSettings::default(), &inp, &pulse, &zero).unwrap();
    let coeffs = PmlCoefficients::sample(&layout(), &g).unwrap();
    let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &p, solver: &s };
    let emb0 = sc.sample(&g, 0.0, Some(&coeffs)).unwrap();
    let mut st = bootstrap_first_step(&ctx, &CellField::from_fn(&g, pulse), &CellField::zeros(&g), &emb0, None);
    for _ in 0..5 {
        h.advance(&inp).unwrap();
        let emb = sc.sample(&g, st.t + p.tau, Some(&coeffs)).unwrap();
        st = pml_de_step_soft(&ctx, &st, &emb, None, None).unwrap().state;
    }
    assert_eq!(h.levels[0].state.p_curr.data, st.p_curr.data);
    assert_eq!(h.levels[0].state.lambda_curr, st.lambda_curr);
}

#[test]
fn full_coverage_level_matches_uniform_fine_run() {
    let g = grid(16);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.5, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let full = AmrSettings { enabled: true, max_level: 1, fixed_patches: Some(vec![Patch::new(0, 0, 32, 32)]), ..Default::default() };
    let mut h = LevelHierarchy::new(g, layout(), full, &inp, &pulse, &zero).unwrap();
    let mut fine = LevelHierarchy::new(g.refined(2), layout(), AmrSettings::default(), &inp, &pulse, &zero).unwrap();
    for _ in 0..10 {
        h.advance(&inp).unwrap();
        fine.advance(&inp).unwrap();
    }
    let (_, comp) = h.composite_pressure(1);
    let err = rel_l2(&comp.data, &fine.levels[0].state.p_curr.data);
    assert!(err < 1e-8, "relative difference {err}");
    assert!(h.check_nesting());
}

#[test]
fn infinite_thresholds_collapse_to_base_level() {
    let g = grid(24);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.5, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let mut amr = adaptive(1);
    amr.thresholds.tau_emb = f64::INFINITY;
    amr.thresholds.tau_pml = f64::INFINITY;
    amr.thresholds.tau_sol = f64::INFINITY;
    let h = LevelHierarchy::new(g, layout(), amr, &inp, &pulse, &zero).unwrap();
    assert_eq!(h.n_levels(), 1);
}

#[test]
fn adaptive_run_refines_and_stays_nested() {
    let g = grid(32);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.5, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let mut amr = adaptive(2);
    amr.max_level = 2;
    let mut h = LevelHierarchy::new(g, layout(), amr, &inp, &pulse, &zero).unwrap();
    assert!(h.n_levels() >= 2);
    assert!(h.check_nesting());
    for n in 0..10 {
        if n % 5 == 0 {
            h.regrid(&sc).unwrap();
            assert!(h.check_nesting());
        }
        h.advance(&inp).unwrap();
        assert!(h.levels.iter().all(|l| l.state.is_finite()));
    }
}

#[test]
fn unchanged_sensors_keep_data_bit_identical() {
    let g = grid(32);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.5, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let mut h = LevelHierarchy::new(g, layout(), adaptive(1), &inp, &pulse, &zero).unwrap();
    h.advance(&inp).unwrap();
    h.regrid(&sc).unwrap();
    let snapshot = h.levels.clone();
    let changed = h.regrid(&sc).unwrap();
    assert!(!changed);
    assert_eq!(h.levels.len(), snapshot.len());
    for (a, b) in h.levels.iter().zip(&snapshot) {
        assert_eq!(a.patches, b.patches);
        assert_eq!(a.state.p_curr.data, b.state.p_curr.data);
        assert_eq!(a.state.p_prev.data, b.state.p_prev.data);
        assert_eq!(a.state.lambda_curr, b.state.lambda_curr);
    }
}

#[test]
fn moved_object_preserves_overlap_values() {
    let g = grid(32);
    let (p, s) = (params(0.05), SolverSettings::default());
    let mut amr = adaptive(1);
    amr.thresholds.tau_sol = f64::INFINITY;
    let sc0 = scene([0.0, 0.0]);
    let inp = inputs(&p, &s, &sc0);
    let mut h = LevelHierarchy::new(g, layout(), amr, &inp, &pulse, &zero).unwrap();
    h.advance(&inp).unwrap();
    let old = h.levels[1].clone();
    // shift by one coarse cell and refresh the level-0 embedding the sensors read
    let sc1 = scene([g.hx, 0.0]);
    h.levels[0].emb = sc1.sample(&g, h.time(), Some(&h.levels[0].coeffs)).unwrap();
    assert!(h.regrid(&sc1).unwrap());
    let new = &h.levels[1];
    assert_ne!(new.patches, old.patches);
    let mut overlap = 0;
    for j in 0..new.window.grid.ny {
        for i in 0..new.window.grid.nx {
            let k = j * new.window.grid.nx + i;
            let (gi, gj) = (i + new.window.oi, j + new.window.oj);
            if !new.valid[k] || !old.window.contains_global(gi, gj) {
                continue;
            }
            let ko = (gj - old.window.oj) * old.window.grid.nx + gi - old.window.oi;
            if old.valid[ko] {
                overlap += 1;
                assert_eq!(new.state.p_curr.data[k], old.state.p_curr.data[ko]);
                assert_eq!(new.state.p_prev.data[k], old.state.p_prev.data[ko]);
            }
        }
    }
    assert!(overlap > 0);
}

#[test]
fn fill_ghosts_equals_prolonged_parent() {
    let g = grid(32);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.0, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let mut amr = adaptive(1);
    amr.thresholds.tau_sol = f64::INFINITY;
    let mut h = LevelHierarchy::new(g, layout(), amr, &inp, &pulse, &zero).unwrap();
    h.advance(&inp).unwrap();
    h.fill_ghosts(1);
    let (parent, lev) = (&h.levels[0], &h.levels[1]);
    let oracle = prolong_cells_window(&parent.window, &parent.state.p_curr.data, &lev.window, RATIO);
    let mut ghosts = 0;
    for k in 0..lev.valid.len() {
        if !lev.valid[k] {
            ghosts += 1;
            assert_eq!(lev.state.p_curr.data[k], oracle[k]);
        }
    }
    assert!(ghosts > 0);
}

#[test]
fn abutting_patches_share_interface_values() {
    let g = grid(16);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), scene([0.0, 0.0]));
    let inp = inputs(&p, &s, &sc);
    let amr = AmrSettings {
        enabled: true,
        max_level: 1,
        fixed_patches: Some(vec![Patch::new(8, 8, 16, 24), Patch::new(16, 8, 24, 24)]),
        ..Default::default()
    };
    let mut h = LevelHierarchy::new(g, layout(), amr, &inp, &pulse, &zero).unwrap();
    h.advance(&inp).unwrap();
    h.fill_ghosts(1);
    let lev = &h.levels[1];
    // the column right of the first patch is interior to the second and is never overwritten
    let w = &lev.window;
    for gj in 8..24 {
        let k = (gj - w.oj) * w.grid.nx + 16 - w.oi;
        assert!(lev.valid[k]);
    }
    let mut one = LevelHierarchy::new(
        g,
        layout(),
        AmrSettings { enabled: true, max_level: 1, fixed_patches: Some(vec![Patch::new(8, 8, 24, 24)]), ..Default::default() },
        &inp,
        &pulse,
        &zero,
    )
    .unwrap();
    one.advance(&inp).unwrap();
    one.fill_ghosts(1);
    assert_eq!(one.levels[1].state.p_curr.data, lev.state.p_curr.data);
}

/// `|| R step_fine(u) - step_coarse(R u) || / || step_coarse(R u) ||` for one step without an obstacle.
fn restriction_defect(n: usize) -> f64 {
    let gc = grid(n);
    let gf = gc.refined(2);
    let (p, s, sc) = (params(0.05), SolverSettings::default(), Scene::empty());
    let step = |g: &StaggeredGrid, st: &WaveState| {
        let co = PmlCoefficients::sample(&layout(), g).unwrap();
        let ctx = StepContext { grid: g, coeffs: &co, params: &p, solver: &s };
        let emb = sc.sample(g, st.t + p.tau, Some(&co)).unwrap();
        pml_de_step_soft(&ctx, st, &emb, None, None).unwrap().state
    };
    let bump = |x: f64, y: f64| (-0.5 * (x * x + y * y)).exp();
    let fine = WaveState {
        p_prev: CellField::from_fn(&gf, bump),
        p_curr: CellField::from_fn(&gf, |x, y| 0.99 * bump(x, y)),
        lambda_prev: EdgeField::zeros(&gf),
        lambda_curr: EdgeField::zeros(&gf),
        t: 0.05,
        n: 1,
    };
    let coarse = WaveState {
        p_prev: restrict_cells(&fine.p_prev, 2),
        p_curr: restrict_cells(&fine.p_curr, 2),
        lambda_prev: restrict_edges(&fine.lambda_prev, 2),
        lambda_curr: restrict_edges(&fine.lambda_curr, 2),
        ..fine.clone()
    };
    let r = restrict_cells(&step(&gf, &fine).p_curr, 2);
    rel_l2(&r.data, &step(&gc, &coarse).p_curr.data)
}

#[test]
fn restricted_fine_step_tracks_coarse_step_at_second_order() {
    let (d16, d32) = (restriction_defect(16), restriction_defect(32));
    assert!(d16 < 1e-3, "defect {d16:.3e}");
    assert!(d16 / d32 > 3.0, "defects {d16:.3e} -> {d32:.3e}");
}
