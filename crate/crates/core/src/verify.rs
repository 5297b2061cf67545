//! The invariant and identity suite behind `pmlde verify`.
//!
//! Each check runs a small self-contained experiment and reports measured
//! values next to pinned thresholds.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amr::{AmrSettings, Patch};
use crate::config::RunConfig;
use crate::convergence;
use crate::driver::Simulation;
use crate::energy::{fourfield_balance, step_balance};
use crate::geometry::{Body, EmbeddingField, RigidMotion, Scene, Shape};
use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::ops;
use crate::pml::{PmlCoefficients, PmlLayout};
use crate::presets;
use crate::solver::SolverSettings;
use crate::stepper::{
    averaged_source, bootstrap_first_step, cn_step_fourfield, constraint_residual, default_eta_d, leapfrog_step_fixed, pml_de_step_hard,
    pml_de_step_soft, reconstruct_q_chi, BoundaryKind, FourFieldState, ModelParams, SourceSpec, StepContext, WaveState,
};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    AtMost,
    AtLeast,
}

/// One measured quantity against its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub label: String,
    pub value: f64,
    pub threshold: f64,
    pub cmp: Cmp,
}

impl Part {
    pub fn at_most(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { label: label.into(), value, threshold, cmp: Cmp::AtMost }
    }

    pub fn at_least(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { label: label.into(), value, threshold, cmp: Cmp::AtLeast }
    }

    pub fn passed(&self) -> bool {
        match self.cmp {
            Cmp::AtMost => self.value <= self.threshold,
            Cmp::AtLeast => self.value >= self.threshold,
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.cmp {
            Cmp::AtMost => "<=",
            Cmp::AtLeast => ">=",
        };
        let mark = if self.passed() { "ok" } else { "FAIL" };
        write!(f, "{} = {:.3e} {op} {:.1e} [{mark}]", self.label, self.value, self.threshold)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub parts: Vec<Part>,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(Part::passed)
    }

    pub fn part(&self, label: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.label == label)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "[{mark}] {:>2} {} ({:.1} s)", self.id, self.name, self.seconds)?;
        for p in &self.parts {
            write!(f, "\n       {p}")?;
        }
        Ok(())
    }
}

fn timed(id: u8, name: &'static str, f: impl FnOnce() -> Result<Vec<Part>>) -> Result<Check> {
    let t0 = Instant::now();
    let parts = f()?;
    Ok(Check { id, name, parts, seconds: t0.elapsed().as_secs_f64() })
}

fn random_cells(g: &StaggeredGrid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CellField {
    CellField { nx: g.nx, ny: g.ny, data: (0..g.n_cells()).map(|_| rng.gen_range(lo..hi)).collect() }
}

fn random_edges(g: &StaggeredGrid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> EdgeField {
    let mut e = EdgeField::zeros(g);
    for v in e.x.iter_mut().chain(e.y.iter_mut()) {
        *v = rng.gen_range(lo..hi);
    }
    e
}

fn gaussian(x0: f64, y0: f64, decay: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| (-decay * ((x - x0).powi(2) + (y - y0).powi(2))).exp()
}

fn params(c: f64, tau: f64, eps: f64, bc: BoundaryKind) -> ModelParams {
    ModelParams { c, tau, eta_d: default_eta_d(eps, c), alpha: 10.0, beta: 100.0, psi_hat: 0.5, eta_n: 1.0, bc }
}

/// A square PML box `(-(a+l), a+l)^2` at `n x n` with its sampled coefficients.
fn pml_box(a: f64, l: f64, n: usize, c: f64) -> Result<(PmlLayout, StaggeredGrid, PmlCoefficients)> {
    let layout = PmlLayout::with_reflection(a, a, l, l, c, 1e-4);
    let ((x0, x1), (y0, y1)) = layout.domain();
    let g = StaggeredGrid::new(n, n, (x0, x1), (y0, y1))?;
    let coeffs = PmlCoefficients::sample(&layout, &g)?;
    Ok((layout, g, coeffs))
}

fn norm_cell(g: &StaggeredGrid, u: &[f64]) -> f64 {
    ops::inner_cell(g, u, u, None).sqrt()
}

fn norm_edge(g: &StaggeredGrid, v: &EdgeField) -> f64 {
    ops::inner_edge(g, v, v, None).sqrt()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Criterion 1: summation by parts on random weighted triples.
pub fn sbp_exactness(seed: u64) -> Result<Check> {
    timed(1, "SBP exactness", || {
        let g = StaggeredGrid::new(64, 64, (-1.0, 1.0), (-1.0, 1.0))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let omega = random_edges(&g, &mut rng, 0.1, 2.0);
            let u = random_cells(&g, &mut rng, -1.0, 1.0);
            let v = random_edges(&g, &mut rng, -1.0, 1.0);
            let res = ops::sbp_residual(&g, Some(&omega), &u, &v);
            let gu = ops::grad_plus(&g, &u);
            let nv = ops::inner_edge(&g, &v, &v, Some(&omega)).sqrt();
            let ngu = ops::inner_edge(&g, &gu, &gu, Some(&omega)).sqrt();
            let dv = ops::div_minus_weighted(&g, Some(&omega), &v);
            let pair = ops::inner_cell(&g, &dv.data, &u.data, None).abs();
            worst = worst.max(res.abs() / (nv * ngu + pair));
        }
        Ok(vec![Part::at_most("scaled residual", worst, 1e-12)])
    })
}

/// Criterion 2: the algebraic identities of the damping coefficients on random layouts.
pub fn coefficient_identities(seed: u64) -> Result<Check> {
    timed(2, "coefficient identities", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let (a1, a2) = (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0));
            let (l1, l2) = (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0));
            let c = rng.gen_range(0.5..10.0);
            let refl = 10f64.powf(rng.gen_range(-8.0..-2.0));
            let layout = PmlLayout::with_reflection(a1, a2, l1, l2, c, refl);
            let ((x0, x1), (y0, y1)) = layout.domain();
            let g = StaggeredGrid::new(rng.gen_range(8..48), rng.gen_range(8..48), (x0, x1), (y0, y1))?;
            worst = worst.max(PmlCoefficients::sample(&layout, &g)?.identity_residuals().max());
        }
        Ok(vec![Part::at_most("max relative identity residual", worst, 1e-13)])
    })
}

fn uniform_ctx_parts(n: usize, xi: (f64, f64), tau: f64) -> Result<(StaggeredGrid, PmlCoefficients, ModelParams)> {
    let g = StaggeredGrid::new(n, n, (-1.0, 1.0), (-1.0, 1.0))?;
    let coeffs = PmlCoefficients::uniform(&g, xi.0, xi.1);
    Ok((g, coeffs, params(1.0, tau, 1.0, BoundaryKind::Soft)))
}

fn fourfield_norm(g: &StaggeredGrid, s: &FourFieldState) -> f64 {
    (norm_cell(g, &s.p.data).powi(2) + norm_cell(g, &s.q.data).powi(2) + norm_edge(g, &s.chi).powi(2) + norm_edge(g, &s.lambda).powi(2))
        .sqrt()
}

/// Criterion 3: the constraint residual of the four-field scheme under uniform damping.
pub fn constraint_decay(seed: u64) -> Result<Check> {
    timed(3, "four-field constraint decay", || {
        let (xi1, xi2) = (0.8, 0.3);
        let (g, coeffs, prm) = uniform_ctx_parts(16, (xi1, xi2), 0.05)?;
        let solver = SolverSettings::with_tol(1e-12);
        let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
        let p0 = CellField::from_fn(&g, gaussian(0.1, -0.2, 8.0));
        let v0 = CellField::from_fn(&g, gaussian(-0.3, 0.2, 5.0));

        let mut s = FourFieldState::from_pressure(&g, &p0, &v0, &coeffs.cell.a, prm.c);
        let mut consistent = 0.0f64;
        for _ in 0..50 {
            s = cn_step_fourfield(&ctx, &s, None)?.state;
            let r = constraint_residual(&g, &s, prm.c);
            consistent = consistent.max(norm_edge(&g, &r) / fourfield_norm(&g, &s));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = FourFieldState::from_pressure(&g, &p0, &v0, &coeffs.cell.a, prm.c);
        let kick = random_edges(&g, &mut rng, -1.0, 1.0);
        s.chi = s.chi.zip_map(&kick, |a, b| a + b);
        let a = xi1 + xi2;
        let factor = (1.0 - 0.5 * a * prm.tau) / (1.0 + 0.5 * a * prm.tau);
        let mut r = constraint_residual(&g, &s, prm.c);
        let mut nodewise = 0.0f64;
        for _ in 0..50 {
            s = cn_step_fourfield(&ctx, &s, None)?.state;
            let rn = constraint_residual(&g, &s, prm.c);
            let scale = r.max_abs();
            let dev = rn.zip_map(&r, |new, old| new - factor * old).max_abs();
            nodewise = nodewise.max(dev / scale);
            r = rn;
        }
        Ok(vec![
            Part::at_most("max |r^n| / |Phi^n| from consistent data", consistent, 1e-12),
            Part::at_most("nodewise decay factor deviation", nodewise, 1e-12),
        ])
    })
}

/// Criterion 4: four-field Crank-Nicolson against the two-field leapfrog with reconstruction.
pub fn scheme_equivalence() -> Result<Check> {
    timed(4, "four-field / two-field equivalence", || {
        let (g, coeffs, prm) = uniform_ctx_parts(32, (0.6, 0.25), 0.02)?;
        let solver = SolverSettings::with_tol(1e-14);
        let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
        let p0 = CellField::from_fn(&g, gaussian(0.2, 0.1, 10.0));
        let v0 = CellField::zeros(&g);
        let mut cn = FourFieldState::from_pressure(&g, &p0, &v0, &coeffs.cell.a, prm.c);
        let first = cn_step_fourfield(&ctx, &cn, None)?.state;
        let mut lf = WaveState {
            p_prev: p0.clone(),
            p_curr: first.p.clone(),
            lambda_prev: cn.lambda.clone(),
            lambda_curr: first.lambda.clone(),
            t: prm.tau,
            n: 1,
        };
        cn = first;
        let (mut dp, mut dqchi) = (0.0f64, 0.0f64);
        for _ in 1..200 {
            let next = cn_step_fourfield(&ctx, &cn, None)?.state;
            lf = leapfrog_step_fixed(&ctx, &lf, None)?.state;
            dp = dp.max(max_diff(&lf.p_curr.data, &next.p.data) / max_abs(&next.p.data));
            let (_, q1, _, chi1) = reconstruct_q_chi(&g, (&lf.p_prev, &lf.p_curr), (&lf.lambda_prev, &lf.lambda_curr), &coeffs, &prm);
            let dq = max_diff(&q1.data, &next.q.data) / max_abs(&next.q.data);
            let dchi = chi1.zip_map(&next.chi, |a, b| a - b).max_abs() / next.chi.max_abs();
            dqchi = dqchi.max(dq).max(dchi);
            cn = next;
        }
        Ok(vec![
            Part::at_most("max relative p difference", dp, 1e-10),
            Part::at_most("max relative reconstructed (q, chi) difference", dqchi, 1e-10),
        ])
    })
}

/// Worst per-step relative residuals `(uncorrected, commutator-corrected)` of an embedded run.
#[allow(clippy::too_many_arguments)]
fn embedded_balance(
    g: &StaggeredGrid,
    coeffs: &PmlCoefficients,
    prm: &ModelParams,
    scene: &Scene,
    p0: &CellField,
    source: Option<&SourceSpec>,
    steps: usize,
    mut on_step: impl FnMut(&crate::energy::StepBalance),
) -> Result<(f64, f64)> {
    let solver = SolverSettings::with_tol(1e-12);
    let ctx = StepContext { grid: g, coeffs, params: prm, solver: &solver };
    let v0 = CellField::zeros(g);
    let e0 = scene.sample(g, 0.0, Some(coeffs))?;
    let f0 = source.map(|s| crate::stepper::eval_source(s, g, prm.c, 0.0));
    let mut st = bootstrap_first_step(&ctx, p0, &v0, &e0, f0.as_ref());
    let mut ecur = scene.sample(g, st.t, Some(coeffs))?;
    let motion = scene.body.as_ref().map_or_else(RigidMotion::stationary, |b| b.motion);
    let (mut raw, mut corr) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        let en = scene.sample(g, st.t + prm.tau, Some(coeffs))?;
        let f = source.map(|s| averaged_source(s, g, prm.c, st.t, prm.tau));
        let fd = f.as_ref().map(|f| f.data.as_slice());
        let next = match (scene.body.is_some(), prm.bc) {
            (false, _) => leapfrog_step_fixed(&ctx, &st, fd)?.state,
            (true, BoundaryKind::Soft) => pml_de_step_soft(&ctx, &st, &en, fd, None)?.state,
            (true, BoundaryKind::Hard) => pml_de_step_hard(&ctx, &st, &en, &motion, fd, None)?.state,
        };
        let b = step_balance(g, &st, &next, &ecur, &en, coeffs, prm, fd);
        raw = raw.max(b.relative(prm.tau));
        corr = corr.max(b.relative_corrected(prm.tau));
        on_step(&b);
        st = next;
        ecur = en;
    }
    Ok((raw, corr))
}

fn scene(shape: Shape, velocity: [f64; 2], eps: f64) -> Scene {
    Scene { body: Some(Body { shape, motion: RigidMotion::uniform(velocity) }), eps }
}

/// Criterion 5: discrete energy identities of the sound-soft schemes, 128^2, 100 steps each.
pub fn energy_identities() -> Result<Check> {
    timed(5, "discrete energy identities", || {
        let tol = 1e-10;
        let mut parts = Vec::new();

        // (i) the pulse enters the graded layer within the run.
        let (_, g, coeffs) = pml_box(1.0, 1.0, 128, 1.0)?;
        let prm = params(1.0, 1e-2, 1.0, BoundaryKind::Soft);
        let solver = SolverSettings::with_tol(1e-12);
        let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
        let p0 = CellField::from_fn(&g, gaussian(0.5, 0.0, 20.0));
        let mut s = FourFieldState::from_pressure(&g, &p0, &CellField::zeros(&g), &coeffs.cell.a, prm.c);
        let mut cn = 0.0f64;
        for _ in 0..100 {
            let n = cn_step_fourfield(&ctx, &s, None)?.state;
            cn = cn.max(fourfield_balance(&g, &s, &n, &coeffs, prm.tau, None).relative(prm.tau));
            s = n;
        }
        parts.push(Part::at_most("(i) four-field CN, PML", cn, tol));
        let (raw, corr) = embedded_balance(&g, &coeffs, &prm, &Scene::empty(), &p0, None, 100, |_| {})?;
        parts.push(Part::at_most("(i) two-field leapfrog, PML", raw, tol));
        parts.push(Part::at_most("(i) two-field leapfrog, PML, with commutator term", corr, tol));

        // (ii)-(iv) fields stay in the undamped region.
        let eps = 0.05;
        let (_, g, coeffs) = pml_box(3.0, 1.0, 128, 1.0)?;
        let p0 = CellField::from_fn(&g, gaussian(-0.5, 0.0, 20.0));
        let src = SourceSpec { center: [-0.5, 0.5], eta: 0.1, w: 10.0, sigma: 1.0, t0: 0.0 };
        let circle = Shape::Circle { center: [0.6, 0.0], radius: 0.4 };
        let star = Shape::Star { center: [0.6, 0.0], base_radius: 0.4, amplitude: 0.1, lobes: 5 };
        let prm = params(1.0, 1e-2, eps, BoundaryKind::Soft);
        let cases = [
            ("(ii) static circle", scene(circle.clone(), [0.0, 0.0], eps), None),
            ("(iii) moving circle, forced", scene(circle, [0.5, 0.0], eps), Some(&src)),
            ("(iv) moving star, forced", scene(star, [0.4, 0.3], eps), Some(&src)),
        ];
        for (label, sc, src) in cases {
            let (raw, _) = embedded_balance(&g, &coeffs, &prm, &sc, &p0, src, 100, |_| {})?;
            parts.push(Part::at_most(label, raw, tol));
        }
        Ok(parts)
    })
}

/// Criterion 6: static geometry has no remainder and the energy never grows without forcing.
pub fn static_dissipation() -> Result<Check> {
    timed(6, "static remainder and monotone energy", || {
        let eps = 0.05;
        let mut parts = Vec::new();
        let runs = [("undamped region", 3.0, 100usize), ("pulse crossing the layer", 1.0, 200)];
        for (label, a, steps) in runs {
            let (_, g, coeffs) = pml_box(a, 1.0, 128, 1.0)?;
            let p0 = CellField::from_fn(&g, gaussian(-0.5, 0.0, 20.0));
            let sc = scene(Shape::Circle { center: [0.4, 0.0], radius: 0.3 }, [0.0, 0.0], eps);
            let prm = params(1.0, 1e-2, eps, BoundaryKind::Soft);
            let (mut rem, mut growth) = (0.0f64, f64::NEG_INFINITY);
            embedded_balance(&g, &coeffs, &prm, &sc, &p0, None, steps, |b| {
                let e = b.e_prev.max(b.e_next);
                rem = rem.max(b.remainder.abs() * prm.tau / e);
                growth = growth.max((b.e_next - b.e_prev) / e);
            })?;
            parts.push(Part::at_most(format!("tau |R| / E, {label}"), rem, 1e-12));
            parts.push(Part::at_most(format!("max relative energy growth, {label}"), growth, 1e-14));
        }
        Ok(parts)
    })
}

/// Relative drift of the embedded and physical energies over `[tau, t_window]`.
pub fn early_window_drift(config: RunConfig, t_window: f64) -> Result<(f64, f64)> {
    let mut sim = Simulation::new(config)?;
    let first = sim.step()?;
    let (mut de, mut dp) = (0.0f64, 0.0f64);
    while sim.time() < t_window - 1e-9 {
        let row = sim.step()?;
        de = de.max((row.e_embed - first.e_embed).abs() / first.e_embed);
        dp = dp.max((row.e_phys_level0 - first.e_phys_level0).abs() / first.e_phys_level0);
    }
    Ok((de, dp))
}

/// End of the early window for the scaled first example.
pub const EARLY_WINDOW: f64 = 1.0;

/// Criterion 7: conservation before the pulse meets the obstacle or the layer.
pub fn early_window() -> Result<Check> {
    timed(7, "early-window conservation", || {
        let mut parts = Vec::new();
        for (tol, bound) in [(1e-12, 1e-8), (1e-14, 1e-11)] {
            let mut cfg = presets::example_4_1();
            cfg.solver.tol = tol;
            let (de, dp) = early_window_drift(cfg, EARLY_WINDOW)?;
            parts.push(Part::at_most(format!("E_embed drift, tol {tol:.0e}"), de, bound));
            parts.push(Part::at_most(format!("E_phys drift, tol {tol:.0e}"), dp, bound));
        }
        Ok(parts)
    })
}

/// Peak and final physical energy of a free pulse run to `t_end`.
pub fn absorption_run(mut config: RunConfig, t_end: f64) -> Result<(f64, f64)> {
    config.time.t_end = t_end;
    let mut sim = Simulation::new(config)?;
    let mut peak = 0.0f64;
    let mut last = 0.0;
    while !sim.is_done() {
        last = sim.step()?.e_phys_level0;
        peak = peak.max(last);
    }
    Ok((peak, last))
}

/// Time after which the free pulse of the first example has left the physical box.
pub const EXIT_TIME: f64 = 26.0;

/// Criterion 8: the layer absorbs the outgoing pulse.
pub fn pml_absorption() -> Result<Check> {
    timed(8, "PML absorption", || {
        let (peak, last) = absorption_run(presets::example_4_1_free(), EXIT_TIME)?;
        Ok(vec![Part::at_most("remaining / peak E_phys", last / peak, 1e-3)])
    })
}

/// Maximum of `|p|` on a circle, bilinear in the cell-centred data.
pub fn max_on_circle(g: &StaggeredGrid, p: &CellField, center: [f64; 2], radius: f64, samples: usize) -> f64 {
    let mut m = 0.0f64;
    for k in 0..samples {
        let th = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let (x, y) = (center[0] + radius * th.cos(), center[1] + radius * th.sin());
        m = m.max(bilinear(g, p, x, y).abs());
    }
    m
}

fn bilinear(g: &StaggeredGrid, p: &CellField, x: f64, y: f64) -> f64 {
    let s = ((x - g.x0) / g.hx - 0.5).clamp(0.0, (g.nx - 1) as f64);
    let t = ((y - g.y0) / g.hy - 0.5).clamp(0.0, (g.ny - 1) as f64);
    let (i, j) = ((s as usize).min(g.nx - 2), (t as usize).min(g.ny - 2));
    let (fx, fy) = (s - i as f64, t - j as f64);
    (1.0 - fx) * (1.0 - fy) * p.get(i, j)
        + fx * (1.0 - fy) * p.get(i + 1, j)
        + (1.0 - fx) * fy * p.get(i, j + 1)
        + fx * fy * p.get(i + 1, j + 1)
}

/// Interface traces of the static sound-soft circle for each `eps`.
pub fn soft_traces(eps_list: &[f64]) -> Result<Vec<f64>> {
    soft_traces_with(eps_list, default_eta_d(1.0, 1.0), 256, 100)
}

/// As [`soft_traces`] with penalty scale `eta_hat` (`eta_d = eta_hat eps`), grid `n` and step count.
pub fn soft_traces_with(eps_list: &[f64], eta_hat: f64, n: usize, steps: u64) -> Result<Vec<f64>> {
    let (_, g, coeffs) = pml_box(2.0, 1.0, n, 1.0)?;
    let (center, radius) = ([0.0, 0.0], 0.5);
    let p0 = CellField::from_fn(&g, gaussian(1.2, 0.0, 40.0));
    let solver = SolverSettings::with_tol(1e-12);
    let mut out = Vec::new();
    for &eps in eps_list {
        let prm = ModelParams { eta_d: eta_hat * eps, ..params(1.0, 1e-2, eps, BoundaryKind::Soft) };
        let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
        let sc = scene(Shape::Circle { center, radius }, [0.0, 0.0], eps);
        let emb = sc.sample(&g, 0.0, Some(&coeffs))?;
        let mut st = bootstrap_first_step(&ctx, &p0, &CellField::zeros(&g), &emb, None);
        while st.n < steps {
            st = pml_de_step_soft(&ctx, &st, &emb, None, None)?.state;
        }
        out.push(max_on_circle(&g, &st.p_curr, center, radius, 512));
    }
    Ok(out)
}

/// Criterion 9: the interface trace tends to zero with the interface thickness.
pub fn soft_limit() -> Result<Check> {
    timed(9, "sound-soft limit in eps", || {
        let eps = [0.2, 0.1, 0.05];
        let tr = soft_traces(&eps)?;
        let mut parts = Vec::new();
        for (k, e) in eps.iter().enumerate() {
            log::info!("eps = {e}: max |p| on the interface = {:.4e}", tr[k]);
        }
        for k in 1..tr.len() {
            parts.push(Part::at_most(format!("trace ratio eps {} / {}", eps[k], eps[k - 1]), tr[k] / tr[k - 1], 0.7));
        }
        Ok(parts)
    })
}

/// Criterion 10: observed orders in time and space.
pub fn convergence_orders() -> Result<Check> {
    timed(10, "convergence orders", || {
        let s = convergence::study()?;
        Ok(vec![Part::at_least("order in tau", s.tau_order, 1.8), Part::at_least("order in h", s.h_order, 1.8)])
    })
}

/// Uniform single-level run of `cfg` to step `steps`, returning the level-0 pressure.
fn uniform_run(cfg: RunConfig, steps: u64) -> Result<(StaggeredGrid, CellField)> {
    let mut sim = Simulation::new(cfg)?;
    while sim.step_index() < steps {
        sim.step()?;
    }
    let lev = &sim.hierarchy.levels[0];
    Ok((lev.global, lev.state.p_curr.clone()))
}

fn relative_l2_physical(g: &StaggeredGrid, layout: &PmlLayout, a: &CellField, b: &CellField) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.cell_center(i, j);
            if layout.in_physical(x, y) {
                let k = g.cell(i, j);
                num += (a.data[k] - b.data[k]).powi(2);
                den += b.data[k].powi(2);
            }
        }
    }
    (num / den).sqrt()
}

/// Degenerate full-coverage hierarchy against a uniform fine run.
pub fn amr_degenerate_defect(steps: u64) -> Result<f64> {
    let mut coarse = presets::example_4_1();
    coarse.grid.nx = 32;
    coarse.grid.ny = 32;
    coarse.time.tau = 0.1;
    coarse.amr = AmrSettings { enabled: true, max_level: 1, fixed_patches: Some(vec![Patch::new(0, 0, 64, 64)]), ..AmrSettings::default() };
    let mut fine = coarse.clone();
    fine.grid.nx = 64;
    fine.grid.ny = 64;
    fine.amr = AmrSettings::default();
    let mut sim = Simulation::new(coarse)?;
    while sim.step_index() < steps {
        sim.step()?;
    }
    let lev = &sim.hierarchy.levels[1];
    let (_, pf) = uniform_run(fine, steps)?;
    Ok(max_diff(&lev.state.p_curr.data, &pf.data) / max_abs(&pf.data))
}

/// Adaptive run of the first example against the uniform run at the finest resolution.
pub fn amr_adaptive_defect(t: f64) -> Result<(f64, usize)> {
    let mut cfg = presets::example_4_1();
    cfg.amr = AmrSettings { enabled: true, max_level: 1, ..AmrSettings::default() };
    let steps = (t / cfg.time.tau).round() as u64;
    let mut fine = cfg.clone();
    fine.grid.nx *= 2;
    fine.grid.ny *= 2;
    fine.amr = AmrSettings::default();
    let layout = cfg.layout();
    let mut sim = Simulation::new(cfg)?;
    let mut max_levels = 1;
    while sim.step_index() < steps {
        sim.step()?;
        max_levels = max_levels.max(sim.hierarchy.n_levels());
    }
    let (gf, pa) = sim.hierarchy.composite_pressure(1);
    let (_, pf) = uniform_run(fine, steps)?;
    Ok((relative_l2_physical(&gf, &layout, &pa, &pf), max_levels))
}

/// Criterion 11: refinement consistency.
pub fn amr_consistency() -> Result<Check> {
    timed(11, "AMR consistency", || {
        let d = amr_degenerate_defect(20)?;
        let (a, levels) = amr_adaptive_defect(1.0)?;
        Ok(vec![
            Part::at_most("full-coverage hierarchy vs uniform fine", d, 1e-8),
            Part::at_most("adaptive vs uniform fine, relative L2 at t = 1", a, 5e-2),
            Part::at_least("levels used by the adaptive run", levels as f64, 2.0),
        ])
    })
}

/// Criterion 12: without an obstacle the three two-field steppers coincide.
pub fn trivial_embedding() -> Result<Check> {
    timed(12, "hard/soft degeneracy without obstacle", || {
        let (_, g, coeffs) = pml_box(1.0, 0.5, 64, 1.0)?;
        let solver = SolverSettings::with_tol(1e-13);
        let p0 = CellField::from_fn(&g, gaussian(0.3, -0.2, 15.0));
        let v0 = CellField::zeros(&g);
        let emb = EmbeddingField::empty(&g, 0.0);
        let run = |bc: BoundaryKind, which: u8| -> Result<Vec<CellField>> {
            let prm = params(1.0, 1e-2, 0.05, bc);
            let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
            let mut st = bootstrap_first_step(&ctx, &p0, &v0, &emb, None);
            let mut traj = vec![st.p_curr.clone()];
            for _ in 0..50 {
                st = match which {
                    0 => leapfrog_step_fixed(&ctx, &st, None)?.state,
                    1 => pml_de_step_soft(&ctx, &st, &emb, None, None)?.state,
                    _ => pml_de_step_hard(&ctx, &st, &emb, &RigidMotion::stationary(), None, None)?.state,
                };
                traj.push(st.p_curr.clone());
            }
            Ok(traj)
        };
        let fixed = run(BoundaryKind::Soft, 0)?;
        let soft = run(BoundaryKind::Soft, 1)?;
        let hard = run(BoundaryKind::Hard, 2)?;
        let dev =
            |other: &[CellField]| fixed.iter().zip(other).map(|(a, b)| max_diff(&a.data, &b.data) / max_abs(&a.data)).fold(0.0, f64::max);
        Ok(vec![Part::at_most("soft vs fixed", dev(&soft), 1e-12), Part::at_most("hard vs fixed", dev(&hard), 1e-12)])
    })
}

/// Runs the whole suite in criterion order.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        sbp_exactness(seed)?,
        coefficient_identities(seed)?,
        constraint_decay(seed)?,
        scheme_equivalence()?,
        energy_identities()?,
        static_dissipation()?,
        early_window()?,
        pml_absorption()?,
        soft_limit()?,
        convergence_orders()?,
        amr_consistency()?,
        trivial_embedding()?,
    ])
}
