use super::cluster::{erode, tag_and_cluster_aligned};
use super::sensors::compute_sensors;
use super::transfer::{prolong_cells_window, prolong_edges_window, Window};
use super::{AmrSettings, Patch, GHOST, RATIO};
use crate::energy::{energy_physical, step_balance, PhysRegion, StepBalance};
use crate::geometry::{EmbeddingField, RigidMotion, Scene};
use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::pml::{PmlCoefficients, PmlLayout};
use crate::solver::SolverSettings;
use crate::stepper::{
    averaged_source, bootstrap_first_step, eval_source, pml_de_step_hard, pml_de_step_soft, BoundaryKind, Constraint, ModelParams,
    SourceSpec, StepContext, WaveState,
};
use crate::Result;

/// One refinement level stored on a single window of its global index space.
#[derive(Clone, Debug)]
pub struct Level {
    /// Full-domain grid at this level's resolution.
    pub global: StaggeredGrid,
    pub window: Window,
    /// Patches in global level indices.
    pub patches: Vec<Patch>,
    /// Window-local mask of cells inside some patch.
    pub valid: Vec<bool>,
    pub coeffs: PmlCoefficients,
    pub state: WaveState,
    /// Embedding at `state.t`.
    pub emb: EmbeddingField,
}

impl Level {
    fn local(&self, gi: usize, gj: usize) -> Option<usize> {
        let w = &self.window;
        w.contains_global(gi, gj).then(|| (gj - w.oj) * w.grid.nx + gi - w.oi)
    }

    fn edge_masks(&self) -> (Vec<bool>, Vec<bool>) {
        let g = &self.window.grid;
        let v = &self.valid;
        let mut xe = Vec::with_capacity(g.n_xedges());
        for j in 0..g.ny {
            for i in 0..g.nx - 1 {
                xe.push(v[g.cell(i, j)] && v[g.cell(i + 1, j)]);
            }
        }
        let mut ye = Vec::with_capacity(g.n_yedges());
        for j in 0..g.ny - 1 {
            for i in 0..g.nx {
                ye.push(v[g.cell(i, j)] && v[g.cell(i, j + 1)]);
            }
        }
        (xe, ye)
    }

    fn ctx<'a>(&'a self, params: &'a ModelParams, solver: &'a SolverSettings) -> StepContext<'a> {
        StepContext { grid: &self.window.grid, coeffs: &self.coeffs, params, solver }
    }
}

/// Per-step inputs shared by every level.
#[derive(Clone, Copy, Debug)]
pub struct AdvanceInputs<'a> {
    pub params: &'a ModelParams,
    pub solver: &'a SolverSettings,
    pub scene: &'a Scene,
    pub source: Option<&'a SourceSpec>,
    /// Evaluate the level-0 energy balance of this step.
    pub balance: bool,
}

#[derive(Clone, Debug, Default)]
pub struct AdvanceReport {
    /// Solver iterations summed over levels.
    pub iterations: usize,
    pub balance: Option<StepBalance>,
}

/// Nested levels advanced with one global time step.
#[derive(Clone, Debug)]
pub struct LevelHierarchy {
    pub layout: PmlLayout,
    pub settings: AmrSettings,
    pub levels: Vec<Level>,
}

fn copy_where(dst: &mut [f64], src: &[f64], mask: &[bool]) {
    for ((d, s), m) in dst.iter_mut().zip(src).zip(mask) {
        if *m {
            *d = *s;
        }
    }
}

fn copy_edges_where(dst: &mut EdgeField, src: &EdgeField, mx: &[bool], my: &[bool]) {
    copy_where(&mut dst.x, &src.x, mx);
    copy_where(&mut dst.y, &src.y, my);
}

fn not(m: &[bool]) -> Vec<bool> {
    m.iter().map(|b| !b).collect()
}

fn motion_of(scene: &Scene) -> RigidMotion {
    scene.body.as_ref().map_or_else(RigidMotion::stationary, |b| b.motion)
}

impl LevelHierarchy {
    /// Builds the hierarchy at `t = 0` from analytic data and takes the Taylor start step on every level.
    pub fn new(
        base: StaggeredGrid,
        layout: PmlLayout,
        settings: AmrSettings,
        inputs: &AdvanceInputs,
        p0: &dyn Fn(f64, f64) -> f64,
        v0: &dyn Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        settings.validate()?;
        let coeffs = PmlCoefficients::sample(&layout, &base)?;
        let emb = inputs.scene.sample(&base, 0.0, Some(&coeffs))?;
        let full: Vec<Patch> = vec![Patch::new(0, 0, base.nx, base.ny)];
        let l0 = Level {
            global: base,
            window: Window::full(&base),
            patches: full,
            valid: vec![true; base.n_cells()],
            state: analytic_state(&base, p0),
            coeffs,
            emb,
        };
        let mut h = Self { layout, settings, levels: vec![l0] };
        if h.settings.enabled && h.settings.max_level > 0 {
            if let Some(fixed) = h.settings.fixed_patches.clone() {
                let lev = h.build_level(0, fixed, inputs.scene)?;
                h.levels.push(lev);
            } else {
                h.regrid(inputs.scene)?;
            }
            for lev in h.levels.iter_mut().skip(1) {
                lev.state = analytic_state(&lev.window.grid, p0);
            }
        }
        for l in 0..h.levels.len() {
            let lev = &h.levels[l];
            let g = lev.window.grid;
            let f0 = inputs.source.map(|s| eval_source(s, &g, inputs.params.c, 0.0));
            let v = CellField::from_fn(&g, v0);
            let p = lev.state.p_curr.clone();
            let mut st = bootstrap_first_step(&lev.ctx(inputs.params, inputs.solver), &p, &v, &lev.emb, f0.as_ref());
            if l > 0 {
                let parent = &h.levels[l - 1];
                let (cells, xe, ye) = h.ghost_masks(l);
                let pc = prolong_cells_window(&parent.window, &parent.state.p_curr.data, &lev.window, RATIO);
                copy_where(&mut st.p_curr.data, &pc, &cells);
                let lc = prolong_edges_window(&parent.window, &parent.state.lambda_curr, &lev.window, RATIO);
                copy_edges_where(&mut st.lambda_curr, &lc, &xe, &ye);
            }
            h.levels[l].state = st;
        }
        h.average_down();
        let tau = inputs.params.tau;
        for lev in h.levels.iter_mut() {
            lev.emb = inputs.scene.sample(&lev.window.grid, tau, Some(&lev.coeffs))?;
        }
        Ok(h)
    }

    pub fn base(&self) -> &StaggeredGrid {
        &self.levels[0].global
    }

    pub fn time(&self) -> f64 {
        self.levels[0].state.t
    }

    pub fn step_index(&self) -> u64 {
        self.levels[0].state.n
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Non-valid cells and edges of level `l`.
    fn ghost_masks(&self, l: usize) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
        let lev = &self.levels[l];
        let (xe, ye) = lev.edge_masks();
        (not(&lev.valid), not(&xe), not(&ye))
    }

    /// Window-local mask of level-`l` cells lying under a level-`l+1` patch.
    pub fn covered(&self, l: usize) -> Vec<bool> {
        let lev = &self.levels[l];
        let mut out = vec![false; lev.window.grid.n_cells()];
        if let Some(child) = self.levels.get(l + 1) {
            for p in &child.patches {
                for gj in p.j0 / RATIO..p.j1.div_ceil(RATIO) {
                    for gi in p.i0 / RATIO..p.i1.div_ceil(RATIO) {
                        if let Some(k) = lev.local(gi, gj) {
                            out[k] = true;
                        }
                    }
                }
            }
        }
        out
    }

    /// Overwrites non-valid data of level `l` with values prolonged from its parent.
    pub fn fill_ghosts(&mut self, l: usize) {
        if l == 0 {
            return;
        }
        let (cells, xe, ye) = self.ghost_masks(l);
        let (head, tail) = self.levels.split_at_mut(l);
        let parent = &head[l - 1];
        let lev = &mut tail[0];
        let (pw, cw) = (&parent.window, &lev.window);
        let ps = &parent.state;
        copy_where(&mut lev.state.p_prev.data, &prolong_cells_window(pw, &ps.p_prev.data, cw, RATIO), &cells);
        copy_where(&mut lev.state.p_curr.data, &prolong_cells_window(pw, &ps.p_curr.data, cw, RATIO), &cells);
        copy_edges_where(&mut lev.state.lambda_prev, &prolong_edges_window(pw, &ps.lambda_prev, cw, RATIO), &xe, &ye);
        copy_edges_where(&mut lev.state.lambda_curr, &prolong_edges_window(pw, &ps.lambda_curr, cw, RATIO), &xe, &ye);
    }

    /// Replaces covered coarse data by averages of the finer level, finest first.
    pub fn average_down(&mut self) {
        for l in (1..self.levels.len()).rev() {
            let (head, tail) = self.levels.split_at_mut(l);
            let parent = head.last_mut().unwrap();
            let child = &tail[0];
            average_level(parent, child);
        }
    }

    /// One step on every level, coarse to fine, followed by averaging down.
    pub fn advance(&mut self, inputs: &AdvanceInputs) -> Result<AdvanceReport> {
        let params = inputs.params;
        let tau = params.tau;
        let motion = motion_of(inputs.scene);
        let mut report = AdvanceReport::default();
        let mut parent_before: Option<WaveState> = None;
        for l in 0..self.levels.len() {
            if l > 0 {
                // ghosts of the old time levels come from the parent before it was advanced
                let saved = std::mem::replace(&mut self.levels[l - 1].state, parent_before.take().unwrap());
                self.fill_ghosts(l);
                self.levels[l - 1].state = saved;
            }
            let lev = &self.levels[l];
            let g = lev.window.grid;
            let t = lev.state.t;
            let emb_next = inputs.scene.sample(&g, t + tau, Some(&lev.coeffs))?;
            let forcing = inputs.source.map(|s| averaged_source(s, &g, params.c, t, tau));
            let fd = forcing.as_ref().map(|f| f.data.as_slice());
            let constraint = if l > 0 {
                let parent = &self.levels[l - 1];
                let values = prolong_cells_window(&parent.window, &parent.state.p_curr.data, &lev.window, RATIO);
                let fixed = not(&lev.valid);
                fixed.iter().any(|b| *b).then_some(Constraint { fixed, values })
            } else {
                None
            };
            let ctx = lev.ctx(params, inputs.solver);
            let out = match params.bc {
                BoundaryKind::Soft => pml_de_step_soft(&ctx, &lev.state, &emb_next, fd, constraint.as_ref())?,
                BoundaryKind::Hard => pml_de_step_hard(&ctx, &lev.state, &emb_next, &motion, fd, constraint.as_ref())?,
            };
            report.iterations += out.report.iterations;
            let mut next = out.state;
            if l > 0 {
                let (_, xe, ye) = self.ghost_masks(l);
                let parent = &self.levels[l - 1];
                let lc = prolong_edges_window(&parent.window, &parent.state.lambda_curr, &lev.window, RATIO);
                copy_edges_where(&mut next.lambda_curr, &lc, &xe, &ye);
            }
            if l == 0 && inputs.balance {
                report.balance = Some(step_balance(&g, &lev.state, &next, &lev.emb, &emb_next, &lev.coeffs, params, fd));
            }
            let lev = &mut self.levels[l];
            let before = std::mem::replace(&mut lev.state, next);
            lev.emb = emb_next;
            parent_before = Some(before);
        }
        self.average_down();
        Ok(report)
    }

    /// Rebuilds refined levels from the current sensors; returns whether the layout changed.
    pub fn regrid(&mut self, scene: &Scene) -> Result<bool> {
        if !self.settings.enabled || self.settings.fixed_patches.is_some() {
            return Ok(false);
        }
        let mut changed = false;
        for l in 0..self.settings.max_level {
            if l >= self.levels.len() {
                break;
            }
            let patches = self.child_patches(l);
            if patches.is_empty() {
                changed |= self.levels.len() > l + 1;
                self.levels.truncate(l + 1);
                break;
            }
            if self.levels.get(l + 1).is_some_and(|c| c.patches == patches) {
                continue;
            }
            let lev = self.build_level(l, patches, scene)?;
            if l + 1 < self.levels.len() {
                self.levels[l + 1] = lev;
            } else {
                self.levels.push(lev);
            }
            changed = true;
        }
        Ok(changed)
    }

    /// Patches for level `l + 1`, in its global indices.
    fn child_patches(&self, l: usize) -> Vec<Patch> {
        let lev = &self.levels[l];
        let g = &lev.window.grid;
        let layer: Vec<bool> = lev.coeffs.cell.a.iter().map(|a| *a > 0.0).collect();
        let s = compute_sensors(g, &lev.emb.psi, &layer, &lev.state.p_curr.data);
        let allowed = (l > 0).then(|| erode(&lev.valid, g.nx, g.ny, self.settings.nest_cells));
        let local = tag_and_cluster_aligned(
            &s,
            &self.settings.thresholds,
            (g.nx, g.ny),
            self.settings.tile,
            allowed.as_deref(),
            (lev.window.oi, lev.window.oj),
        );
        local
            .into_iter()
            .map(|p| Patch::new(p.i0 + lev.window.oi, p.j0 + lev.window.oj, p.i1 + lev.window.oi, p.j1 + lev.window.oj))
            .map(|p| p.refined(RATIO))
            .collect()
    }

    /// New level `l + 1`: prolonged from level `l`, persistent cells copied from the old level.
    fn build_level(&self, l: usize, patches: Vec<Patch>, scene: &Scene) -> Result<Level> {
        let parent = &self.levels[l];
        let global = parent.global.refined(RATIO);
        let i0 = patches.iter().map(|p| p.i0).min().unwrap().saturating_sub(GHOST);
        let j0 = patches.iter().map(|p| p.j0).min().unwrap().saturating_sub(GHOST);
        let i1 = (patches.iter().map(|p| p.i1).max().unwrap() + GHOST).min(global.nx);
        let j1 = (patches.iter().map(|p| p.j1).max().unwrap() + GHOST).min(global.ny);
        let window = Window::of(&global, i0, j0, i1, j1);
        let g = window.grid;
        let ps = &parent.state;
        let pw = &parent.window;
        let mut state = WaveState {
            p_prev: CellField { nx: g.nx, ny: g.ny, data: prolong_cells_window(pw, &ps.p_prev.data, &window, RATIO) },
            p_curr: CellField { nx: g.nx, ny: g.ny, data: prolong_cells_window(pw, &ps.p_curr.data, &window, RATIO) },
            lambda_prev: prolong_edges_window(pw, &ps.lambda_prev, &window, RATIO),
            lambda_curr: prolong_edges_window(pw, &ps.lambda_curr, &window, RATIO),
            t: ps.t,
            n: ps.n,
        };
        let mut lev = assemble(l + 1, global, window, patches, state.clone(), &self.layout, scene)?;
        if let Some(old) = self.levels.get(l + 1) {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let k = j * g.nx + i;
                    if !lev.valid[k] {
                        continue;
                    }
                    if let Some(ko) = old.local(i + i0, j + j0).filter(|&ko| old.valid[ko]) {
                        state.p_prev.data[k] = old.state.p_prev.data[ko];
                        state.p_curr.data[k] = old.state.p_curr.data[ko];
                    }
                }
            }
            copy_persistent_edges(&lev, old, &mut state);
        }
        lev.state = state;
        Ok(lev)
    }

    /// Physical energy summed over levels, each cell counted on the finest level holding it.
    pub fn composite_energy(&self, c: f64, tau: f64) -> f64 {
        let mut e = 0.0;
        for l in 0..self.levels.len() {
            let lev = &self.levels[l];
            let g = &lev.window.grid;
            let covered = self.covered(l);
            let own: Vec<bool> = lev.valid.iter().zip(&covered).map(|(v, c)| *v && !c).collect();
            let mut xe = Vec::with_capacity(g.n_xedges());
            for j in 0..g.ny {
                for i in 0..g.nx - 1 {
                    let (a, b) = (g.cell(i, j), g.cell(i + 1, j));
                    xe.push(lev.valid[a] && lev.valid[b] && (own[a] || own[b]));
                }
            }
            let mut ye = Vec::with_capacity(g.n_yedges());
            for j in 0..g.ny - 1 {
                for i in 0..g.nx {
                    let (a, b) = (g.cell(i, j), g.cell(i, j + 1));
                    ye.push(lev.valid[a] && lev.valid[b] && (own[a] || own[b]));
                }
            }
            let mut region = PhysRegion::new(g, &lev.emb, &self.layout, 0.5);
            region.restrict_to(&own, &xe, &ye);
            e += energy_physical(g, (&lev.state.p_prev, &lev.state.p_curr), &region, c, tau);
        }
        e
    }

    /// Physical energy of level 0 alone.
    pub fn level0_energy(&self, c: f64, tau: f64) -> f64 {
        let lev = &self.levels[0];
        let region = PhysRegion::new(&lev.global, &lev.emb, &self.layout, 0.5);
        energy_physical(&lev.global, (&lev.state.p_prev, &lev.state.p_curr), &region, c, tau)
    }

    /// Current pressure on the full grid of level `target`, finest data winning.
    pub fn composite_pressure(&self, target: usize) -> (StaggeredGrid, CellField) {
        let mut g = self.levels[0].global;
        let mut f = self.levels[0].state.p_curr.clone();
        for l in 1..=target {
            let fine = g.refined(RATIO);
            f = CellField { nx: fine.nx, ny: fine.ny, data: prolong_cells_window(&Window::full(&g), &f.data, &Window::full(&fine), RATIO) };
            g = fine;
            if let Some(lev) = self.levels.get(l) {
                let w = &lev.window;
                for j in 0..w.grid.ny {
                    for i in 0..w.grid.nx {
                        let k = j * w.grid.nx + i;
                        if lev.valid[k] {
                            f.data[(j + w.oj) * g.nx + i + w.oi] = lev.state.p_curr.data[k];
                        }
                    }
                }
            }
        }
        (g, f)
    }

    /// `(level, patch)` pairs for every refined level.
    pub fn layout_rows(&self) -> Vec<(usize, Patch)> {
        self.levels.iter().enumerate().flat_map(|(l, lev)| lev.patches.iter().map(move |p| (l, *p))).collect()
    }

    /// Every patch lies inside the domain and, widened by the nesting margin, inside its parent's patches.
    pub fn check_nesting(&self) -> bool {
        for l in 1..self.levels.len() {
            let lev = &self.levels[l];
            let parent = &self.levels[l - 1];
            for p in &lev.patches {
                if p.i1 > lev.global.nx || p.j1 > lev.global.ny {
                    return false;
                }
                if l == 1 && self.settings.fixed_patches.is_some() {
                    continue;
                }
                let m = self.settings.nest_cells;
                let (ci0, cj0) = (p.i0 / RATIO, p.j0 / RATIO);
                let (ci1, cj1) = (p.i1.div_ceil(RATIO), p.j1.div_ceil(RATIO));
                for gj in cj0.saturating_sub(m)..(cj1 + m).min(parent.global.ny) {
                    for gi in ci0.saturating_sub(m)..(ci1 + m).min(parent.global.nx) {
                        let ok = match parent.local(gi, gj) {
                            Some(k) => parent.valid[k],
                            None => false,
                        };
                        if !ok {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Stored form of one level, enough to rebuild it exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelParts {
    pub window: (usize, usize, usize, usize),
    pub patches: Vec<Patch>,
    pub state: WaveState,
}

impl LevelHierarchy {
    /// Rebuilds a hierarchy from stored levels; coefficients and embeddings are resampled.
    pub fn from_parts(
        base: StaggeredGrid,
        layout: PmlLayout,
        settings: AmrSettings,
        parts: Vec<LevelParts>,
        scene: &Scene,
    ) -> Result<Self> {
        let mut levels = Vec::with_capacity(parts.len());
        let mut global = base;
        for (l, p) in parts.into_iter().enumerate() {
            if l > 0 {
                global = global.refined(RATIO);
            }
            let (oi, oj, nx, ny) = p.window;
            if oi + nx > global.nx || oj + ny > global.ny || (p.state.p_curr.nx, p.state.p_curr.ny) != (nx, ny) {
                return Err(crate::Error::Config(format!("stored level {l} does not fit the grid")));
            }
            let window = Window::of(&global, oi, oj, oi + nx, oj + ny);
            levels.push(assemble(l, global, window, p.patches, p.state, &layout, scene)?);
        }
        Ok(Self { layout, settings, levels })
    }

    pub fn parts(&self) -> Vec<LevelParts> {
        self.levels
            .iter()
            .map(|l| LevelParts {
                window: (l.window.oi, l.window.oj, l.window.grid.nx, l.window.grid.ny),
                patches: l.patches.clone(),
                state: l.state.clone(),
            })
            .collect()
    }
}

fn assemble(
    l: usize,
    global: StaggeredGrid,
    window: Window,
    patches: Vec<Patch>,
    state: WaveState,
    layout: &PmlLayout,
    scene: &Scene,
) -> Result<Level> {
    let g = window.grid;
    let coeffs = if l == 0 {
        PmlCoefficients::sample(layout, &g)?
    } else {
        PmlCoefficients::from_fn(&g, |x, y| layout.damping_at(x, y).unwrap_or((0.0, 0.0)))
    };
    let mut valid = vec![false; g.n_cells()];
    for p in &patches {
        for gj in p.j0..p.j1 {
            for gi in p.i0..p.i1 {
                if window.contains_global(gi, gj) {
                    valid[(gj - window.oj) * g.nx + gi - window.oi] = true;
                }
            }
        }
    }
    let emb = scene.sample(&g, state.t, Some(&coeffs))?;
    Ok(Level { global, window, patches, valid, coeffs, state, emb })
}

fn analytic_state(g: &StaggeredGrid, p0: &dyn Fn(f64, f64) -> f64) -> WaveState {
    let p = CellField::from_fn(g, p0);
    WaveState { p_prev: p.clone(), p_curr: p, lambda_prev: EdgeField::zeros(g), lambda_curr: EdgeField::zeros(g), t: 0.0, n: 0 }
}

fn copy_persistent_edges(new: &Level, old: &Level, state: &mut WaveState) {
    let g = &new.window.grid;
    let go = &old.window.grid;
    let (nxe, nye) = new.edge_masks();
    let (oxe, oye) = old.edge_masks();
    let (dx, dy) = (new.window.oi as isize - old.window.oi as isize, new.window.oj as isize - old.window.oj as isize);
    let map = |i: usize, j: usize| -> Option<(usize, usize)> {
        let (a, b) = (i as isize + dx, j as isize + dy);
        (a >= 0 && b >= 0).then_some((a as usize, b as usize))
    };
    for j in 0..g.ny {
        for i in 0..g.nx - 1 {
            let k = g.xedge(i, j);
            if let Some((a, b)) = map(i, j).filter(|&(a, b)| a + 1 < go.nx && b < go.ny) {
                let ko = go.xedge(a, b);
                if nxe[k] && oxe[ko] {
                    state.lambda_prev.x[k] = old.state.lambda_prev.x[ko];
                    state.lambda_curr.x[k] = old.state.lambda_curr.x[ko];
                }
            }
        }
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx {
            let k = g.yedge(i, j);
            if let Some((a, b)) = map(i, j).filter(|&(a, b)| a < go.nx && b + 1 < go.ny) {
                let ko = go.yedge(a, b);
                if nye[k] && oye[ko] {
                    state.lambda_prev.y[k] = old.state.lambda_prev.y[ko];
                    state.lambda_curr.y[k] = old.state.lambda_curr.y[ko];
                }
            }
        }
    }
}

/// Cell and edge averaging of `child` into the covered part of `parent`.
fn average_level(parent: &mut Level, child: &Level) {
    let r = RATIO;
    let cw = &child.window;
    let cg = &cw.grid;
    let pg = parent.window.grid;
    let child_cell = |gi: usize, gj: usize| -> Option<usize> {
        cw.contains_global(gi, gj).then(|| (gj - cw.oj) * cg.nx + gi - cw.oi).filter(|&k| child.valid[k])
    };
    let covered = |pi: usize, pj: usize| -> bool {
        let (gi, gj) = (pi + parent.window.oi, pj + parent.window.oj);
        (0..r).all(|b| (0..r).all(|a| child_cell(r * gi + a, r * gj + b).is_some()))
    };
    let inv_c = 1.0 / (r * r) as f64;
    let mut cov = vec![false; pg.n_cells()];
    for pj in 0..pg.ny {
        for pi in 0..pg.nx {
            if !covered(pi, pj) {
                continue;
            }
            cov[pj * pg.nx + pi] = true;
            let (gi, gj) = (pi + parent.window.oi, pj + parent.window.oj);
            let (mut s0, mut s1) = (0.0, 0.0);
            for b in 0..r {
                for a in 0..r {
                    let k = child_cell(r * gi + a, r * gj + b).unwrap();
                    s0 += child.state.p_prev.data[k];
                    s1 += child.state.p_curr.data[k];
                }
            }
            let k = pj * pg.nx + pi;
            parent.state.p_prev.data[k] = s0 * inv_c;
            parent.state.p_curr.data[k] = s1 * inv_c;
        }
    }
    let inv_e = 1.0 / r as f64;
    let (ox, oy) = (parent.window.oi, parent.window.oj);
    for pj in 0..pg.ny {
        for pi in 0..pg.nx - 1 {
            if !(cov[pj * pg.nx + pi] && cov[pj * pg.nx + pi + 1]) {
                continue;
            }
            let fi = r * (pi + ox + 1) - 1 - cw.oi;
            let (mut s0, mut s1) = (0.0, 0.0);
            for b in 0..r {
                let k = cg.xedge(fi, r * (pj + oy) + b - cw.oj);
                s0 += child.state.lambda_prev.x[k];
                s1 += child.state.lambda_curr.x[k];
            }
            let k = pg.xedge(pi, pj);
            parent.state.lambda_prev.x[k] = s0 * inv_e;
            parent.state.lambda_curr.x[k] = s1 * inv_e;
        }
    }
    for pj in 0..pg.ny - 1 {
        for pi in 0..pg.nx {
            if !(cov[pj * pg.nx + pi] && cov[(pj + 1) * pg.nx + pi]) {
                continue;
            }
            let fj = r * (pj + oy + 1) - 1 - cw.oj;
            let (mut s0, mut s1) = (0.0, 0.0);
            for a in 0..r {
                let k = cg.yedge(r * (pi + ox) + a - cw.oi, fj);
                s0 += child.state.lambda_prev.y[k];
                s1 += child.state.lambda_curr.y[k];
            }
            let k = pg.yedge(pi, pj);
            parent.state.lambda_prev.y[k] = s0 * inv_e;
            parent.state.lambda_curr.y[k] = s1 * inv_e;
        }
    }
}
