//! Time loop over the level hierarchy with energy bookkeeping and output.

use std::path::Path;

use crate::amr::{AdvanceInputs, LevelHierarchy, LevelParts};
use crate::config::RunConfig;
use crate::energy::StepBalance;
use crate::geometry::Scene;
use crate::io::{
    read_checkpoint, write_checkpoint, Checkpoint, CheckpointManifest, EnergyRow, FieldId, LevelManifest, OutputSink, Snapshot,
    CHECKPOINT_VERSION,
};
use crate::pml::PmlLayout;
use crate::solver::SolverSettings;
use crate::stepper::ModelParams;
use crate::{Error, Result};

/// Rows kept for checkpoints.
const LEDGER_TAIL: usize = 16;

pub struct Simulation {
    pub config: RunConfig,
    pub params: ModelParams,
    pub solver: SolverSettings,
    pub scene: Scene,
    pub layout: PmlLayout,
    pub hierarchy: LevelHierarchy,
    pub ledger: Vec<EnergyRow>,
    /// Last level-0 balance, with the commutator term.
    pub last_balance: Option<StepBalance>,
    next_snapshot: u64,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        for w in config.warnings() {
            log::warn!("{w}");
        }
        let params = config.params();
        let solver = config.solver_settings();
        let scene = config.scene();
        let layout = config.layout();
        let base = config.grid()?;
        let inputs = AdvanceInputs { params: &params, solver: &solver, scene: &scene, source: config.source.as_ref(), balance: false };
        let init = config.initial.clone();
        let p0 = move |x: f64, y: f64| init.pressure(x, y);
        let hierarchy = LevelHierarchy::new(base, layout, config.amr.clone(), &inputs, &p0, &|_, _| 0.0)?;
        Ok(Self { config, params, solver, scene, layout, hierarchy, ledger: Vec::new(), last_balance: None, next_snapshot: 0 })
    }

    pub fn time(&self) -> f64 {
        self.hierarchy.time()
    }

    pub fn step_index(&self) -> u64 {
        self.hierarchy.step_index()
    }

    pub fn is_done(&self) -> bool {
        self.step_index() >= self.config.n_steps()
    }

    fn regrid_due(&self) -> bool {
        let every = self.config.amr.thresholds.regrid_interval;
        self.config.amr.enabled && self.step_index().is_multiple_of(every)
    }

    /// Advances every level by one step and records the ledger row.
    pub fn step(&mut self) -> Result<EnergyRow> {
        let mut regridded = false;
        if self.regrid_due() {
            regridded = self.hierarchy.regrid(&self.scene)?;
        }
        let inputs = AdvanceInputs {
            params: &self.params,
            solver: &self.solver,
            scene: &self.scene,
            source: self.config.source.as_ref(),
            balance: true,
        };
        let rep = self.hierarchy.advance(&inputs)?;
        let b = rep.balance.expect("balance requested");
        let (c, tau) = (self.params.c, self.params.tau);
        let row = EnergyRow {
            n: self.step_index(),
            t: self.time(),
            e_embed: b.e_next,
            d: b.dissipation,
            r: b.remainder,
            residual: b.residual,
            e_phys_level0: self.hierarchy.level0_energy(c, tau),
            e_phys_all: self.hierarchy.composite_energy(c, tau),
            solver_iters: rep.iterations,
        };
        if regridded {
            log::debug!("regrid at n = {}: {} levels", row.n, self.hierarchy.n_levels());
        }
        self.last_balance = Some(b);
        self.ledger.push(row);
        Ok(row)
    }

    fn emit(&mut self, sink: &OutputSink, row: Option<&EnergyRow>, force_layout: bool) -> Result<()> {
        if let Some(r) = row {
            if r.n % self.config.output.energy_every == 0 {
                sink.energy(*r)?;
            }
        }
        if self.config.output.layout && (force_layout || self.regrid_due()) && self.config.amr.enabled {
            sink.layout(self.step_index(), self.hierarchy.layout_rows())?;
        }
        if let Some(dt) = self.config.output.snapshot_every {
            while self.time() + 1e-9 * self.params.tau >= self.next_snapshot as f64 * dt {
                let lev = &self.hierarchy.levels[0];
                let s = Snapshot::new(FieldId::Pressure, lev.global, lev.state.t, lev.state.n, lev.state.p_curr.data.clone());
                sink.snapshot(&format!("p_{:05}.bin", self.next_snapshot), s)?;
                self.next_snapshot += 1;
            }
        }
        Ok(())
    }

    /// Runs to `t_end`, streaming output to `sink` when given.
    pub fn run(&mut self, sink: Option<&OutputSink>) -> Result<()> {
        if let Some(s) = sink {
            self.emit(s, None, true)?;
        }
        while !self.is_done() {
            let row = self.step()?;
            if !row.e_embed.is_finite() {
                return Err(Error::SolverDivergence { iterations: row.solver_iters, residual: f64::NAN });
            }
            if let Some(s) = sink {
                self.emit(s, Some(&row), false)?;
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let g = self.hierarchy.base();
        let parts = self.hierarchy.parts();
        let tail = self.ledger.len().saturating_sub(LEDGER_TAIL);
        Checkpoint {
            manifest: CheckpointManifest {
                version: CHECKPOINT_VERSION,
                grid: [g.nx, g.ny],
                extent: [g.x0, g.x1(), g.y0, g.y1()],
                tau: self.params.tau,
                t: self.time(),
                n: self.step_index(),
                next_snapshot: self.next_snapshot,
                levels: parts
                    .iter()
                    .map(|p| LevelManifest { oi: p.window.0, oj: p.window.1, nx: p.window.2, ny: p.window.3, patches: p.patches.clone() })
                    .collect(),
                ledger_tail: self.ledger[tail..].to_vec(),
            },
            states: parts.into_iter().map(|p| p.state).collect(),
        }
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let grids: Vec<_> = self.hierarchy.levels.iter().map(|l| l.window.grid).collect();
        write_checkpoint(path, &self.checkpoint(), &grids)
    }

    /// Resumes from a checkpoint taken with the same configuration.
    pub fn restore(config: RunConfig, ck: Checkpoint) -> Result<Self> {
        config.validate()?;
        let g = config.grid()?;
        let m = &ck.manifest;
        if m.grid != [g.nx, g.ny] || m.extent != [g.x0, g.x1(), g.y0, g.y1()] || m.tau != config.time.tau {
            return Err(Error::Config(format!(
                "checkpoint grid {}x{} (tau {}) does not match configuration {}x{} (tau {})",
                m.grid[0], m.grid[1], m.tau, g.nx, g.ny, config.time.tau
            )));
        }
        let params = config.params();
        let solver = config.solver_settings();
        let scene = config.scene();
        let layout = config.layout();
        let parts = m
            .levels
            .iter()
            .zip(ck.states)
            .map(|(lm, state)| LevelParts { window: (lm.oi, lm.oj, lm.nx, lm.ny), patches: lm.patches.clone(), state })
            .collect();
        let hierarchy = LevelHierarchy::from_parts(g, layout, config.amr.clone(), parts, &scene)?;
        Ok(Self {
            params,
            solver,
            scene,
            layout,
            hierarchy,
            ledger: m.ledger_tail.clone(),
            last_balance: None,
            next_snapshot: m.next_snapshot,
            config,
        })
    }

    pub fn load_checkpoint(config: RunConfig, path: &Path) -> Result<Self> {
        Self::restore(config, read_checkpoint(path)?)
    }
}
