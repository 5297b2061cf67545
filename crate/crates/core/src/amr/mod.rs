//! Block-structured refinement: nested levels of rectangular patches sharing one time step.

mod cluster;
mod hierarchy;
mod sensors;
mod transfer;

pub use cluster::{decompose, dilate, erode, tag_and_cluster, tag_cells};
pub use hierarchy::{AdvanceInputs, AdvanceReport, Level, LevelHierarchy, LevelParts};
pub use sensors::{compute_sensors, Sensors};
pub use transfer::{prolong_cells, prolong_cells_window, prolong_edges, prolong_edges_window, restrict_cells, restrict_edges, Window};

use serde::{Deserialize, Serialize};

/// Half-open index rectangle `[i0, i1) x [j0, j1)` on one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Patch {
    pub i0: usize,
    pub j0: usize,
    pub i1: usize,
    pub j1: usize,
}

impl Patch {
    pub fn new(i0: usize, j0: usize, i1: usize, j1: usize) -> Self {
        Self { i0, j0, i1, j1 }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i1 && j >= self.j0 && j < self.j1
    }

    pub fn cells(&self) -> usize {
        (self.i1 - self.i0) * (self.j1 - self.j0)
    }

    pub fn refined(&self, r: usize) -> Self {
        Self { i0: self.i0 * r, j0: self.j0 * r, i1: self.i1 * r, j1: self.j1 * r }
    }
}

/// Refinement criteria and cadence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorThresholds {
    #[serde(default = "default_tau_emb")]
    pub tau_emb: f64,
    #[serde(default = "default_tau_pml")]
    pub tau_pml: f64,
    #[serde(default = "default_tau_sol")]
    pub tau_sol: f64,
    #[serde(default = "default_buffer")]
    pub buffer_cells: usize,
    #[serde(default = "default_regrid")]
    pub regrid_interval: u64,
}

fn default_tau_emb() -> f64 {
    1.0
}
fn default_tau_pml() -> f64 {
    2.0
}
fn default_tau_sol() -> f64 {
    0.02
}
fn default_buffer() -> usize {
    2
}
fn default_regrid() -> u64 {
    10
}

impl Default for SensorThresholds {
    fn default() -> Self {
        Self {
            tau_emb: default_tau_emb(),
            tau_pml: default_tau_pml(),
            tau_sol: default_tau_sol(),
            buffer_cells: default_buffer(),
            regrid_interval: default_regrid(),
        }
    }
}

impl SensorThresholds {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.tau_emb > 0.0 && self.tau_pml > 0.0 && self.tau_sol > 0.0) {
            return Err(crate::Error::Config("AMR thresholds must be positive".into()));
        }
        if self.regrid_interval == 0 {
            return Err(crate::Error::Config("regrid_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Hierarchy shape and refinement policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmrSettings {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_max_level")]
    pub max_level: usize,
    #[serde(default = "default_tile")]
    pub tile: usize,
    /// Ghost-to-parent-boundary distance, in parent cells, kept by proper nesting.
    #[serde(default = "default_nest")]
    pub nest_cells: usize,
    #[serde(default)]
    pub thresholds: SensorThresholds,
    /// Static level-1 layout in level-1 indices; disables regridding when set.
    #[serde(default)]
    pub fixed_patches: Option<Vec<Patch>>,
}

fn default_max_level() -> usize {
    2
}
fn default_tile() -> usize {
    4
}
fn default_nest() -> usize {
    2
}

impl Default for AmrSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            max_level: default_max_level(),
            tile: default_tile(),
            nest_cells: default_nest(),
            thresholds: SensorThresholds::default(),
            fixed_patches: None,
        }
    }
}

impl AmrSettings {
    pub fn validate(&self) -> crate::Result<()> {
        if self.max_level > 2 {
            return Err(crate::Error::Config(format!("max_level must be at most 2, got {}", self.max_level)));
        }
        if self.tile == 0 {
            return Err(crate::Error::Config("tile size must be positive".into()));
        }
        self.thresholds.validate()
    }
}

/// Refinement ratio between consecutive levels.
pub const RATIO: usize = 2;

/// Ghost ring width of refined levels, in their own cells.
pub const GHOST: usize = 2;
