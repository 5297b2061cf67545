//! Run configuration in TOML.
//!
//! ```toml
//! [domain]
//! a1 = 10.0
//! a2 = 10.0
//! l1 = 4.0
//! l2 = 4.0
//!
//! [grid]
//! nx = 128
//! ny = 128
//!
//! [time]
//! tau = 0.01
//! t_end = 1.0
//!
//! [model]
//! c = 1.0
//! beta = 100.0
//!
//! [embedding]
//! eps = 0.25
//! shape = { kind = "circle", center = [0.0, 0.0], radius = 2.0 }
//!
//! [initial]
//! kind = "gaussian"
//! center = [5.0, 0.0]
//! decay = 5.0
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::amr::AmrSettings;
use crate::geometry::{Body, RigidMotion, Scene, Shape};
use crate::grid::StaggeredGrid;
use crate::pml::{default_peak, PmlLayout};
use crate::solver::SolverSettings;
use crate::stepper::{BoundaryKind, ModelParams, SourceSpec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// Half-widths of the physical box.
    pub a1: f64,
    pub a2: f64,
    /// Layer thicknesses.
    pub l1: f64,
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub tau: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub c: f64,
    /// Interface penalty; defaults to `0.1 eps / c^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_d: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_psi_hat")]
    pub psi_hat: f64,
    #[serde(default = "default_eta_n")]
    pub eta_n: f64,
    #[serde(default)]
    pub bc: BoundaryKind,
}

fn default_alpha() -> f64 {
    10.0
}
fn default_psi_hat() -> f64 {
    0.5
}
fn default_eta_n() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlSection {
    /// Peak damping per direction; derived from `reflection` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xibar: Option<[f64; 2]>,
    #[serde(default = "default_reflection")]
    pub reflection: f64,
}

fn default_reflection() -> f64 {
    1e-4
}

impl Default for PmlSection {
    fn default() -> Self {
        Self { xibar: None, reflection: default_reflection() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub eps: f64,
    pub shape: Shape,
    #[serde(default = "RigidMotion::stationary")]
    pub motion: RigidMotion,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    #[default]
    Zero,
    /// `exp(-decay |x - center|^2)` at rest.
    Gaussian { center: [f64; 2], decay: f64 },
}

impl InitialData {
    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Gaussian { center, decay } => (-decay * ((x - center[0]).powi(2) + (y - center[1]).powi(2))).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Simulated time between pressure snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    /// Steps between energy rows.
    #[serde(default = "default_energy_every")]
    pub energy_every: u64,
    #[serde(default = "default_true")]
    pub layout: bool,
}

fn default_energy_every() -> u64 {
    1
}
fn default_true() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, snapshot_every: None, energy_every: 1, layout: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

fn default_tol() -> f64 {
    1e-12
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub model: ModelSection,
    #[serde(default)]
    pub pml: PmlSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub amr: AmrSettings,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub solver: SolverSection,
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn grid(&self) -> Result<StaggeredGrid> {
        let (w1, w2) = (self.domain.a1 + self.domain.l1, self.domain.a2 + self.domain.l2);
        StaggeredGrid::new(self.grid.nx, self.grid.ny, (-w1, w1), (-w2, w2))
    }

    pub fn layout(&self) -> PmlLayout {
        let d = &self.domain;
        let c = self.model.c;
        let [x1, x2] = self.pml.xibar.unwrap_or([default_peak(c, d.l1, self.pml.reflection), default_peak(c, d.l2, self.pml.reflection)]);
        PmlLayout { a1: d.a1, a2: d.a2, l1: d.l1, l2: d.l2, xibar1: x1, xibar2: x2 }
    }

    pub fn eta_d(&self) -> f64 {
        let eps = self.embedding.as_ref().map_or(1.0, |e| e.eps);
        self.model.eta_d.unwrap_or_else(|| crate::stepper::default_eta_d(eps, self.model.c))
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            c: m.c,
            tau: self.time.tau,
            eta_d: self.eta_d(),
            alpha: m.alpha,
            beta: m.beta,
            psi_hat: m.psi_hat,
            eta_n: m.eta_n,
            bc: m.bc,
        }
    }

    pub fn scene(&self) -> Scene {
        match &self.embedding {
            None => Scene::empty(),
            Some(e) => Scene { body: Some(Body { shape: e.shape.clone(), motion: e.motion }), eps: e.eps },
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings { tol: self.solver.tol, max_iter: self.solver.max_iter, ..SolverSettings::default() }
    }

    /// Number of steps to reach `t_end`.
    pub fn n_steps(&self) -> u64 {
        (self.time.t_end / self.time.tau - 1e-9).ceil().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let d = &self.domain;
        if !(d.a1 > 0.0 && d.a2 > 0.0 && d.l1 > 0.0 && d.l2 > 0.0) {
            return cfg("domain: a1, a2, l1, l2 must be positive".into());
        }
        self.grid()?;
        if !(self.time.tau > 0.0 && self.time.tau.is_finite()) {
            return cfg(format!("time: tau must be positive, got {}", self.time.tau));
        }
        if !(self.time.t_end >= 0.0) {
            return cfg("time: t_end must be nonnegative".into());
        }
        self.params().validate()?;
        if !(self.pml.reflection > 0.0 && self.pml.reflection < 1.0) {
            return cfg(format!("pml: reflection must lie in (0, 1), got {}", self.pml.reflection));
        }
        if let Some([x1, x2]) = self.pml.xibar {
            if !(x1 >= 0.0 && x2 >= 0.0) {
                return cfg("pml: xibar must be nonnegative".into());
            }
        }
        self.layout().validate()?;
        if let Some(e) = &self.embedding {
            if !(e.eps > 0.0) {
                return cfg(format!("embedding: eps must be positive, got {}", e.eps));
            }
            e.shape.validate()?;
            if e.motion.speed() >= self.model.c {
                return cfg(format!("embedding: motion must be subsonic, |v| = {} >= c = {}", e.motion.speed(), self.model.c));
            }
            self.check_object_stays_inside(e)?;
        }
        if let Some(s) = &self.source {
            s.validate()?;
        }
        if let InitialData::Gaussian { decay, .. } = self.initial {
            if !(decay > 0.0) {
                return cfg("initial: gaussian decay must be positive".into());
            }
        }
        self.amr.validate()?;
        if let Some(dt) = self.output.snapshot_every {
            if !(dt > 0.0) {
                return cfg("output: snapshot_every must be positive".into());
            }
        }
        if self.output.energy_every == 0 {
            return cfg("output: energy_every must be positive".into());
        }
        if !(self.solver.tol > 0.0) {
            return cfg("solver: tol must be positive".into());
        }
        Ok(())
    }

    fn check_object_stays_inside(&self, e: &EmbeddingSection) -> Result<()> {
        const SAMPLES: usize = 64;
        let (x0, x1, y0, y1) = e.shape.bounding_box();
        for k in 0..=SAMPLES {
            let t = self.time.t_end * k as f64 / SAMPLES as f64;
            let [dx, dy] = e.motion.displacement(t);
            let inside = x0 + dx > -self.domain.a1 && x1 + dx < self.domain.a1 && y0 + dy > -self.domain.a2 && y1 + dy < self.domain.a2;
            if !inside {
                return Err(Error::Config(format!("embedding: object leaves the physical box by t = {t}")));
            }
        }
        Ok(())
    }

    /// Non-fatal diagnostics, e.g. a large Courant number.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if let Ok(g) = self.grid() {
            let cfl = self.model.c * self.time.tau / g.hx.min(g.hy);
            if cfl > 1.0 {
                w.push(format!("c*tau/h = {cfl:.3} exceeds 1; the scheme stays stable but loses accuracy"));
            }
        }
        if self.amr.enabled && self.amr.fixed_patches.is_some() && self.embedding.as_ref().is_some_and(|e| !e.motion.is_static()) {
            w.push("fixed refinement patches do not follow the moving object".into());
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
a1 = 2.0
a2 = 2.0
l1 = 1.0
l2 = 1.0

[grid]
nx = 32
ny = 32

[time]
tau = 0.01
t_end = 0.1

[model]
c = 1.0
beta = 100.0
"#;

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.model.alpha, 10.0);
        assert_eq!(c.n_steps(), 10);
        assert!(c.embedding.is_none());
    }

    #[test]
    fn missing_beta_is_reported() {
        let text = MINIMAL.replace("beta = 100.0\n", "");
        let e = parse_config(&text).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("beta")), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[solver]\ntolerance = 1e-3\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn parse_errors_carry_line_info() {
        let e = parse_config("[domain]\na1 = = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn supersonic_motion_is_rejected() {
        let text = format!(
            "{MINIMAL}\n[embedding]\neps = 0.05\nshape = {{ kind = \"circle\", center = [0.0, 0.0], radius = 0.3 }}\nmotion = {{ velocity = [1.5, 0.0] }}\n"
        );
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("subsonic"), "{e}");
    }

    #[test]
    fn escaping_object_is_rejected() {
        let text = format!(
            "{MINIMAL}\n[embedding]\neps = 0.05\nshape = {{ kind = \"circle\", center = [1.65, 0.0], radius = 0.3 }}\nmotion = {{ velocity = [0.9, 0.0] }}\n"
        );
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn large_courant_number_warns() {
        let text = MINIMAL.replace("tau = 0.01", "tau = 0.5");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.warnings().len(), 1);
    }
}
