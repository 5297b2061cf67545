//! Time integrators: four-field Crank-Nicolson, two-field leapfrog and the
//! embedded-obstacle schemes, plus source evaluation and the first step.

mod fourfield;
mod operator;
mod twofield;

pub use fourfield::{cn_step_fourfield, constraint_residual, FourFieldOutcome, FourFieldState};
pub use operator::{Advection, Constraint, ThreeLevelOperator};
pub use twofield::{leapfrog_step_fixed, pml_de_step_hard, pml_de_step_soft, LambdaUpdate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::EmbeddingField;
use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::ops;
use crate::pml::PmlCoefficients;
use crate::solver::{SolveReport, SolverSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    Soft,
    Hard,
}

/// Physical and numerical parameters shared by all schemes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: f64,
    pub tau: f64,
    /// Interface trace penalty (soft obstacles).
    pub eta_d: f64,
    /// Interior damping inside the obstacle.
    pub alpha: f64,
    pub beta: f64,
    /// Threshold below which interior damping is switched on (hard obstacles).
    pub psi_hat: f64,
    /// Normal-derivative penalty (hard obstacles).
    pub eta_n: f64,
    pub bc: BoundaryKind,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.c > 0.0) {
            return bad("wave speed c must be positive");
        }
        if !(self.tau > 0.0) {
            return bad("time step tau must be positive");
        }
        if !(self.eta_d > 0.0) {
            return bad("eta_d must be positive");
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be nonnegative");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.psi_hat > 0.0 && self.psi_hat < 1.0) {
            return bad("psi_hat must lie in (0, 1)");
        }
        if !(self.eta_n > 0.0) {
            return bad("eta_n must be positive");
        }
        Ok(())
    }
}

/// Default interface penalty `eta_d = 0.1 eps / c^2`.
pub fn default_eta_d(eps: f64, c: f64) -> f64 {
    0.1 * eps / (c * c)
}

/// Two pressure levels and two auxiliary levels on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub p_prev: CellField,
    pub p_curr: CellField,
    pub lambda_prev: EdgeField,
    pub lambda_curr: EdgeField,
    pub t: f64,
    pub n: u64,
}

impl WaveState {
    pub fn zeros(g: &StaggeredGrid) -> Self {
        Self {
            p_prev: CellField::zeros(g),
            p_curr: CellField::zeros(g),
            lambda_prev: EdgeField::zeros(g),
            lambda_curr: EdgeField::zeros(g),
            t: 0.0,
            n: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p_curr.data.iter().chain(&self.p_prev.data).all(|v| v.is_finite())
            && self.lambda_curr.x.iter().chain(&self.lambda_curr.y).all(|v| v.is_finite())
    }
}

/// Result of one implicit step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: WaveState,
    pub report: SolveReport,
}

/// Everything a stepper needs that does not change between steps.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    pub grid: &'a StaggeredGrid,
    pub coeffs: &'a PmlCoefficients,
    pub params: &'a ModelParams,
    pub solver: &'a SolverSettings,
}

/// Point source `f = c^2 g(x) gamma(t)`, Gaussian in space, windowed sine in time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub center: [f64; 2],
    pub eta: f64,
    pub w: f64,
    pub sigma: f64,
    #[serde(default)]
    pub t0: f64,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.sigma > 0.0) {
            return Err(Error::Config("source eta and sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn spatial(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        (-(dx * dx + dy * dy) / (2.0 * self.eta * self.eta)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.eta)
    }

    pub fn temporal(&self, t: f64) -> f64 {
        let s = t - self.t0;
        (self.w * s).sin() * (-self.sigma * s * s).exp()
    }
}

pub fn eval_source(spec: &SourceSpec, g: &StaggeredGrid, c: f64, t: f64) -> CellField {
    let amp = c * c * spec.temporal(t);
    if amp == 0.0 {
        return CellField::zeros(g);
    }
    CellField::from_fn(g, |x, y| amp * spec.spatial(x, y))
}

/// Time average `(f(t+tau) + 2 f(t) + f(t-tau)) / 4` at cell centers.
pub fn averaged_source(spec: &SourceSpec, g: &StaggeredGrid, c: f64, t: f64, tau: f64) -> CellField {
    let wt = (spec.temporal(t + tau) + 2.0 * spec.temporal(t) + spec.temporal(t - tau)) / 4.0;
    let amp = c * c * wt;
    if amp == 0.0 {
        return CellField::zeros(g);
    }
    CellField::from_fn(g, |x, y| amp * spec.spatial(x, y))
}

/// Taylor start `p1 = p0 + tau v + tau^2/2 psi (c^2 L p0 + f0 - a v - b p0)`, with lambda0 = 0.
pub fn bootstrap_first_step(ctx: &StepContext, p0: &CellField, v0: &CellField, emb: &EmbeddingField, f0: Option<&CellField>) -> WaveState {
    let g = ctx.grid;
    let (c, tau) = (ctx.params.c, ctx.params.tau);
    let lap = ops::laplace_weighted(g, None, p0);
    let a = &ctx.coeffs.cell.a;
    let b = &ctx.coeffs.cell.b;
    let mut p1 = CellField::zeros(g);
    for k in 0..g.n_cells() {
        let f = f0.map_or(0.0, |f| f.data[k]);
        let acc = c * c * lap.data[k] + f - a[k] * v0.data[k] - b[k] * p0.data[k];
        p1.data[k] = p0.data[k] + tau * v0.data[k] + 0.5 * tau * tau * emb.psi[k] * acc;
    }
    let lam0 = EdgeField::zeros(g);
    let upd = LambdaUpdate::new(ctx.coeffs, ctx.params);
    let lam1 = upd.advance(g, &lam0, &p0.data, &p1.data);
    WaveState { p_prev: p0.clone(), p_curr: p1, lambda_prev: lam0, lambda_curr: lam1, t: tau, n: 1 }
}

/// Recovers `(q^n, q^{n+1}, chi^n, chi^{n+1})` from consecutive two-field levels.
pub fn reconstruct_q_chi(
    g: &StaggeredGrid,
    p: (&CellField, &CellField),
    lambda: (&EdgeField, &EdgeField),
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> (CellField, CellField, EdgeField, EdgeField) {
    let (c, tau) = (params.c, params.tau);
    let n = g.n_cells();
    let pm: Vec<f64> = (0..n).map(|k| 0.5 * (p.0.data[k] + p.1.data[k])).collect();
    let lm = lambda.0.zip_map(lambda.1, |a, b| 0.5 * (a + b));
    let pm_field = CellField { nx: g.nx, ny: g.ny, data: pm };
    let lap = ops::laplace_weighted(g, None, &pm_field);
    let div = ops::div_minus_weighted(g, None, &lm);
    let a = &coeffs.cell.a;
    let b = &coeffs.cell.b;
    let mut q0 = CellField::zeros(g);
    let mut q1 = CellField::zeros(g);
    for k in 0..n {
        let half = (p.1.data[k] - p.0.data[k]) / tau + a[k] * pm_field.data[k];
        let f = -b[k] * pm_field.data[k] + c * c * lap.data[k] + c * div.data[k];
        q1.data[k] = half + 0.5 * tau * f;
        q0.data[k] = half - 0.5 * tau * f;
    }
    let chi = |pp: &CellField, ll: &EdgeField| ops::grad_plus(g, pp).zip_map(ll, |gp, l| c * gp + l);
    (q0, q1, chi(p.0, lambda.0), chi(p.1, lambda.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_values() {
        let s = SourceSpec { center: [-3.0, 0.0], eta: 0.25, w: 10.0 * std::f64::consts::PI, sigma: 0.08, t0: 0.0 };
        assert_eq!(s.temporal(0.0), 0.0);
        let peak = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * 0.25);
        assert!((s.spatial(-3.0, 0.0) - peak).abs() < 1e-15);
        let tiny = SourceSpec { sigma: 1e-300, ..s };
        assert!(tiny.temporal(std::f64::consts::PI / tiny.w).abs() < 1e-14);
        let g = StaggeredGrid::new(8, 8, (-5.0, 5.0), (-5.0, 5.0)).unwrap();
        assert!(eval_source(&s, &g, 10.0, 0.0).data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn params_validation() {
        let ok = ModelParams { c: 1.0, tau: 0.01, eta_d: 1.0, alpha: 10.0, beta: 100.0, psi_hat: 0.5, eta_n: 1.0, bc: BoundaryKind::Soft };
        assert!(ok.validate().is_ok());
        assert!(ModelParams { beta: 0.0, ..ok }.validate().is_err());
        assert!(ModelParams { psi_hat: 1.0, ..ok }.validate().is_err());
        assert!(ModelParams { c: -1.0, ..ok }.validate().is_err());
    }
}
