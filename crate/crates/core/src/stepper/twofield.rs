use super::operator::{Advection, Constraint, ThreeLevelOperator};
use super::{StepContext, StepOutcome, WaveState};
use crate::error::{Error, Result};
use crate::geometry::{EmbeddingField, RigidMotion};
use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::ops;
use crate::pml::PmlCoefficients;
use crate::solver::{self, LinearOperator};

/// Closed-form trapezoidal update `lambda+ = alpha lambda + beta grad(p+ + p)` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaUpdate {
    pub alpha: EdgeField,
    pub beta: EdgeField,
}

impl LambdaUpdate {
    pub fn new(coeffs: &PmlCoefficients, params: &super::ModelParams) -> Self {
        let (c, tau) = (params.c, params.tau);
        let make = |g1: &[f64], g2: &[f64]| -> (Vec<f64>, Vec<f64>) {
            g1.iter()
                .zip(g2)
                .map(|(g1, g2)| {
                    let den = 1.0 + 0.5 * tau * g1;
                    ((1.0 - 0.5 * tau * g1) / den, 0.5 * c * tau * g2 / den)
                })
                .unzip()
        };
        let (ax, bx) = make(&coeffs.xe.g1, &coeffs.xe.g2);
        let (ay, by) = make(&coeffs.ye.g1, &coeffs.ye.g2);
        let (nx, ny) = (coeffs.nx, coeffs.ny);
        Self { alpha: EdgeField { nx, ny, x: ax, y: ay }, beta: EdgeField { nx, ny, x: bx, y: by } }
    }

    pub fn advance(&self, g: &StaggeredGrid, lambda: &EdgeField, p_old: &[f64], p_new: &[f64]) -> EdgeField {
        let sum: Vec<f64> = p_old.iter().zip(p_new).map(|(a, b)| a + b).collect();
        let mut gs = EdgeField::zeros(g);
        ops::grad_plus_into(g, &sum, &mut gs);
        let mut out = EdgeField::zeros(g);
        for k in 0..out.x.len() {
            out.x[k] = self.alpha.x[k] * lambda.x[k] + self.beta.x[k] * gs.x[k];
        }
        for k in 0..out.y.len() {
            out.y[k] = self.alpha.y[k] * lambda.y[k] + self.beta.y[k] * gs.y[k];
        }
        out
    }
}

/// `(c tau^2 / 4) D^{psi}(c grad(2p + p-) + beta grad p + (alpha + 2) lambda + lambda-)`.
fn coupling_rhs(g: &StaggeredGrid, upd: &LambdaUpdate, psi_edge: Option<&EdgeField>, st: &WaveState, c: f64, tau: f64) -> Vec<f64> {
    let p = &st.p_curr.data;
    let pm = &st.p_prev.data;
    let s: Vec<f64> = p.iter().zip(pm).map(|(a, b)| 2.0 * a + b).collect();
    let mut gs = EdgeField::zeros(g);
    let mut gp = EdgeField::zeros(g);
    ops::grad_plus_into(g, &s, &mut gs);
    ops::grad_plus_into(g, p, &mut gp);
    let (l, lm) = (&st.lambda_curr, &st.lambda_prev);
    let mut e = EdgeField::zeros(g);
    for k in 0..e.x.len() {
        e.x[k] = c * gs.x[k] + upd.beta.x[k] * gp.x[k] + (upd.alpha.x[k] + 2.0) * l.x[k] + lm.x[k];
    }
    for k in 0..e.y.len() {
        e.y[k] = c * gs.y[k] + upd.beta.y[k] * gp.y[k] + (upd.alpha.y[k] + 2.0) * l.y[k] + lm.y[k];
    }
    let mut out = vec![0.0; g.n_cells()];
    ops::div_minus_weighted_into(g, psi_edge, &e, &mut out);
    let s = 0.25 * c * tau * tau;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

/// Edge weights `(tau^2/4) psi c (c + beta) / h^2` of the implicit Laplacian.
fn implicit_weights(g: &StaggeredGrid, upd: &LambdaUpdate, psi_edge: Option<&EdgeField>, c: f64, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let q = 0.25 * tau * tau;
    let (sx, sy) = (q / (g.hx * g.hx), q / (g.hy * g.hy));
    let wx = (0..g.n_xedges()).map(|k| psi_edge.map_or(1.0, |w| w.x[k]) * c * (c + upd.beta.x[k]) * sx).collect();
    let wy = (0..g.n_yedges()).map(|k| psi_edge.map_or(1.0, |w| w.y[k]) * c * (c + upd.beta.y[k]) * sy).collect();
    (wx, wy)
}

fn solve_and_advance(
    ctx: &StepContext,
    st: &WaveState,
    upd: &LambdaUpdate,
    op: ThreeLevelOperator,
    mut rhs: Vec<f64>,
    constraint: Option<&Constraint>,
) -> Result<StepOutcome> {
    let g = ctx.grid;
    let n = g.n_cells();
    let mut guess: Vec<f64> = (0..n).map(|k| 2.0 * st.p_curr.data[k] - st.p_prev.data[k]).collect();
    let mut lift = vec![0.0; n];
    if let Some(cons) = constraint {
        for k in 0..n {
            if cons.fixed[k] {
                lift[k] = cons.values[k];
            }
        }
        let mut opg = vec![0.0; n];
        op.apply_raw(&lift, &mut opg);
        for k in 0..n {
            if cons.fixed[k] {
                rhs[k] = 0.0;
                guess[k] = 0.0;
            } else {
                rhs[k] -= opg[k];
                guess[k] -= lift[k];
            }
        }
    }
    let (x, report) = solver::solve_checked(&op as &dyn LinearOperator, &rhs, &guess, ctx.solver)?;
    let p_next: Vec<f64> = match constraint {
        Some(cons) => (0..n).map(|k| if cons.fixed[k] { cons.values[k] } else { x[k] + lift[k] }).collect(),
        None => x,
    };
    let lambda_next = upd.advance(g, &st.lambda_curr, &st.p_curr.data, &p_next);
    let state = WaveState {
        p_prev: st.p_curr.clone(),
        p_curr: CellField { nx: g.nx, ny: g.ny, data: p_next },
        lambda_prev: st.lambda_curr.clone(),
        lambda_curr: lambda_next,
        t: st.t + ctx.params.tau,
        n: st.n + 1,
    };
    if !state.is_finite() {
        return Err(Error::SolverDivergence { iterations: report.iterations, residual: f64::NAN });
    }
    Ok(StepOutcome { state, report })
}

/// Two-field leapfrog for fixed geometry (no obstacle).
pub fn leapfrog_step_fixed(ctx: &StepContext, st: &WaveState, forcing: Option<&[f64]>) -> Result<StepOutcome> {
    let g = ctx.grid;
    let (c, tau) = (ctx.params.c, ctx.params.tau);
    let upd = LambdaUpdate::new(ctx.coeffs, ctx.params);
    let (a, b) = (&ctx.coeffs.cell.a, &ctx.coeffs.cell.b);
    let (wx, wy) = implicit_weights(g, &upd, None, c, tau);
    let mut rhs = coupling_rhs(g, &upd, None, st, c, tau);
    let mut diag = vec![0.0; g.n_cells()];
    let (p, pm) = (&st.p_curr.data, &st.p_prev.data);
    for k in 0..g.n_cells() {
        let ha = 0.5 * tau * a[k];
        let qb = 0.25 * tau * tau * b[k];
        diag[k] = 1.0 + ha + qb;
        rhs[k] += 2.0 * p[k] - pm[k] + ha * pm[k] - qb * (2.0 * p[k] + pm[k]);
        if let Some(f) = forcing {
            rhs[k] += tau * tau * f[k];
        }
    }
    let op = ThreeLevelOperator { grid: g, diag, wx, wy, advect: None, fixed: None };
    solve_and_advance(ctx, st, &upd, op, rhs, None)
}

/// Embedded scheme with a sound-soft obstacle.
///
/// `forcing` is the time-averaged source at the cell centers.
pub fn pml_de_step_soft(
    ctx: &StepContext,
    st: &WaveState,
    emb_next: &EmbeddingField,
    forcing: Option<&[f64]>,
    constraint: Option<&Constraint>,
) -> Result<StepOutcome> {
    emb_next.check_support(ctx.coeffs)?;
    let g = ctx.grid;
    let prm = ctx.params;
    let (c, tau) = (prm.c, prm.tau);
    let upd = LambdaUpdate::new(ctx.coeffs, prm);
    let (a, b) = (&ctx.coeffs.cell.a, &ctx.coeffs.cell.b);
    let (wx, wy) = implicit_weights(g, &upd, Some(&emb_next.psi_edge), c, tau);
    let mut rhs = coupling_rhs(g, &upd, Some(&emb_next.psi_edge), st, c, tau);
    let mut diag = vec![0.0; g.n_cells()];
    let (p, pm) = (&st.p_curr.data, &st.p_prev.data);
    let q = 0.25 * tau * tau;
    for k in 0..g.n_cells() {
        let psi = emb_next.psi[k];
        let out = 1.0 - psi;
        let ha = 0.5 * tau * a[k] * psi;
        let theta = q * (b[k] * psi + emb_next.w[k] / prm.eta_d);
        let hal = 0.5 * tau * prm.alpha * out;
        diag[k] = psi + ha + theta + hal + tau * tau * prm.beta * out;
        rhs[k] += psi * (2.0 * p[k] - pm[k]) + ha * pm[k] - theta * (2.0 * p[k] + pm[k]) + hal * pm[k];
        if let Some(f) = forcing {
            rhs[k] += tau * tau * psi * f[k];
        }
    }
    let op = ThreeLevelOperator { grid: g, diag, wx, wy, advect: None, fixed: constraint.map(|c| c.fixed.as_slice()) };
    solve_and_advance(ctx, st, &upd, op, rhs, constraint)
}

/// Embedded scheme with a sound-hard obstacle under uniform translation.
pub fn pml_de_step_hard(
    ctx: &StepContext,
    st: &WaveState,
    emb_next: &EmbeddingField,
    motion: &RigidMotion,
    forcing: Option<&[f64]>,
    constraint: Option<&Constraint>,
) -> Result<StepOutcome> {
    if motion.has_acceleration() {
        return Err(Error::UnsupportedMotion("sound-hard obstacles must translate with constant velocity".into()));
    }
    emb_next.check_support(ctx.coeffs)?;
    let g = ctx.grid;
    let prm = ctx.params;
    let (c, tau) = (prm.c, prm.tau);
    let upd = LambdaUpdate::new(ctx.coeffs, prm);
    let (a, b) = (&ctx.coeffs.cell.a, &ctx.coeffs.cell.b);
    let (wx, wy) = implicit_weights(g, &upd, Some(&emb_next.psi_edge), c, tau);
    let mut rhs = coupling_rhs(g, &upd, Some(&emb_next.psi_edge), st, c, tau);
    let q = 0.25 * tau * tau;
    let kappa: Vec<f64> = emb_next.psi.iter().map(|psi| q * (1.0 - psi) / prm.eta_n).collect();
    let adv = Advection::new(g, &kappa, &emb_next.psi);
    let (p, pm) = (&st.p_curr.data, &st.p_prev.data);
    let s: Vec<f64> = p.iter().zip(pm).map(|(a, b)| 2.0 * a + b).collect();
    let mut gs = vec![0.0; g.n_cells()];
    adv.apply_add(g, &s, &mut gs);
    let mut diag = vec![0.0; g.n_cells()];
    for k in 0..g.n_cells() {
        let psi = emb_next.psi[k];
        let heav = if prm.psi_hat - psi > 0.0 { 1.0 } else { 0.0 };
        let ha = 0.5 * tau * a[k] * psi;
        let qb = q * b[k] * psi;
        let hal = 0.5 * tau * prm.alpha * heav;
        diag[k] = psi + ha + qb + hal + tau * tau * prm.beta * heav;
        rhs[k] += psi * (2.0 * p[k] - pm[k]) + ha * pm[k] - qb * (2.0 * p[k] + pm[k]) + hal * pm[k] + gs[k];
        if let Some(f) = forcing {
            rhs[k] += tau * tau * psi * f[k];
        }
    }
    let advect = if adv.is_zero() { None } else { Some(adv) };
    let op = ThreeLevelOperator { grid: g, diag, wx, wy, advect, fixed: constraint.map(|c| c.fixed.as_slice()) };
    solve_and_advance(ctx, st, &upd, op, rhs, constraint)
}
