//! Discrete energies, dissipation rates, remainders and the balance residuals they satisfy.

use crate::geometry::EmbeddingField;
use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::ops::{self, inner_cell, inner_edge};
use crate::pml::{PmlCoefficients, PmlLayout};
use crate::reduce;
use crate::stepper::{FourFieldState, ModelParams, WaveState};

fn sq_cell(g: &StaggeredGrid, u: &[f64], w: &[f64]) -> f64 {
    inner_cell(g, u, u, Some(w))
}

fn sq_edge(g: &StaggeredGrid, v: &EdgeField, w: &EdgeField) -> f64 {
    inner_edge(g, v, v, Some(w))
}

fn edge_weight(coeffs: &PmlCoefficients, f: impl Fn(&crate::pml::EdgeCoeffs, usize) -> f64) -> EdgeField {
    EdgeField {
        nx: coeffs.nx,
        ny: coeffs.ny,
        x: (0..coeffs.xe.a.len()).map(|k| f(&coeffs.xe, k)).collect(),
        y: (0..coeffs.ye.a.len()).map(|k| f(&coeffs.ye, k)).collect(),
    }
}

/// `1/2 (|q|^2 + |chi|^2 + |p|_b^2 + |lambda|^2_{a^-1 Gamma1})`.
pub fn energy_fourfield(g: &StaggeredGrid, s: &FourFieldState, coeffs: &PmlCoefficients) -> f64 {
    0.5 * (inner_cell(g, &s.q.data, &s.q.data, None)
        + inner_edge(g, &s.chi, &s.chi, None)
        + sq_cell(g, &s.p.data, &coeffs.cell.b)
        + sq_edge(g, &s.lambda, &coeffs.ainv_g1()))
}

/// Componentwise average of two four-field states.
pub fn midpoint(a: &FourFieldState, b: &FourFieldState) -> FourFieldState {
    let avg = |x: &CellField, y: &CellField| CellField {
        nx: x.nx,
        ny: x.ny,
        data: x.data.iter().zip(&y.data).map(|(u, v)| 0.5 * (u + v)).collect(),
    };
    FourFieldState {
        p: avg(&a.p, &b.p),
        q: avg(&a.q, &b.q),
        chi: a.chi.zip_map(&b.chi, |u, v| 0.5 * (u + v)),
        lambda: a.lambda.zip_map(&b.lambda, |u, v| 0.5 * (u + v)),
        t: 0.5 * (a.t + b.t),
        n: a.n,
    }
}

/// `|P|^2_{ab} + |X|^2_{Gamma1 + a^-1 Gamma1^2} + |X - Lambda|^2_{a^-1 b}` at the midpoint.
pub fn dissipation_fourfield(g: &StaggeredGrid, mid: &FourFieldState, coeffs: &PmlCoefficients) -> f64 {
    let ab: Vec<f64> = coeffs.cell.a.iter().zip(&coeffs.cell.b).map(|(a, b)| a * b).collect();
    let wx = edge_weight(coeffs, |e, k| e.g1[k] + e.g1[k] * e.ainv_g1[k]);
    let diff = mid.chi.zip_map(&mid.lambda, |x, l| x - l);
    sq_cell(g, &mid.p.data, &ab) + sq_edge(g, &mid.chi, &wx) + sq_edge(g, &diff, &coeffs.ainv_b())
}

/// Per-step balance of the four-field scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourFieldBalance {
    pub e_old: f64,
    pub e_new: f64,
    pub dissipation: f64,
    /// `D_t E + D - (f, Q)`.
    pub residual: f64,
}

impl FourFieldBalance {
    pub fn relative(&self, tau: f64) -> f64 {
        tau * self.residual.abs() / self.e_old.max(self.e_new).max(f64::MIN_POSITIVE)
    }
}

pub fn fourfield_balance(
    g: &StaggeredGrid,
    old: &FourFieldState,
    new: &FourFieldState,
    coeffs: &PmlCoefficients,
    tau: f64,
    forcing: Option<&[f64]>,
) -> FourFieldBalance {
    let e_old = energy_fourfield(g, old, coeffs);
    let e_new = energy_fourfield(g, new, coeffs);
    let mid = midpoint(old, new);
    let d = dissipation_fourfield(g, &mid, coeffs);
    let work = forcing.map_or(0.0, |f| inner_cell(g, f, &mid.q.data, None));
    FourFieldBalance { e_old, e_new, dissipation: d, residual: (e_new - e_old) / tau + d - work }
}

/// Two consecutive levels viewed at the half step.
struct HalfStep {
    ap: Vec<f64>,
    q: Vec<f64>,
    achi: EdgeField,
    alam: EdgeField,
    mean_sq: Vec<f64>,
}

fn half_step(
    g: &StaggeredGrid,
    p0: &[f64],
    p1: &[f64],
    l0: &EdgeField,
    l1: &EdgeField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> HalfStep {
    let (c, tau) = (params.c, params.tau);
    let n = g.n_cells();
    let ap: Vec<f64> = (0..n).map(|k| 0.5 * (p0[k] + p1[k])).collect();
    let q: Vec<f64> = (0..n).map(|k| (p1[k] - p0[k]) / tau + coeffs.cell.a[k] * ap[k]).collect();
    let mean_sq: Vec<f64> = (0..n).map(|k| 0.5 * (p0[k] * p0[k] + p1[k] * p1[k])).collect();
    let alam = l0.zip_map(l1, |a, b| 0.5 * (a + b));
    let mut gap = EdgeField::zeros(g);
    ops::grad_plus_into(g, &ap, &mut gap);
    let achi = gap.zip_map(&alam, |gp, l| c * gp + l);
    HalfStep { ap, q, achi, alam, mean_sq }
}

fn theta(coeffs: &PmlCoefficients, emb: &EmbeddingField, params: &ModelParams) -> Vec<f64> {
    (0..emb.psi.len()).map(|k| coeffs.cell.b[k] * emb.psi[k] + emb.w[k] / params.eta_d).collect()
}

/// Weighted energy at the half step `n + 1/2`, with `emb` sampled at `t^{n+1}`.
pub fn energy_embedded(
    g: &StaggeredGrid,
    p: (&CellField, &CellField),
    lambda: (&EdgeField, &EdgeField),
    emb: &EmbeddingField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> f64 {
    let h = half_step(g, &p.0.data, &p.1.data, lambda.0, lambda.1, coeffs, params);
    let beta_out: Vec<f64> = emb.psi.iter().map(|psi| params.beta * (1.0 - psi)).collect();
    0.5 * (sq_cell(g, &h.q, &emb.psi)
        + sq_edge(g, &h.achi, &emb.psi_edge)
        + sq_edge(g, &h.alam, &coeffs.ainv_g1())
        + sq_cell(g, &h.ap, &theta(coeffs, emb, params))
        + inner_cell(g, &beta_out, &h.mean_sq, None))
}

/// Staggered energy of the fixed-geometry two-field scheme.
pub fn energy_leapfrog_staggered(
    g: &StaggeredGrid,
    p: (&CellField, &CellField),
    lambda: (&EdgeField, &EdgeField),
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> f64 {
    let h = half_step(g, &p.0.data, &p.1.data, lambda.0, lambda.1, coeffs, params);
    0.5 * (inner_cell(g, &h.q, &h.q, None)
        + inner_edge(g, &h.achi, &h.achi, None)
        + sq_cell(g, &h.ap, &coeffs.cell.b)
        + sq_edge(g, &h.alam, &coeffs.ainv_g1()))
}

/// Three consecutive levels centred at step `n`.
struct Centered {
    a2p: Vec<f64>,
    d2t: Vec<f64>,
    a2chi: EdgeField,
    grad_a2p: EdgeField,
}

fn centered(g: &StaggeredGrid, before: &WaveState, after: &WaveState, params: &ModelParams) -> Centered {
    let (c, tau) = (params.c, params.tau);
    let (pm, p, pp) = (&before.p_prev.data, &before.p_curr.data, &after.p_curr.data);
    let n = g.n_cells();
    let a2p: Vec<f64> = (0..n).map(|k| 0.25 * (pp[k] + 2.0 * p[k] + pm[k])).collect();
    let d2t: Vec<f64> = (0..n).map(|k| (pp[k] - pm[k]) / (2.0 * tau)).collect();
    let (lm, l, lp) = (&before.lambda_prev, &before.lambda_curr, &after.lambda_curr);
    let a2l = EdgeField {
        nx: g.nx,
        ny: g.ny,
        x: (0..l.x.len()).map(|k| 0.25 * (lp.x[k] + 2.0 * l.x[k] + lm.x[k])).collect(),
        y: (0..l.y.len()).map(|k| 0.25 * (lp.y[k] + 2.0 * l.y[k] + lm.y[k])).collect(),
    };
    let mut grad_a2p = EdgeField::zeros(g);
    ops::grad_plus_into(g, &a2p, &mut grad_a2p);
    let a2chi = grad_a2p.zip_map(&a2l, |gp, l| c * gp + l);
    Centered { a2p, d2t, a2chi, grad_a2p }
}

/// Dissipation at step `n`; `before` holds levels `n-1, n`, `after` holds `n, n+1`.
pub fn dissipation_embedded(
    g: &StaggeredGrid,
    before: &WaveState,
    after: &WaveState,
    emb_next: &EmbeddingField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> f64 {
    let cz = centered(g, before, after, params);
    let ab: Vec<f64> = coeffs.cell.a.iter().zip(&coeffs.cell.b).map(|(a, b)| a * b).collect();
    let damp: Vec<f64> = emb_next.psi.iter().map(|psi| (params.alpha + params.tau * params.beta) * (1.0 - psi)).collect();
    let wchi = edge_weight(coeffs, |e, k| e.g1[k] * (1.0 + e.ainv_g1[k]));
    sq_cell(g, &cz.a2p, &ab)
        + sq_cell(g, &cz.d2t, &damp)
        + sq_edge(g, &cz.a2chi, &wchi)
        + params.c * params.c * sq_edge(g, &cz.grad_a2p, &coeffs.ainv_b())
}

/// Remainder generated by the motion of the indicator between `t^n` and `t^{n+1}`.
pub fn remainder_embedded(
    g: &StaggeredGrid,
    before: &WaveState,
    emb_curr: &EmbeddingField,
    emb_next: &EmbeddingField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> f64 {
    let tau = params.tau;
    let h = half_step(g, &before.p_prev.data, &before.p_curr.data, &before.lambda_prev, &before.lambda_curr, coeffs, params);
    let n = g.n_cells();
    let dpsi: Vec<f64> = (0..n).map(|k| (emb_next.psi[k] - emb_curr.psi[k]) / tau).collect();
    if dpsi.iter().all(|v| *v == 0.0) && emb_next.w == emb_curr.w && emb_next.psi_edge == emb_curr.psi_edge {
        return 0.0;
    }
    let dpsi_e = emb_next.psi_edge.zip_map(&emb_curr.psi_edge, |a, b| (a - b) / tau);
    let dpsi_lam = EdgeField {
        nx: g.nx,
        ny: g.ny,
        x: (0..dpsi_e.x.len()).map(|k| dpsi_e.x[k] * coeffs.xe.ainv_g1[k]).collect(),
        y: (0..dpsi_e.y.len()).map(|k| dpsi_e.y[k] * coeffs.ye.ainv_g1[k]).collect(),
    };
    let theta_dot: Vec<f64> = (0..n).map(|k| coeffs.cell.b[k] * dpsi[k] + (emb_next.w[k] - emb_curr.w[k]) / (tau * params.eta_d)).collect();
    let beta_dpsi: Vec<f64> = dpsi.iter().map(|d| params.beta * d).collect();
    0.5 * (sq_cell(g, &h.q, &dpsi) + sq_edge(g, &h.achi, &dpsi_e) + sq_edge(g, &h.alam, &dpsi_lam) + sq_cell(g, &h.ap, &theta_dot)
        - inner_cell(g, &beta_dpsi, &h.mean_sq, None))
}

/// Work done by the source: `(psi A^2 f, D_2t p + a A^2 p)`.
pub fn source_work(
    g: &StaggeredGrid,
    before: &WaveState,
    after: &WaveState,
    emb_next: &EmbeddingField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
    forcing: &[f64],
) -> f64 {
    let cz = centered(g, before, after, params);
    let v: Vec<f64> = (0..g.n_cells()).map(|k| cz.d2t[k] + coeffs.cell.a[k] * cz.a2p[k]).collect();
    let pf: Vec<f64> = (0..g.n_cells()).map(|k| emb_next.psi[k] * forcing[k]).collect();
    inner_cell(g, &pf, &v, None)
}

/// `K(u) = grad(a u) - a grad u`, nonzero where the damping varies in space.
pub fn damping_commutator(g: &StaggeredGrid, coeffs: &PmlCoefficients, u: &[f64]) -> EdgeField {
    let au: Vec<f64> = u.iter().zip(&coeffs.cell.a).map(|(u, a)| u * a).collect();
    let mut k = EdgeField::zeros(g);
    let mut gu = EdgeField::zeros(g);
    ops::grad_plus_into(g, &au, &mut k);
    ops::grad_plus_into(g, u, &mut gu);
    for e in 0..k.x.len() {
        k.x[e] -= coeffs.xe.a[e] * gu.x[e];
    }
    for e in 0..k.y.len() {
        k.y[e] -= coeffs.ye.a[e] * gu.y[e];
    }
    k
}

/// Balance term `-c (psi A^2 chi, K(A^2 p))_e` left over by the spatially varying damping.
pub fn commutator_work(
    g: &StaggeredGrid,
    before: &WaveState,
    after: &WaveState,
    emb_next: &EmbeddingField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
) -> f64 {
    let cz = centered(g, before, after, params);
    let k = damping_commutator(g, coeffs, &cz.a2p);
    -params.c * inner_edge(g, &cz.a2chi, &k, Some(&emb_next.psi_edge))
}

/// `D_t^- E + D - R - S`.
pub fn energy_identity_residual(e_prev: f64, e_next: f64, d: f64, r: f64, s: f64, tau: f64) -> f64 {
    (e_next - e_prev) / tau + d - r - s
}

/// All terms of the discrete energy balance for one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepBalance {
    pub e_prev: f64,
    pub e_next: f64,
    pub dissipation: f64,
    pub remainder: f64,
    pub source_work: f64,
    pub commutator: f64,
    /// `D_t^- E + D - R - S`.
    pub residual: f64,
}

impl StepBalance {
    /// Residual after also accounting for the commutator term.
    pub fn corrected_residual(&self) -> f64 {
        self.residual - self.commutator
    }

    /// `tau |residual| / E`, the per-step relative balance error.
    pub fn relative(&self, tau: f64) -> f64 {
        tau * self.residual.abs() / self.scale()
    }

    pub fn relative_corrected(&self, tau: f64) -> f64 {
        tau * self.corrected_residual().abs() / self.scale()
    }

    fn scale(&self) -> f64 {
        self.e_prev.max(self.e_next).max(f64::MIN_POSITIVE)
    }
}

/// Evaluates the balance between `before` (levels n-1, n) and `after` (levels n, n+1).
#[allow(clippy::too_many_arguments)]
pub fn step_balance(
    g: &StaggeredGrid,
    before: &WaveState,
    after: &WaveState,
    emb_curr: &EmbeddingField,
    emb_next: &EmbeddingField,
    coeffs: &PmlCoefficients,
    params: &ModelParams,
    forcing: Option<&[f64]>,
) -> StepBalance {
    let e_prev = energy_embedded(g, (&before.p_prev, &before.p_curr), (&before.lambda_prev, &before.lambda_curr), emb_curr, coeffs, params);
    let e_next = energy_embedded(g, (&after.p_prev, &after.p_curr), (&after.lambda_prev, &after.lambda_curr), emb_next, coeffs, params);
    let dissipation = dissipation_embedded(g, before, after, emb_next, coeffs, params);
    let remainder = remainder_embedded(g, before, emb_curr, emb_next, coeffs, params);
    let source_work = forcing.map_or(0.0, |f| source_work(g, before, after, emb_next, coeffs, params, f));
    let commutator = commutator_work(g, before, after, emb_next, coeffs, params);
    let residual = energy_identity_residual(e_prev, e_next, dissipation, remainder, source_work, params.tau);
    StepBalance { e_prev, e_next, dissipation, remainder, source_work, commutator, residual }
}

/// Cells and edges counted in the physical energy.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysRegion {
    pub cell: Vec<bool>,
    pub xe: Vec<bool>,
    pub ye: Vec<bool>,
}

impl PhysRegion {
    /// Inside the physical box and on the wave side (`psi >= threshold`).
    pub fn new(g: &StaggeredGrid, emb: &EmbeddingField, layout: &PmlLayout, threshold: f64) -> Self {
        let mut cell = Vec::with_capacity(g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.cell_center(i, j);
                cell.push(layout.in_physical(x, y) && emb.psi[g.cell(i, j)] >= threshold);
            }
        }
        let mut xe = Vec::with_capacity(g.n_xedges());
        for j in 0..g.ny {
            for i in 0..g.nx - 1 {
                let (x, y) = g.xedge_point(i, j);
                xe.push(layout.in_physical(x, y) && emb.psi_edge.x[g.xedge(i, j)] >= threshold);
            }
        }
        let mut ye = Vec::with_capacity(g.n_yedges());
        for j in 0..g.ny - 1 {
            for i in 0..g.nx {
                let (x, y) = g.yedge_point(i, j);
                ye.push(layout.in_physical(x, y) && emb.psi_edge.y[g.yedge(i, j)] >= threshold);
            }
        }
        Self { cell, xe, ye }
    }

    /// Keeps only entries also selected by `other`.
    pub fn restrict_to(&mut self, cell: &[bool], xe: &[bool], ye: &[bool]) {
        for (a, b) in self.cell.iter_mut().zip(cell) {
            *a &= *b;
        }
        for (a, b) in self.xe.iter_mut().zip(xe) {
            *a &= *b;
        }
        for (a, b) in self.ye.iter_mut().zip(ye) {
            *a &= *b;
        }
    }
}

/// `1/2 (|D_t p|^2 + c^2 |grad A_t p|^2)` over the selected region.
pub fn energy_physical(g: &StaggeredGrid, p: (&CellField, &CellField), region: &PhysRegion, c: f64, tau: f64) -> f64 {
    let n = g.n_cells();
    let (p0, p1) = (&p.0.data, &p.1.data);
    let kin = reduce::sum_by(0, n, |k| {
        if region.cell[k] {
            let d = (p1[k] - p0[k]) / tau;
            d * d
        } else {
            0.0
        }
    });
    let ap: Vec<f64> = (0..n).map(|k| 0.5 * (p0[k] + p1[k])).collect();
    let mut gp = EdgeField::zeros(g);
    ops::grad_plus_into(g, &ap, &mut gp);
    let gx = reduce::sum_by(0, gp.x.len(), |e| if region.xe[e] { gp.x[e] * gp.x[e] } else { 0.0 });
    let gy = reduce::sum_by(0, gp.y.len(), |e| if region.ye[e] { gp.y[e] * gp.y[e] } else { 0.0 });
    0.5 * g.cell_area() * (kin + c * c * (gx + gy))
}
