use super::StepContext;
use crate::error::Result;
use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::ops;
use crate::pml::EdgeCoeffs;
use crate::solver::{self, LinearOperator, SolveReport, Symmetry};

/// `(p, q, chi, lambda)` with `q = p_t + a p` and `chi = c grad p + lambda` when consistent.
#[derive(Clone, Debug, PartialEq)]
pub struct FourFieldState {
    pub p: CellField,
    pub q: CellField,
    pub chi: EdgeField,
    pub lambda: EdgeField,
    pub t: f64,
    pub n: u64,
}

impl FourFieldState {
    pub fn zeros(g: &StaggeredGrid) -> Self {
        Self { p: CellField::zeros(g), q: CellField::zeros(g), chi: EdgeField::zeros(g), lambda: EdgeField::zeros(g), t: 0.0, n: 0 }
    }

    /// Consistent data from `p`, `p_t` with `lambda = 0`.
    pub fn from_pressure(g: &StaggeredGrid, p: &CellField, pt: &CellField, a: &[f64], c: f64) -> Self {
        let q = CellField { nx: g.nx, ny: g.ny, data: (0..g.n_cells()).map(|k| pt.data[k] + a[k] * p.data[k]).collect() };
        let chi = ops::grad_plus(g, p).map(|v| c * v);
        Self { p: p.clone(), q, chi, lambda: EdgeField::zeros(g), t: 0.0, n: 0 }
    }
}

/// Constraint `r = chi - c grad p - lambda`.
pub fn constraint_residual(g: &StaggeredGrid, s: &FourFieldState, c: f64) -> EdgeField {
    let gp = ops::grad_plus(g, &s.p);
    let mut r = s.chi.clone();
    for k in 0..r.x.len() {
        r.x[k] -= c * gp.x[k] + s.lambda.x[k];
    }
    for k in 0..r.y.len() {
        r.y[k] -= c * gp.y[k] + s.lambda.y[k];
    }
    r
}

/// Per-edge elimination coefficients for the midpoint system.
struct EdgeElim {
    /// `1 / m`, `m = 2/tau + 2 g1 - g1 g2 / (2/tau + gt)`.
    inv_m: Vec<f64>,
    /// `g1 / (2/tau + gt)`: the Lambda coupling into the chi row.
    lam_gain: Vec<f64>,
    inv_lam_den: Vec<f64>,
}

impl EdgeElim {
    fn new(e: &EdgeCoeffs, tau: f64) -> Self {
        let s = 2.0 / tau;
        let n = e.g1.len();
        let mut out = EdgeElim { inv_m: vec![0.0; n], lam_gain: vec![0.0; n], inv_lam_den: vec![0.0; n] };
        for k in 0..n {
            let den = s + e.gt[k];
            let m = s + 2.0 * e.g1[k] - e.g1[k] * e.g2[k] / den;
            out.inv_m[k] = 1.0 / m;
            out.lam_gain[k] = e.g1[k] / den;
            out.inv_lam_den[k] = 1.0 / den;
        }
        out
    }
}

struct SchurOperator<'a> {
    grid: &'a StaggeredGrid,
    diag: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
}

impl LinearOperator for SchurOperator<'_> {
    fn len(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        ops::apply_stencil(self.grid, &self.wx, &self.wy, x, y);
        for k in 0..x.len() {
            y[k] = self.diag[k] * x[k] - y[k];
        }
    }
    fn symmetry(&self) -> Symmetry {
        Symmetry::Symmetric
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        let mut s = vec![0.0; self.diag.len()];
        ops::stencil_diagonal(self.grid, &self.wx, &self.wy, &mut s);
        Some(self.diag.iter().zip(&s).map(|(d, s)| d - s).collect())
    }
}

/// Outcome of one Crank-Nicolson step.
#[derive(Clone, Debug)]
pub struct FourFieldOutcome {
    pub state: FourFieldState,
    pub report: SolveReport,
}

impl From<FourFieldOutcome> for (FourFieldState, SolveReport) {
    fn from(o: FourFieldOutcome) -> Self {
        (o.state, o.report)
    }
}

/// Midpoint step of the four-field gradient-flow system.
///
/// All fields except the midpoint `Q` are eliminated pointwise, leaving one
/// symmetric positive definite solve. `forcing` enters the `q` row at the midpoint.
pub fn cn_step_fourfield(ctx: &StepContext, s: &FourFieldState, forcing: Option<&[f64]>) -> Result<FourFieldOutcome> {
    let g = ctx.grid;
    let (c, tau) = (ctx.params.c, ctx.params.tau);
    let sc = 2.0 / tau;
    let cells = &ctx.coeffs.cell;
    let ex = EdgeElim::new(&ctx.coeffs.xe, tau);
    let ey = EdgeElim::new(&ctx.coeffs.ye, tau);

    // h = (2/tau) chi + (2/tau) g1 lambda / (2/tau + gt), later divided by m.
    let mut h_over_m = EdgeField::zeros(g);
    for k in 0..h_over_m.x.len() {
        h_over_m.x[k] = sc * (s.chi.x[k] + ex.lam_gain[k] * s.lambda.x[k]) * ex.inv_m[k];
    }
    for k in 0..h_over_m.y.len() {
        h_over_m.y[k] = sc * (s.chi.y[k] + ey.lam_gain[k] * s.lambda.y[k]) * ey.inv_m[k];
    }
    let mut rhs = vec![0.0; g.n_cells()];
    ops::div_minus_weighted_into(g, None, &h_over_m, &mut rhs);
    let mut diag = vec![0.0; g.n_cells()];
    for k in 0..g.n_cells() {
        let pd = sc + cells.a[k];
        diag[k] = sc + cells.b[k] / pd;
        rhs[k] = sc * s.q.data[k] - cells.b[k] * sc * s.p.data[k] / pd + c * rhs[k];
        if let Some(f) = forcing {
            rhs[k] += f[k];
        }
    }
    let wx: Vec<f64> = ex.inv_m.iter().map(|v| c * c * v / (g.hx * g.hx)).collect();
    let wy: Vec<f64> = ey.inv_m.iter().map(|v| c * c * v / (g.hy * g.hy)).collect();
    let op = SchurOperator { grid: g, diag, wx, wy };
    let (qm, report) = solver::solve_checked(&op, &rhs, &s.q.data, ctx.solver)?;

    let mut gq = EdgeField::zeros(g);
    ops::grad_plus_into(g, &qm, &mut gq);
    let mut next = FourFieldState::zeros(g);
    for k in 0..g.n_cells() {
        let pm = (sc * s.p.data[k] + qm[k]) / (sc + cells.a[k]);
        next.p.data[k] = 2.0 * pm - s.p.data[k];
        next.q.data[k] = 2.0 * qm[k] - s.q.data[k];
    }
    let advance_edges =
        |e: &EdgeElim, co: &EdgeCoeffs, hm: &[f64], gq: &[f64], chi: &[f64], lam: &[f64], chi_out: &mut [f64], lam_out: &mut [f64]| {
            for k in 0..hm.len() {
                let xm = hm[k] + c * gq[k] * e.inv_m[k];
                let lm = (sc * lam[k] + co.g2[k] * xm) * e.inv_lam_den[k];
                chi_out[k] = 2.0 * xm - chi[k];
                lam_out[k] = 2.0 * lm - lam[k];
            }
        };
    advance_edges(&ex, &ctx.coeffs.xe, &h_over_m.x, &gq.x, &s.chi.x, &s.lambda.x, &mut next.chi.x, &mut next.lambda.x);
    advance_edges(&ey, &ctx.coeffs.ye, &h_over_m.y, &gq.y, &s.chi.y, &s.lambda.y, &mut next.chi.y, &mut next.lambda.y);
    next.t = s.t + tau;
    next.n = s.n + 1;
    Ok(FourFieldOutcome { state: next, report })
}
