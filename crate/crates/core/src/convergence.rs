//! Self-convergence studies on a smooth fixed-geometry problem.

use crate::amr::restrict_cells;
use crate::geometry::EmbeddingField;
use crate::grid::{CellField, StaggeredGrid};
use crate::ops;
use crate::pml::{PmlCoefficients, PmlLayout};
use crate::solver::SolverSettings;
use crate::stepper::{bootstrap_first_step, leapfrog_step_fixed, BoundaryKind, ModelParams, StepContext};
use crate::Result;

/// Errors between successive refinements and the observed orders.
#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub tau_levels: Vec<f64>,
    pub tau_errors: Vec<f64>,
    pub tau_order: f64,
    pub h_levels: Vec<usize>,
    pub h_errors: Vec<f64>,
    pub h_order: f64,
}

const T_END: f64 = 0.5;

fn layout() -> PmlLayout {
    PmlLayout::with_reflection(1.0, 1.0, 0.5, 0.5, 1.0, 1e-4)
}

fn solve(n: usize, tau: f64) -> Result<(StaggeredGrid, CellField)> {
    let lay = layout();
    let ((x0, x1), (y0, y1)) = lay.domain();
    let g = StaggeredGrid::new(n, n, (x0, x1), (y0, y1))?;
    let coeffs = PmlCoefficients::sample(&lay, &g)?;
    let prm = ModelParams { c: 1.0, tau, eta_d: 1.0, alpha: 0.0, beta: 1.0, psi_hat: 0.5, eta_n: 1.0, bc: BoundaryKind::Soft };
    let solver = SolverSettings::with_tol(1e-13);
    let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
    let p0 = CellField::from_fn(&g, |x, y| (-8.0 * ((x - 0.3).powi(2) + y * y)).exp());
    let emb = EmbeddingField::empty(&g, 0.0);
    let mut st = bootstrap_first_step(&ctx, &p0, &CellField::zeros(&g), &emb, None);
    let steps = (T_END / tau).round() as u64;
    while st.n < steps {
        st = leapfrog_step_fixed(&ctx, &st, None)?.state;
    }
    Ok((g, st.p_curr))
}

fn l2_diff(g: &StaggeredGrid, a: &CellField, b: &CellField) -> f64 {
    let d: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
    ops::inner_cell(g, &d, &d, None).sqrt()
}

/// Three `tau` on a fixed grid, then three grids at small `tau`.
pub fn study() -> Result<Study> {
    let tau_levels = vec![0.01, 0.005, 0.0025];
    let runs: Vec<_> = tau_levels.iter().map(|&t| solve(64, t)).collect::<Result<_>>()?;
    let tau_errors: Vec<f64> = runs.windows(2).map(|w| l2_diff(&w[0].0, &w[0].1, &w[1].1)).collect();

    let h_levels = vec![32, 64, 128];
    let runs: Vec<_> = h_levels.iter().map(|&n| solve(n, 1e-3)).collect::<Result<_>>()?;
    let h_errors: Vec<f64> = runs.windows(2).map(|w| l2_diff(&w[0].0, &w[0].1, &restrict_cells(&w[1].1, 2))).collect();

    let order = |e: &[f64]| (e[0] / e[1]).log2();
    Ok(Study { tau_order: order(&tau_errors), h_order: order(&h_errors), tau_levels, tau_errors, h_levels, h_errors })
}
