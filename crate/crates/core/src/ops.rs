//! Difference operators and discrete inner products on the staggered grid.

use crate::grid::{CellField, EdgeField, StaggeredGrid};
use crate::reduce;

/// Forward differences of a cell field onto interior edges.
pub fn grad_plus(g: &StaggeredGrid, u: &CellField) -> EdgeField {
    let mut out = EdgeField::zeros(g);
    grad_plus_into(g, &u.data, &mut out);
    out
}

pub fn grad_plus_into(g: &StaggeredGrid, u: &[f64], out: &mut EdgeField) {
    let (nx, ny) = (g.nx, g.ny);
    let (ihx, ihy) = (1.0 / g.hx, 1.0 / g.hy);
    for j in 0..ny {
        let row = &u[j * nx..(j + 1) * nx];
        let dst = &mut out.x[j * (nx - 1)..(j + 1) * (nx - 1)];
        for i in 0..nx - 1 {
            dst[i] = (row[i + 1] - row[i]) * ihx;
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            out.y[j * nx + i] = (u[(j + 1) * nx + i] - u[j * nx + i]) * ihy;
        }
    }
}

/// Weighted divergence `div(omega * v)` with zero flux through the outer boundary.
pub fn div_minus_weighted(g: &StaggeredGrid, omega: Option<&EdgeField>, v: &EdgeField) -> CellField {
    let mut out = CellField::zeros(g);
    div_minus_weighted_into(g, omega, v, &mut out.data);
    out
}

pub fn div_minus_weighted_into(g: &StaggeredGrid, omega: Option<&EdgeField>, v: &EdgeField, out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let (ihx, ihy) = (1.0 / g.hx, 1.0 / g.hy);
    let fx = |e: usize| match omega {
        Some(w) => w.x[e] * v.x[e],
        None => v.x[e],
    };
    let fy = |e: usize| match omega {
        Some(w) => w.y[e] * v.y[e],
        None => v.y[e],
    };
    for j in 0..ny {
        for i in 0..nx {
            let east = if i + 1 < nx { fx(j * (nx - 1) + i) } else { 0.0 };
            let west = if i > 0 { fx(j * (nx - 1) + i - 1) } else { 0.0 };
            let north = if j + 1 < ny { fy(j * nx + i) } else { 0.0 };
            let south = if j > 0 { fy((j - 1) * nx + i) } else { 0.0 };
            out[j * nx + i] = (east - west) * ihx + (north - south) * ihy;
        }
    }
}

/// Five-point weighted Laplacian `div(omega * grad u)`.
pub fn laplace_weighted(g: &StaggeredGrid, omega: Option<&EdgeField>, u: &CellField) -> CellField {
    let mut out = CellField::zeros(g);
    let (wx, wy) = stencil_weights(g, omega, 1.0);
    apply_stencil(g, &wx, &wy, &u.data, &mut out.data);
    out
}

/// Edge weights scaled by `s / h^2`, ready for [`apply_stencil`].
pub fn stencil_weights(g: &StaggeredGrid, omega: Option<&EdgeField>, s: f64) -> (Vec<f64>, Vec<f64>) {
    let cx = s / (g.hx * g.hx);
    let cy = s / (g.hy * g.hy);
    match omega {
        Some(w) => (w.x.iter().map(|v| v * cx).collect(), w.y.iter().map(|v| v * cy).collect()),
        None => (vec![cx; g.n_xedges()], vec![cy; g.n_yedges()]),
    }
}

/// `out = sum over neighbours of w_e (u_nb - u_c)`, with pre-scaled edge weights.
pub fn apply_stencil(g: &StaggeredGrid, wx: &[f64], wy: &[f64], u: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            let uc = u[c];
            let mut acc = 0.0;
            if i + 1 < nx {
                acc += wx[j * (nx - 1) + i] * (u[c + 1] - uc);
            }
            if i > 0 {
                acc -= wx[j * (nx - 1) + i - 1] * (uc - u[c - 1]);
            }
            if j + 1 < ny {
                acc += wy[j * nx + i] * (u[c + nx] - uc);
            }
            if j > 0 {
                acc -= wy[(j - 1) * nx + i] * (uc - u[c - nx]);
            }
            out[c] = acc;
        }
    }
}

/// Diagonal of the stencil from [`apply_stencil`].
pub fn stencil_diagonal(g: &StaggeredGrid, wx: &[f64], wy: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        for i in 0..nx {
            let mut d = 0.0;
            if i + 1 < nx {
                d -= wx[j * (nx - 1) + i];
            }
            if i > 0 {
                d -= wx[j * (nx - 1) + i - 1];
            }
            if j + 1 < ny {
                d -= wy[j * nx + i];
            }
            if j > 0 {
                d -= wy[(j - 1) * nx + i];
            }
            out[j * nx + i] = d;
        }
    }
}

/// `hx hy sum w u v` over cells.
pub fn inner_cell(g: &StaggeredGrid, u: &[f64], v: &[f64], weight: Option<&[f64]>) -> f64 {
    let s = match weight {
        Some(w) => reduce::wdot(w, u, v),
        None => reduce::dot(u, v),
    };
    g.cell_area() * s
}

/// `hx hy sum w v . u` over interior edges, with a diagonal per-edge weight.
pub fn inner_edge(g: &StaggeredGrid, v: &EdgeField, u: &EdgeField, weight: Option<&EdgeField>) -> f64 {
    let s = match weight {
        Some(w) => reduce::wdot(&w.x, &v.x, &u.x) + reduce::wdot(&w.y, &v.y, &u.y),
        None => reduce::dot(&v.x, &u.x) + reduce::dot(&v.y, &u.y),
    };
    g.cell_area() * s
}

/// `(D^omega v, u)_h + (v, grad u)_{omega,e}`; zero up to roundoff.
pub fn sbp_residual(g: &StaggeredGrid, omega: Option<&EdgeField>, u: &CellField, v: &EdgeField) -> f64 {
    let dv = div_minus_weighted(g, omega, v);
    let gu = grad_plus(g, u);
    inner_cell(g, &dv.data, &u.data, None) + inner_edge(g, v, &gu, omega)
}
