use crate::grid::StaggeredGrid;
use crate::ops;
use crate::solver::{LinearOperator, Symmetry};

/// Cells whose new value is prescribed (ghost cells of a refined level).
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub fixed: Vec<bool>,
    pub values: Vec<f64>,
}

/// `u -> d u - S u - G u` on cells.
///
/// `S` is a weighted five-point Laplacian with pre-scaled edge weights and
/// `G` an optional advective coupling `kappa (grad psi . grad u)`, averaged
/// from the two adjacent edges per direction. Prescribed cells map to the
/// identity and are read as zero.
pub struct ThreeLevelOperator<'a> {
    pub grid: &'a StaggeredGrid,
    pub diag: Vec<f64>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    /// Per-edge coefficients `kappa_c * dpsi/2h` for the two cells sharing each edge.
    pub advect: Option<Advection>,
    pub fixed: Option<&'a [bool]>,
}

/// For each edge, the weight applied to the difference across it from its
/// lower (`lo`) and upper (`hi`) cell.
pub struct Advection {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
}

impl Advection {
    /// `kappa_c * (grad psi . grad u)_c` with edge-averaged products.
    pub fn new(g: &StaggeredGrid, kappa: &[f64], psi: &[f64]) -> Self {
        let (nx, ny) = (g.nx, g.ny);
        let mut a = Advection {
            x_lo: vec![0.0; g.n_xedges()],
            x_hi: vec![0.0; g.n_xedges()],
            y_lo: vec![0.0; g.n_yedges()],
            y_hi: vec![0.0; g.n_yedges()],
        };
        for j in 0..ny {
            for i in 0..nx - 1 {
                let e = j * (nx - 1) + i;
                let (c0, c1) = (j * nx + i, j * nx + i + 1);
                let dpsi = (psi[c1] - psi[c0]) / g.hx;
                let s = 0.5 * dpsi / g.hx;
                a.x_lo[e] = kappa[c0] * s;
                a.x_hi[e] = kappa[c1] * s;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let e = j * nx + i;
                let (c0, c1) = (j * nx + i, (j + 1) * nx + i);
                let dpsi = (psi[c1] - psi[c0]) / g.hy;
                let s = 0.5 * dpsi / g.hy;
                a.y_lo[e] = kappa[c0] * s;
                a.y_hi[e] = kappa[c1] * s;
            }
        }
        a
    }

    pub fn is_zero(&self) -> bool {
        self.x_lo.iter().chain(&self.x_hi).chain(&self.y_lo).chain(&self.y_hi).all(|v| *v == 0.0)
    }

    /// Adds the coupling applied to `u` into `out`.
    pub fn apply_add(&self, g: &StaggeredGrid, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (g.nx, g.ny);
        for j in 0..ny {
            for i in 0..nx - 1 {
                let e = j * (nx - 1) + i;
                let (c0, c1) = (j * nx + i, j * nx + i + 1);
                let du = u[c1] - u[c0];
                out[c0] += self.x_lo[e] * du;
                out[c1] += self.x_hi[e] * du;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let e = j * nx + i;
                let (c0, c1) = (j * nx + i, (j + 1) * nx + i);
                let du = u[c1] - u[c0];
                out[c0] += self.y_lo[e] * du;
                out[c1] += self.y_hi[e] * du;
            }
        }
    }

    fn diagonal_add(&self, g: &StaggeredGrid, out: &mut [f64]) {
        let (nx, ny) = (g.nx, g.ny);
        for j in 0..ny {
            for i in 0..nx - 1 {
                let e = j * (nx - 1) + i;
                out[j * nx + i] -= self.x_lo[e];
                out[j * nx + i + 1] += self.x_hi[e];
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let e = j * nx + i;
                out[j * nx + i] -= self.y_lo[e];
                out[(j + 1) * nx + i] += self.y_hi[e];
            }
        }
    }
}

impl<'a> ThreeLevelOperator<'a> {
    /// Unconstrained application, ignoring `fixed`.
    pub fn apply_raw(&self, x: &[f64], y: &mut [f64]) {
        ops::apply_stencil(self.grid, &self.wx, &self.wy, x, y);
        for k in 0..x.len() {
            y[k] = self.diag[k] * x[k] - y[k];
        }
        if let Some(adv) = &self.advect {
            let mut gterm = vec![0.0; x.len()];
            adv.apply_add(self.grid, x, &mut gterm);
            for k in 0..x.len() {
                y[k] -= gterm[k];
            }
        }
    }

    fn raw_diagonal(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.diag.len()];
        ops::stencil_diagonal(self.grid, &self.wx, &self.wy, &mut s);
        let mut d: Vec<f64> = self.diag.iter().zip(&s).map(|(m, s)| m - s).collect();
        if let Some(adv) = &self.advect {
            let mut gd = vec![0.0; d.len()];
            adv.diagonal_add(self.grid, &mut gd);
            for k in 0..d.len() {
                d[k] -= gd[k];
            }
        }
        d
    }
}

impl LinearOperator for ThreeLevelOperator<'_> {
    fn len(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self.fixed {
            None => self.apply_raw(x, y),
            Some(mask) => {
                let xm: Vec<f64> = x.iter().zip(mask).map(|(v, f)| if *f { 0.0 } else { *v }).collect();
                self.apply_raw(&xm, y);
                for k in 0..y.len() {
                    if mask[k] {
                        y[k] = x[k];
                    }
                }
            }
        }
    }

    fn symmetry(&self) -> Symmetry {
        match &self.advect {
            Some(a) if !a.is_zero() => Symmetry::General,
            _ => Symmetry::Symmetric,
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let mut d = self.raw_diagonal();
        if let Some(mask) = self.fixed {
            for k in 0..d.len() {
                if mask[k] {
                    d[k] = 1.0;
                }
            }
        }
        Some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::probe_diagonal;

    #[test]
    fn analytic_diagonal_matches_probe() {
        let g = StaggeredGrid::new(7, 6, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let psi: Vec<f64> = (0..g.n_cells()).map(|k| (k as f64 * 0.37).sin().abs()).collect();
        let kappa: Vec<f64> = (0..g.n_cells()).map(|k| 0.1 + (k % 5) as f64).collect();
        let mask: Vec<bool> = (0..g.n_cells()).map(|k| k % 11 == 0).collect();
        let op = ThreeLevelOperator {
            grid: &g,
            diag: (0..g.n_cells()).map(|k| 2.0 + k as f64 * 0.01).collect(),
            wx: (0..g.n_xedges()).map(|k| 0.5 + (k % 3) as f64).collect(),
            wy: (0..g.n_yedges()).map(|k| 1.5 + (k % 4) as f64).collect(),
            advect: Some(Advection::new(&g, &kappa, &psi)),
            fixed: Some(&mask),
        };
        assert_eq!(op.symmetry(), Symmetry::General);
        let probed = probe_diagonal(&op, g.nx, g.ny);
        let exact = op.diagonal().unwrap();
        for k in 0..g.n_cells() {
            assert!((probed[k] - exact[k]).abs() < 1e-12 * exact[k].abs().max(1.0));
        }
    }
}
