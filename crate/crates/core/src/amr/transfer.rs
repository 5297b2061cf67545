use crate::grid::{CellField, EdgeField, StaggeredGrid};

/// A rectangular sub-block of a level's global index space, with its own grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub oi: usize,
    pub oj: usize,
    pub grid: StaggeredGrid,
}

impl Window {
    pub fn full(g: &StaggeredGrid) -> Self {
        Self { oi: 0, oj: 0, grid: *g }
    }

    /// Sub-block `[i0, i1) x [j0, j1)` of `global`.
    pub fn of(global: &StaggeredGrid, i0: usize, j0: usize, i1: usize, j1: usize) -> Self {
        let grid = StaggeredGrid {
            nx: i1 - i0,
            ny: j1 - j0,
            hx: global.hx,
            hy: global.hy,
            x0: global.x0 + i0 as f64 * global.hx,
            y0: global.y0 + j0 as f64 * global.hy,
        };
        Self { oi: i0, oj: j0, grid }
    }

    pub fn contains_global(&self, gi: usize, gj: usize) -> bool {
        gi >= self.oi && gi < self.oi + self.grid.nx && gj >= self.oj && gj < self.oj + self.grid.ny
    }
}

/// Lower stencil index and fractional offset, clamped so values extrapolate linearly.
#[inline]
fn bracket(s: f64, n: usize) -> (usize, f64) {
    let i0 = s.floor().clamp(0.0, (n - 2) as f64);
    (i0 as usize, s - i0)
}

#[inline]
fn bilinear(v: &[f64], stride: usize, i: usize, j: usize, fx: f64, fy: f64) -> f64 {
    let a = v[j * stride + i];
    let b = v[j * stride + i + 1];
    let c = v[(j + 1) * stride + i];
    let d = v[(j + 1) * stride + i + 1];
    (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d)
}

/// Bilinear interpolation of parent cell data onto the child window's cell centers.
pub fn prolong_cells_window(parent: &Window, pv: &[f64], child: &Window, r: usize) -> Vec<f64> {
    let (pnx, pny) = (parent.grid.nx, parent.grid.ny);
    let rf = r as f64;
    let mut out = Vec::with_capacity(child.grid.n_cells());
    for j in 0..child.grid.ny {
        let sy = ((child.oj + j) as f64 + 0.5) / rf - 0.5 - parent.oj as f64;
        let (j0, fy) = bracket(sy, pny);
        for i in 0..child.grid.nx {
            let sx = ((child.oi + i) as f64 + 0.5) / rf - 0.5 - parent.oi as f64;
            let (i0, fx) = bracket(sx, pnx);
            out.push(bilinear(pv, pnx, i0, j0, fx, fy));
        }
    }
    out
}

/// Linear interpolation within each edge family onto the child window's edges.
pub fn prolong_edges_window(parent: &Window, pv: &EdgeField, child: &Window, r: usize) -> EdgeField {
    let (pnx, pny) = (parent.grid.nx, parent.grid.ny);
    let (cnx, cny) = (child.grid.nx, child.grid.ny);
    let rf = r as f64;
    let mut x = Vec::with_capacity(child.grid.n_xedges());
    for j in 0..cny {
        let sy = ((child.oj + j) as f64 + 0.5) / rf - 0.5 - parent.oj as f64;
        let (j0, fy) = bracket(sy, pny);
        for i in 0..cnx - 1 {
            let sx = ((child.oi + i) as f64 + 1.0) / rf - 1.0 - parent.oi as f64;
            let (i0, fx) = bracket(sx, pnx - 1);
            x.push(bilinear(&pv.x, pnx - 1, i0, j0, fx, fy));
        }
    }
    let mut y = Vec::with_capacity(child.grid.n_yedges());
    for j in 0..cny - 1 {
        let sy = ((child.oj + j) as f64 + 1.0) / rf - 1.0 - parent.oj as f64;
        let (j0, fy) = bracket(sy, pny - 1);
        for i in 0..cnx {
            let sx = ((child.oi + i) as f64 + 0.5) / rf - 0.5 - parent.oi as f64;
            let (i0, fx) = bracket(sx, pnx);
            y.push(bilinear(&pv.y, pnx, i0, j0, fx, fy));
        }
    }
    EdgeField { nx: cnx, ny: cny, x, y }
}

/// Whole-domain bilinear prolongation.
pub fn prolong_cells(coarse_grid: &StaggeredGrid, coarse: &CellField, r: usize) -> CellField {
    let fine = coarse_grid.refined(r);
    let data = prolong_cells_window(&Window::full(coarse_grid), &coarse.data, &Window::full(&fine), r);
    CellField { nx: fine.nx, ny: fine.ny, data }
}

pub fn prolong_edges(coarse_grid: &StaggeredGrid, coarse: &EdgeField, r: usize) -> EdgeField {
    let fine = coarse_grid.refined(r);
    prolong_edges_window(&Window::full(coarse_grid), coarse, &Window::full(&fine), r)
}

/// Mean of the `r x r` children of every coarse cell.
pub fn restrict_cells(fine: &CellField, r: usize) -> CellField {
    let (nx, ny) = (fine.nx / r, fine.ny / r);
    let inv = 1.0 / (r * r) as f64;
    let mut data = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut s = 0.0;
            for b in 0..r {
                for a in 0..r {
                    s += fine.get(r * i + a, r * j + b);
                }
            }
            data[j * nx + i] = s * inv;
        }
    }
    CellField { nx, ny, data }
}

/// Mean of the `r` fine edges aligned with every coarse edge.
pub fn restrict_edges(fine: &EdgeField, r: usize) -> EdgeField {
    let (fnx, _fny) = (fine.nx, fine.ny);
    let (nx, ny) = (fine.nx / r, fine.ny / r);
    let inv = 1.0 / r as f64;
    let mut x = vec![0.0; (nx - 1) * ny];
    for j in 0..ny {
        for i in 0..nx - 1 {
            let fi = r * (i + 1) - 1;
            let s: f64 = (0..r).map(|b| fine.x[(r * j + b) * (fnx - 1) + fi]).sum();
            x[j * (nx - 1) + i] = s * inv;
        }
    }
    let mut y = vec![0.0; nx * (ny - 1)];
    for j in 0..ny - 1 {
        let fj = r * (j + 1) - 1;
        for i in 0..nx {
            let s: f64 = (0..r).map(|a| fine.y[fj * fnx + r * i + a]).sum();
            y[j * nx + i] = s * inv;
        }
    }
    EdgeField { nx, ny, x, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> StaggeredGrid {
        StaggeredGrid::new(8, 6, (-1.0, 3.0), (0.0, 3.0)).unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        let c = CellField::constant(&g(), 2.5);
        assert!(prolong_cells(&g(), &c, 2).data.iter().all(|v| (*v - 2.5).abs() < 1e-15));
        let e = EdgeField::constant(&g(), 1.0, -3.0);
        let f = prolong_edges(&g(), &e, 2);
        assert!(f.x.iter().all(|v| (*v - 1.0).abs() < 1e-15));
        assert!(f.y.iter().all(|v| (*v + 3.0).abs() < 1e-15));
    }

    #[test]
    fn linears_are_exact() {
        let gc = g();
        let lin = |x: f64, y: f64| 0.3 + 2.0 * x - 1.5 * y;
        let fine = prolong_cells(&gc, &CellField::from_fn(&gc, lin), 2);
        let exact = CellField::from_fn(&gc.refined(2), lin);
        for (a, b) in fine.data.iter().zip(&exact.data) {
            assert!((a - b).abs() < 1e-13);
        }
        let fe = prolong_edges(&gc, &EdgeField::from_fns(&gc, lin, lin), 2);
        let ee = EdgeField::from_fns(&gc.refined(2), lin, lin);
        assert!(fe.zip_map(&ee, |a, b| a - b).max_abs() < 1e-13);
    }

    #[test]
    fn restrict_prolong_identity_on_linears() {
        let gc = g();
        let lin = |x: f64, y: f64| 1.0 - x + 4.0 * y;
        let c = CellField::from_fn(&gc, lin);
        let back = restrict_cells(&prolong_cells(&gc, &c, 2), 2);
        for (a, b) in back.data.iter().zip(&c.data) {
            assert!((a - b).abs() < 1e-13);
        }
        let e = EdgeField::from_fns(&gc, lin, lin);
        let eb = restrict_edges(&prolong_edges(&gc, &e, 2), 2);
        assert!(eb.zip_map(&e, |a, b| a - b).max_abs() < 1e-13);
    }

    #[test]
    fn checkerboard_restricts_to_zero() {
        let gf = g().refined(2);
        let mut f = CellField::zeros(&gf);
        for j in 0..gf.ny {
            for i in 0..gf.nx {
                f.set(i, j, if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        assert!(restrict_cells(&f, 2).data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn window_prolongation_matches_full() {
        let gc = g();
        let c = CellField::from_fn(&gc, |x, y| (x * y).sin());
        let full = prolong_cells(&gc, &c, 2);
        let gf = gc.refined(2);
        let pw = Window::of(&gc, 1, 1, 7, 5);
        let pv: Vec<f64> = (1..5).flat_map(|j| (1..7).map(move |i| (i, j))).map(|(i, j)| c.get(i, j)).collect();
        let cw = Window::of(&gf, 4, 3, 10, 8);
        let out = prolong_cells_window(&pw, &pv, &cw, 2);
        for j in 0..cw.grid.ny {
            for i in 0..cw.grid.nx {
                let v = out[j * cw.grid.nx + i];
                assert!((v - full.get(i + 4, j + 3)).abs() < 1e-14);
            }
        }
    }
}
