//! Cell/edge layout of the staggered Cartesian grid.
//!
//! Cells are indexed `j * nx + i`. The x-edge between cells `(i, j)` and
//! `(i + 1, j)` is stored at `j * (nx - 1) + i`; the y-edge between `(i, j)`
//! and `(i, j + 1)` at `j * nx + i`. Edges on the outer boundary are not
//! stored and are identically zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaggeredGrid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl StaggeredGrid {
    /// Grid with `nx * ny` cells spanning `[x0, x1] x [y0, y1]` exactly.
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidArgument(format!("grid must have at least 4x4 cells, got {nx}x{ny}")));
        }
        if !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(Error::InvalidArgument("grid extent must be positive".into()));
        }
        Ok(Self { nx, ny, hx: (x.1 - x.0) / nx as f64, hy: (y.1 - y.0) / ny as f64, x0: x.0, y0: y.0 })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_xedges(&self) -> usize {
        (self.nx - 1) * self.ny
    }
    pub fn n_yedges(&self) -> usize {
        self.nx * (self.ny - 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn xedge(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }
    #[inline]
    pub fn yedge(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 0.5) * self.hx, self.y0 + (j as f64 + 0.5) * self.hy)
    }
    pub fn xedge_point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 1.0) * self.hx, self.y0 + (j as f64 + 0.5) * self.hy)
    }
    pub fn yedge_point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 0.5) * self.hx, self.y0 + (j as f64 + 1.0) * self.hy)
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.nx as f64 * self.hx
    }
    pub fn y1(&self) -> f64 {
        self.y0 + self.ny as f64 * self.hy
    }
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Same extent, `ratio` times more cells per direction.
    pub fn refined(&self, ratio: usize) -> Self {
        Self { nx: self.nx * ratio, ny: self.ny * ratio, hx: self.hx / ratio as f64, hy: self.hy / ratio as f64, x0: self.x0, y0: self.y0 }
    }

    /// Cell containing the point, clamped to the grid.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        let fi = ((x - self.x0) / self.hx).floor().clamp(0.0, (self.nx - 1) as f64);
        let fj = ((y - self.y0) / self.hy).floor().clamp(0.0, (self.ny - 1) as f64);
        (fi as usize, fj as usize)
    }
}

/// Scalar values at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl CellField {
    pub fn zeros(g: &StaggeredGrid) -> Self {
        Self { nx: g.nx, ny: g.ny, data: vec![0.0; g.n_cells()] }
    }

    pub fn constant(g: &StaggeredGrid, v: f64) -> Self {
        Self { nx: g.nx, ny: g.ny, data: vec![v; g.n_cells()] }
    }

    pub fn from_fn(g: &StaggeredGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.cell_center(i, j);
                data.push(f(x, y));
            }
        }
        Self { nx: g.nx, ny: g.ny, data }
    }

    pub fn from_vec(g: &StaggeredGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != g.n_cells() {
            return Err(Error::InvalidArgument(format!("cell field needs {} values, got {}", g.n_cells(), data.len())));
        }
        Ok(Self { nx: g.nx, ny: g.ny, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    pub fn matches(&self, g: &StaggeredGrid) -> bool {
        self.nx == g.nx && self.ny == g.ny && self.data.len() == g.n_cells()
    }
}

/// Vector values on interior edges: x-components on x-edges, y-components on y-edges.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeField {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EdgeField {
    pub fn zeros(g: &StaggeredGrid) -> Self {
        Self { nx: g.nx, ny: g.ny, x: vec![0.0; g.n_xedges()], y: vec![0.0; g.n_yedges()] }
    }

    pub fn constant(g: &StaggeredGrid, vx: f64, vy: f64) -> Self {
        Self { nx: g.nx, ny: g.ny, x: vec![vx; g.n_xedges()], y: vec![vy; g.n_yedges()] }
    }

    /// Samples `fx` at x-edge midpoints and `fy` at y-edge midpoints.
    pub fn from_fns(g: &StaggeredGrid, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        let mut x = Vec::with_capacity(g.n_xedges());
        for j in 0..g.ny {
            for i in 0..g.nx - 1 {
                let (px, py) = g.xedge_point(i, j);
                x.push(fx(px, py));
            }
        }
        let mut y = Vec::with_capacity(g.n_yedges());
        for j in 0..g.ny - 1 {
            for i in 0..g.nx {
                let (px, py) = g.yedge_point(i, j);
                y.push(fy(px, py));
            }
        }
        Self { nx: g.nx, ny: g.ny, x, y }
    }

    pub fn matches(&self, g: &StaggeredGrid) -> bool {
        self.nx == g.nx && self.ny == g.ny && self.x.len() == g.n_xedges() && self.y.len() == g.n_yedges()
    }

    /// Applies `f` componentwise to (self, other) pairs.
    pub fn zip_map(&self, other: &EdgeField, f: impl Fn(f64, f64) -> f64) -> EdgeField {
        EdgeField {
            nx: self.nx,
            ny: self.ny,
            x: self.x.iter().zip(&other.x).map(|(a, b)| f(*a, *b)).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> EdgeField {
        EdgeField { nx: self.nx, ny: self.ny, x: self.x.iter().map(|a| f(*a)).collect(), y: self.y.iter().map(|a| f(*a)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        crate::reduce::max_abs(&self.x).max(crate::reduce::max_abs(&self.y))
    }
}
