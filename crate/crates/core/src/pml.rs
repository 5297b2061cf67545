//! Direction-split damping profiles and the coefficient fields derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{EdgeField, StaggeredGrid};

/// Physical half-widths, layer thicknesses and peak damping per direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmlLayout {
    pub a1: f64,
    pub a2: f64,
    pub l1: f64,
    pub l2: f64,
    pub xibar1: f64,
    pub xibar2: f64,
}

impl PmlLayout {
    /// Layout whose peak damping gives a normal-incidence round-trip factor of `reflection`.
    pub fn with_reflection(a1: f64, a2: f64, l1: f64, l2: f64, c: f64, reflection: f64) -> Self {
        Self { a1, a2, l1, l2, xibar1: default_peak(c, l1, reflection), xibar2: default_peak(c, l2, reflection) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a2 > 0.0 && self.l1 > 0.0 && self.l2 > 0.0) {
            return Err(Error::Config("PML half-widths and thicknesses must be positive".into()));
        }
        if !(self.xibar1 >= 0.0 && self.xibar2 >= 0.0) {
            return Err(Error::Config("PML peak damping must be nonnegative".into()));
        }
        Ok(())
    }

    /// Outer extent of the computational domain `(x0, x1), (y0, y1)`.
    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        let (ex, ey) = (self.a1 + self.l1, self.a2 + self.l2);
        ((-ex, ex), (-ey, ey))
    }

    pub fn in_physical(&self, x: f64, y: f64) -> bool {
        x.abs() < self.a1 && y.abs() < self.a2
    }

    pub fn damping_at(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        Ok((xi(x, self.a1, self.l1, self.xibar1)?, xi(y, self.a2, self.l2, self.xibar2)?))
    }
}

/// Peak strength for which `exp(-2 * integral(xi) / c) = reflection`.
pub fn default_peak(c: f64, thickness: f64, reflection: f64) -> f64 {
    -c * reflection.ln() / thickness
}

/// Smooth ramp `xibar (s - sin(2 pi s) / (2 pi))`, `s = (|x| - a) / L`, zero for `|x| < a`.
pub fn xi(coord: f64, half_width: f64, thickness: f64, peak: f64) -> Result<f64> {
    let r = coord.abs();
    let limit = half_width + thickness;
    if r > limit * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain { coord, limit });
    }
    if r <= half_width {
        return Ok(0.0);
    }
    let s = ((r - half_width) / thickness).min(1.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(peak * (s - (two_pi * s).sin() / two_pi))
}

/// Coefficients at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCoeffs {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Coefficients on one edge family.
///
/// `g1`, `gt`, `g2` and `ainv_g1` hold the diagonal entry of Γ₁, Γ̃₁, Γ₂ and
/// a⁻¹Γ₁ that acts on this family's vector component.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeCoeffs {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub g1: Vec<f64>,
    pub gt: Vec<f64>,
    pub g2: Vec<f64>,
    pub ainv_g1: Vec<f64>,
    pub ainv_b: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Component {
    X,
    Y,
}

impl EdgeCoeffs {
    fn build(xi1: Vec<f64>, xi2: Vec<f64>, comp: Component) -> Self {
        let n = xi1.len();
        let mut e = EdgeCoeffs {
            a: vec![0.0; n],
            b: vec![0.0; n],
            g1: vec![0.0; n],
            gt: vec![0.0; n],
            g2: vec![0.0; n],
            ainv_g1: vec![0.0; n],
            ainv_b: vec![0.0; n],
            xi1,
            xi2,
        };
        for k in 0..n {
            let (s1, s2) = (e.xi1[k], e.xi2[k]);
            let (own, other) = match comp {
                Component::X => (s1, s2),
                Component::Y => (s2, s1),
            };
            let a = s1 + s2;
            let b = s1 * s2;
            e.a[k] = a;
            e.b[k] = b;
            e.g1[k] = own;
            e.gt[k] = other;
            e.g2[k] = other - own;
            if a > 0.0 {
                e.ainv_g1[k] = own / a;
                e.ainv_b[k] = b / a;
            }
        }
        e
    }
}

/// Damping coefficients sampled at every staggered location.
#[derive(Clone, Debug, PartialEq)]
pub struct PmlCoefficients {
    pub nx: usize,
    pub ny: usize,
    pub cell: CellCoeffs,
    pub xe: EdgeCoeffs,
    pub ye: EdgeCoeffs,
}

impl PmlCoefficients {
    /// Samples `f(x, y) -> (xi1, xi2)` at cells and both edge families.
    pub fn from_fn(g: &StaggeredGrid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut c1 = Vec::with_capacity(g.n_cells());
        let mut c2 = Vec::with_capacity(g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.cell_center(i, j);
                let (s1, s2) = f(x, y);
                c1.push(s1);
                c2.push(s2);
            }
        }
        let a = c1.iter().zip(&c2).map(|(p, q)| p + q).collect();
        let b = c1.iter().zip(&c2).map(|(p, q)| p * q).collect();
        let cell = CellCoeffs { xi1: c1, xi2: c2, a, b };

        let mut x1 = Vec::with_capacity(g.n_xedges());
        let mut x2 = Vec::with_capacity(g.n_xedges());
        for j in 0..g.ny {
            for i in 0..g.nx - 1 {
                let (x, y) = g.xedge_point(i, j);
                let (s1, s2) = f(x, y);
                x1.push(s1);
                x2.push(s2);
            }
        }
        let mut y1 = Vec::with_capacity(g.n_yedges());
        let mut y2 = Vec::with_capacity(g.n_yedges());
        for j in 0..g.ny - 1 {
            for i in 0..g.nx {
                let (x, y) = g.yedge_point(i, j);
                let (s1, s2) = f(x, y);
                y1.push(s1);
                y2.push(s2);
            }
        }
        Self { nx: g.nx, ny: g.ny, cell, xe: EdgeCoeffs::build(x1, x2, Component::X), ye: EdgeCoeffs::build(y1, y2, Component::Y) }
    }

    /// Samples the layout's profiles; the grid must span the layout's domain.
    pub fn sample(layout: &PmlLayout, g: &StaggeredGrid) -> Result<Self> {
        layout.validate()?;
        let ((x0, x1), (y0, y1)) = layout.domain();
        let tol = 1e-9 * (x1 - x0).max(y1 - y0);
        if (g.x0 - x0).abs() > tol || (g.x1() - x1).abs() > tol || (g.y0 - y0).abs() > tol || (g.y1() - y1).abs() > tol {
            return Err(Error::InvalidArgument("grid does not span the PML domain".into()));
        }
        Ok(Self::from_fn(g, |x, y| layout.damping_at(x, y).expect("grid points lie inside the domain")))
    }

    pub fn uniform(g: &StaggeredGrid, xi1: f64, xi2: f64) -> Self {
        Self::from_fn(g, |_, _| (xi1, xi2))
    }

    pub fn zero(g: &StaggeredGrid) -> Self {
        Self::uniform(g, 0.0, 0.0)
    }

    pub fn g1(&self) -> EdgeField {
        self.edge_field(|e| &e.g1)
    }
    pub fn g2(&self) -> EdgeField {
        self.edge_field(|e| &e.g2)
    }
    pub fn ainv_g1(&self) -> EdgeField {
        self.edge_field(|e| &e.ainv_g1)
    }
    pub fn ainv_b(&self) -> EdgeField {
        self.edge_field(|e| &e.ainv_b)
    }
    pub fn edge_a(&self) -> EdgeField {
        self.edge_field(|e| &e.a)
    }

    fn edge_field(&self, pick: impl Fn(&EdgeCoeffs) -> &Vec<f64>) -> EdgeField {
        EdgeField { nx: self.nx, ny: self.ny, x: pick(&self.xe).clone(), y: pick(&self.ye).clone() }
    }

    /// Largest nodewise violation of the algebraic identities among Γ₁, Γ₂, Γ̃₁, a, b.
    pub fn identity_residuals(&self) -> IdentityResiduals {
        let mut r = IdentityResiduals::default();
        for e in [&self.xe, &self.ye] {
            for k in 0..e.a.len() {
                let (a, b, g1, gt, g2) = (e.a[k], e.b[k], e.g1[k], e.gt[k], e.g2[k]);
                let sa = a.abs().max(f64::MIN_POSITIVE);
                let sb = (a * a).max(f64::MIN_POSITIVE);
                r.gamma_product = r.gamma_product.max((g1 * gt - b).abs() / sb);
                r.quadratic = r.quadratic.max((g1 * g1 - a * g1 + b).abs() / sb);
                r.trace_split = r.trace_split.max((2.0 * g1 + g2 - a).abs() / sa);
                r.trace = r.trace.max((g1 + gt - a).abs() / sa);
                if a > 0.0 {
                    r.regularization = r.regularization.max((a * e.ainv_g1[k] - g1).abs() / sa);
                    r.regularization = r.regularization.max((a * e.ainv_b[k] - b).abs() / sb);
                }
            }
        }
        r
    }
}

/// Relative residuals of Γ₁Γ̃₁ = bI, Γ₁² − aΓ₁ + bI = 0, 2Γ₁ + Γ₂ = aI, Γ₁ + Γ̃₁ = aI
/// and a·a⁻¹Γ₁ = Γ₁, a·a⁻¹b = b.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    pub gamma_product: f64,
    pub quadratic: f64,
    pub trace_split: f64,
    pub trace: f64,
    pub regularization: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.gamma_product.max(self.quadratic).max(self.trace_split).max(self.trace).max(self.regularization)
    }
}
