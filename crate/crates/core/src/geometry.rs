//! Rigidly translating obstacles and the diffuse indicator sampled from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{EdgeField, StaggeredGrid};
use crate::pml::PmlCoefficients;

/// Obstacle outline at its initial placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// Boundary `rho = r0 + r1 cos(k theta)` about `center`.
    Star {
        center: [f64; 2],
        base_radius: f64,
        amplitude: f64,
        lobes: u32,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Circle { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config(format!("circle radius must be positive, got {radius}")));
                }
            }
            Shape::Star { base_radius, amplitude, lobes, .. } => {
                if !(*base_radius > *amplitude && *amplitude >= 0.0) {
                    return Err(Error::Config("star needs base_radius > amplitude >= 0".into()));
                }
                if *lobes < 3 {
                    return Err(Error::Config(format!("star needs at least 3 lobes, got {lobes}")));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Config("polygon needs at least 3 vertices".into()));
                }
                if polygon_area(vertices).abs() <= 0.0 {
                    return Err(Error::Config("polygon has zero area".into()));
                }
                if !is_simple(vertices) {
                    return Err(Error::Config("polygon is self-intersecting".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance at the initial placement, positive inside.
    pub fn static_distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Shape::Circle { center, radius } => radius - (x - center[0]).hypot(y - center[1]),
            Shape::Star { center, base_radius, amplitude, lobes } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                let rho = dx.hypot(dy);
                if rho < 1e-14 * base_radius {
                    return base_radius + amplitude;
                }
                let k = *lobes as f64;
                let theta = dy.atan2(dx);
                let level = rho - (base_radius + amplitude * (k * theta).cos());
                let tangential = amplitude * k * (k * theta).sin() / rho;
                -level / (1.0 + tangential * tangential).sqrt()
            }
            Shape::Polygon { vertices } => {
                let d = polygon_distance(vertices, x, y);
                if point_in_polygon(vertices, x, y) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Axis-aligned bounds `(xmin, xmax, ymin, ymax)` at the initial placement.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self {
            Shape::Circle { center, radius } => (center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius),
            Shape::Star { center, base_radius, amplitude, .. } => {
                let r = base_radius + amplitude;
                (center[0] - r, center[0] + r, center[1] - r, center[1] + r)
            }
            Shape::Polygon { vertices } => {
                vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), v| {
                    (a.min(v[0]), b.max(v[0]), c.min(v[1]), d.max(v[1]))
                })
            }
        }
    }

    pub fn translated(&self, d: [f64; 2]) -> Shape {
        let mv = |p: &[f64; 2]| [p[0] + d[0], p[1] + d[1]];
        match self {
            Shape::Circle { center, radius } => Shape::Circle { center: mv(center), radius: *radius },
            Shape::Star { center, base_radius, amplitude, lobes } => {
                Shape::Star { center: mv(center), base_radius: *base_radius, amplitude: *amplitude, lobes: *lobes }
            }
            Shape::Polygon { vertices } => Shape::Polygon { vertices: vertices.iter().map(mv).collect() },
        }
    }
}

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|k| v[k][0] * v[(k + 1) % n][1] - v[(k + 1) % n][0] * v[k][1]).sum::<f64>() / 2.0
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * ex).hypot(p[1] - a[1] - t * ey)
}

fn polygon_distance(v: &[[f64; 2]], x: f64, y: f64) -> f64 {
    let n = v.len();
    (0..n).map(|k| segment_distance([x, y], v[k], v[(k + 1) % n])).fold(f64::INFINITY, f64::min)
}

fn point_in_polygon(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (v[i][0], v[i][1]);
        let (xj, yj) = (v[j][0], v[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    // Collinear touching counts as an intersection.
    let on = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        orient(p, q, r) == 0.0 && r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

fn is_simple(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Translation `x(t) = x0 + v t + a t^2 / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidMotion {
    pub velocity: [f64; 2],
    #[serde(default)]
    pub acceleration: [f64; 2],
}

impl RigidMotion {
    pub fn stationary() -> Self {
        Self::default()
    }

    pub fn uniform(velocity: [f64; 2]) -> Self {
        Self { velocity, acceleration: [0.0, 0.0] }
    }

    pub fn displacement(&self, t: f64) -> [f64; 2] {
        [self.velocity[0] * t + 0.5 * self.acceleration[0] * t * t, self.velocity[1] * t + 0.5 * self.acceleration[1] * t * t]
    }

    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }

    pub fn is_static(&self) -> bool {
        self.velocity == [0.0, 0.0] && self.acceleration == [0.0, 0.0]
    }

    pub fn has_acceleration(&self) -> bool {
        self.acceleration != [0.0, 0.0]
    }
}

/// Signed distance to the moved boundary, negative on the wave side.
pub fn signed_distance(shape: &Shape, motion: &RigidMotion, x: (f64, f64), t: f64) -> f64 {
    let d = motion.displacement(t);
    shape.static_distance(x.0 - d[0], x.1 - d[1])
}

const EXP_CLAMP: f64 = 600.0;

/// Logistic indicator `1 / (exp(6 r / eps) + 1)`.
pub fn psi_eps(r: f64, eps: f64) -> f64 {
    let z = 6.0 * r / eps;
    if z > EXP_CLAMP {
        0.0
    } else if z < -EXP_CLAMP {
        1.0
    } else {
        1.0 / (z.exp() + 1.0)
    }
}

/// Interface weight `|d psi / d r| = (6 / eps) psi (1 - psi)`.
pub fn w_eps(r: f64, eps: f64) -> f64 {
    let psi = psi_eps(r, eps);
    6.0 / eps * psi * (1.0 - psi)
}

/// Indicator and interface weight sampled on one grid at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingField {
    pub eps: f64,
    pub time: f64,
    pub psi: Vec<f64>,
    pub psi_edge: EdgeField,
    pub w: Vec<f64>,
}

impl EmbeddingField {
    /// No obstacle: psi = 1 and W = 0 everywhere.
    pub fn empty(g: &StaggeredGrid, time: f64) -> Self {
        Self {
            eps: f64::INFINITY,
            time,
            psi: vec![1.0; g.n_cells()],
            psi_edge: EdgeField::constant(g, 1.0, 1.0),
            w: vec![0.0; g.n_cells()],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.psi.iter().all(|v| *v == 1.0)
            && self.w.iter().all(|v| *v == 0.0)
            && self.psi_edge.x.iter().chain(&self.psi_edge.y).all(|v| *v == 1.0)
    }

    /// Fails unless psi = 1 and W = 0 wherever the damping is active.
    pub fn check_support(&self, coeffs: &PmlCoefficients) -> Result<()> {
        let bad_cell = (0..self.psi.len()).find(|&k| coeffs.cell.a[k] > 0.0 && (self.psi[k] != 1.0 || self.w[k] != 0.0));
        let bad_x = (0..self.psi_edge.x.len()).find(|&k| coeffs.xe.a[k] > 0.0 && self.psi_edge.x[k] != 1.0);
        let bad_y = (0..self.psi_edge.y.len()).find(|&k| coeffs.ye.a[k] > 0.0 && self.psi_edge.y[k] != 1.0);
        if let Some(k) = bad_cell {
            return Err(Error::GeometryEscape { t: self.time, detail: format!("interface reaches damped cell {k}") });
        }
        if let Some(k) = bad_x.or(bad_y) {
            return Err(Error::GeometryEscape { t: self.time, detail: format!("interface reaches damped edge {k}") });
        }
        Ok(())
    }
}

/// Samples psi at cells and both edge families, W at cells.
///
/// With `pml` given, the support condition is enforced.
pub fn sample_embedding(
    shape: &Shape,
    motion: &RigidMotion,
    g: &StaggeredGrid,
    t: f64,
    eps: f64,
    pml: Option<&PmlCoefficients>,
) -> Result<EmbeddingField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("interface thickness must be positive, got {eps}")));
    }
    let d = motion.displacement(t);
    let r = |x: f64, y: f64| shape.static_distance(x - d[0], y - d[1]);
    let mut psi = Vec::with_capacity(g.n_cells());
    let mut w = Vec::with_capacity(g.n_cells());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.cell_center(i, j);
            let p = psi_eps(r(x, y), eps);
            psi.push(p);
            w.push(6.0 / eps * p * (1.0 - p));
        }
    }
    let psi_edge = EdgeField::from_fns(g, |x, y| psi_eps(r(x, y), eps), |x, y| psi_eps(r(x, y), eps));
    let emb = EmbeddingField { eps, time: t, psi, psi_edge, w };
    if let Some(c) = pml {
        emb.check_support(c)?;
    }
    Ok(emb)
}

/// Obstacle plus motion, or nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub shape: Shape,
    #[serde(default)]
    pub motion: RigidMotion,
}

/// What the steppers need to know about the geometry at any time.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub body: Option<Body>,
    pub eps: f64,
}

impl Scene {
    pub fn empty() -> Self {
        Self { body: None, eps: f64::INFINITY }
    }

    pub fn is_static(&self) -> bool {
        self.body.as_ref().is_none_or(|b| b.motion.is_static())
    }

    pub fn sample(&self, g: &StaggeredGrid, t: f64, pml: Option<&PmlCoefficients>) -> Result<EmbeddingField> {
        match &self.body {
            None => Ok(EmbeddingField::empty(g, t)),
            Some(b) => sample_embedding(&b.shape, &b.motion, g, t, self.eps, pml),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> Shape {
        Shape::Circle { center: [0.0, 0.0], radius: 2.0 }
    }

    #[test]
    fn circle_distances() {
        let s = circle();
        let m = RigidMotion::stationary();
        assert_eq!(signed_distance(&s, &m, (5.0, 0.0), 0.0), -3.0);
        assert_eq!(signed_distance(&s, &m, (0.0, 0.0), 0.0), 2.0);
        let v = RigidMotion::uniform([1.0, 0.0]);
        assert_eq!(signed_distance(&s, &v, (5.0, 0.0), 2.0), -1.0);
    }

    #[test]
    fn square_distance() {
        let sq = Shape::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] };
        sq.validate().unwrap();
        assert!((sq.static_distance(2.0, 0.5) + 1.0).abs() < 1e-15);
        assert!((sq.static_distance(0.5, 0.25) - 0.25).abs() < 1e-15);
        assert!((sq.static_distance(2.0, 2.0) + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bowtie_rejected() {
        let bow = Shape::Polygon { vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]] };
        assert!(bow.validate().is_err());
    }

    #[test]
    fn star_sign_and_tips() {
        let s = Shape::Star { center: [0.0, 0.0], base_radius: 1.0, amplitude: 0.3, lobes: 5 };
        s.validate().unwrap();
        assert!(s.static_distance(0.0, 0.0) > 0.0);
        assert!(s.static_distance(1.3, 0.0).abs() < 1e-15);
        assert!((s.static_distance(2.0, 0.0) + 0.7).abs() < 1e-14);
        assert!(s.static_distance(0.0, 3.0) < 0.0);
        assert!(Shape::Star { center: [0.0, 0.0], base_radius: 1.0, amplitude: 0.3, lobes: 2 }.validate().is_err());
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi_eps(0.0, 0.3), 0.5);
        assert!((psi_eps(-1.0, 0.05) - 1.0).abs() <= 1e-15);
        let e = std::f64::consts::E;
        assert!((psi_eps(0.05 / 6.0, 0.05) - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert_eq!(psi_eps(1e6, 1e-3), 0.0);
        assert_eq!(psi_eps(-1e6, 1e-3), 1.0);
    }

    #[test]
    fn w_values() {
        assert!((w_eps(0.0, 0.05) - 30.0).abs() < 1e-12);
        assert!(w_eps(-1.0, 0.05).abs() <= 1e-15);
    }

    #[test]
    fn w_integrates_to_one() {
        let eps = 0.05;
        let (a, b, n) = (-1.0, 1.0, 200_000);
        let h = (b - a) / n as f64;
        let s: f64 = (0..n).map(|k| w_eps(a + (k as f64 + 0.5) * h, eps)).sum::<f64>() * h;
        assert!((s - 1.0).abs() < 1e-8);
    }

    #[test]
    fn node_on_interface_gets_half() {
        let g = StaggeredGrid::new(8, 8, (-2.0, 2.0), (-2.0, 2.0)).unwrap();
        let (x, _) = g.cell_center(5, 4);
        let s = Shape::Circle { center: [0.0, g.cell_center(5, 4).1], radius: x };
        let emb = sample_embedding(&s, &RigidMotion::stationary(), &g, 0.0, 0.1, None).unwrap();
        assert_eq!(emb.psi[g.cell(5, 4)], 0.5);
    }

    #[test]
    fn thin_shape_stays_in_range() {
        let g = StaggeredGrid::new(8, 8, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let eps = 0.01;
        let s = Shape::Circle { center: [0.1, 0.0], radius: 10.0 * eps };
        let emb = sample_embedding(&s, &RigidMotion::stationary(), &g, 0.0, eps, None).unwrap();
        assert!(emb.psi.iter().chain(&emb.psi_edge.x).chain(&emb.psi_edge.y).all(|v| (0.0..=1.0).contains(v)));
        assert!(emb.w.iter().all(|v| *v >= 0.0 && *v <= 1.5 / eps + 1e-12));
    }

    #[test]
    fn support_condition() {
        let g = StaggeredGrid::new(32, 32, (-4.0, 4.0), (-4.0, 4.0)).unwrap();
        let layout = crate::pml::PmlLayout { a1: 3.0, a2: 3.0, l1: 1.0, l2: 1.0, xibar1: 3.0, xibar2: 3.0 };
        let c = PmlCoefficients::sample(&layout, &g).unwrap();
        let m = RigidMotion::stationary();
        let inside = Shape::Circle { center: [0.0, 0.0], radius: 1.0 };
        assert!(sample_embedding(&inside, &m, &g, 0.0, 0.05, Some(&c)).is_ok());
        let straddle = Shape::Circle { center: [2.8, 0.0], radius: 1.0 };
        assert!(matches!(sample_embedding(&straddle, &m, &g, 0.0, 0.05, Some(&c)), Err(Error::GeometryEscape { .. })));
    }
}
