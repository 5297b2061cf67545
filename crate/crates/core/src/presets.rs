//! Shipped experiment configurations.
//!
//! Resolutions, step sizes, end times and object placements not fixed by the
//! experiment descriptions are desk-scale choices.

use crate::amr::AmrSettings;
use crate::config::{
    DomainSection, EmbeddingSection, GridSection, InitialData, ModelSection, OutputSection, PmlSection, RunConfig, SolverSection,
    TimeSection,
};
use crate::geometry::{RigidMotion, Shape};
use crate::stepper::{BoundaryKind, SourceSpec};

const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frequency {
    Moderate,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Body {
    Circle,
    Star,
    Ship,
}

fn model(c: f64, bc: BoundaryKind) -> ModelSection {
    ModelSection { c, eta_d: None, alpha: 10.0, beta: 100.0, psi_hat: 0.5, eta_n: 1.0, bc }
}

fn base(a: f64, l: f64, n: usize, tau: f64, t_end: f64, m: ModelSection) -> RunConfig {
    RunConfig {
        domain: DomainSection { a1: a, a2: a, l1: l, l2: l },
        grid: GridSection { nx: n, ny: n },
        time: TimeSection { tau, t_end },
        model: m,
        pml: PmlSection::default(),
        embedding: None,
        source: None,
        initial: InitialData::Zero,
        amr: AmrSettings::default(),
        output: OutputSection::default(),
        solver: SolverSection::default(),
    }
}

/// Static circle of radius 2 hit by a Gaussian pulse released at rest.
pub fn example_4_1() -> RunConfig {
    let mut c = base(10.0, 4.0, 128, 1e-2, 20.0, model(1.0, BoundaryKind::Soft));
    c.embedding =
        Some(EmbeddingSection { eps: 0.25, shape: Shape::Circle { center: [0.0, 0.0], radius: 2.0 }, motion: RigidMotion::stationary() });
    c.initial = InitialData::Gaussian { center: [5.0, 0.0], decay: 5.0 };
    c
}

/// The pulse of [`example_4_1`] in free space.
pub fn example_4_1_free() -> RunConfig {
    let mut c = example_4_1();
    c.embedding = None;
    c
}

fn moderate_source() -> SourceSpec {
    SourceSpec { center: [-3.0, 0.0], eta: 0.25, w: 10.0 * PI, sigma: 2.0 / 25.0, t0: 0.0 }
}

fn high_source() -> SourceSpec {
    SourceSpec { center: [-3.0, 0.0], eta: 0.01, w: 100.0 * PI, sigma: 1.0 / 1000.0, t0: 0.0 }
}

/// Static unit circle, source-driven, `c = 10`.
pub fn example_4_2(bc: BoundaryKind) -> RunConfig {
    let mut c = base(5.0, 2.0, 128, 2e-3, 0.8, model(10.0, bc));
    let eps = match bc {
        BoundaryKind::Soft => 0.01,
        BoundaryKind::Hard => 0.05,
    };
    c.embedding =
        Some(EmbeddingSection { eps, shape: Shape::Circle { center: [0.0, 0.0], radius: 1.0 }, motion: RigidMotion::stationary() });
    c.source = Some(moderate_source());
    c
}

fn ship_hull() -> Vec<[f64; 2]> {
    let (cx, cy) = (4.1, 2.0);
    [[-1.5, -0.3], [1.1, -0.3], [1.6, 0.15], [0.6, 0.15], [0.5, 0.55], [-0.3, 0.55], [-0.4, 0.15], [-1.5, 0.15]]
        .iter()
        .map(|[x, y]| [x + cx, y + cy])
        .collect()
}

/// Moving body translating with velocity `(-5, 0)` through a source-driven field.
pub fn example_4_3(body: Body, bc: BoundaryKind, freq: Frequency) -> RunConfig {
    let tau = match freq {
        Frequency::Moderate => 5e-3,
        Frequency::High => 1e-3,
    };
    let mut c = base(7.0, 2.0, 128, tau, 1.0, model(10.0, bc));
    let shape = match body {
        Body::Circle => Shape::Circle { center: [3.0, 0.0], radius: 1.0 },
        Body::Star => Shape::Star { center: [3.0, 0.0], base_radius: 1.0, amplitude: 0.3, lobes: 5 },
        Body::Ship => Shape::Polygon { vertices: ship_hull() },
    };
    c.embedding = Some(EmbeddingSection { eps: 0.05, shape, motion: RigidMotion::uniform([-5.0, 0.0]) });
    c.source = Some(match freq {
        Frequency::Moderate => moderate_source(),
        Frequency::High => high_source(),
    });
    c.amr = AmrSettings { enabled: true, ..AmrSettings::default() };
    c
}

/// Every shipped preset: `(name, description)`.
pub fn catalog() -> Vec<(String, String)> {
    let mut v = vec![
        ("example_4_1".to_string(), "static circle R=2, Gaussian pulse at (5,0), c=1, tau=1e-2".to_string()),
        ("example_4_1_free".to_string(), "Gaussian pulse at (5,0) without obstacle".to_string()),
        ("example_4_2_soft".to_string(), "static circle, sound-soft, eps=0.01, c=10, source at (-3,0)".to_string()),
        ("example_4_2_hard".to_string(), "static circle, sound-hard, eps=0.05, c=10, source at (-3,0)".to_string()),
    ];
    for body in ["circle", "star", "ship"] {
        for bc in ["soft", "hard"] {
            for freq in ["moderate", "high"] {
                v.push((
                    format!("example_4_3_{body}_{bc}_{freq}"),
                    format!("moving {body}, sound-{bc}, {freq}-frequency source, velocity (-5,0)"),
                ));
            }
        }
    }
    v
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<RunConfig> {
    match name {
        "example_4_1" => return Some(example_4_1()),
        "example_4_1_free" => return Some(example_4_1_free()),
        "example_4_2_soft" => return Some(example_4_2(BoundaryKind::Soft)),
        "example_4_2_hard" => return Some(example_4_2(BoundaryKind::Hard)),
        _ => {}
    }
    let rest = name.strip_prefix("example_4_3_")?;
    let mut it = rest.split('_');
    let body = match it.next()? {
        "circle" => Body::Circle,
        "star" => Body::Star,
        "ship" => Body::Ship,
        _ => return None,
    };
    let bc = match it.next()? {
        "soft" => BoundaryKind::Soft,
        "hard" => BoundaryKind::Hard,
        _ => return None,
    };
    let freq = match it.next()? {
        "moderate" => Frequency::Moderate,
        "high" => Frequency::High,
        _ => return None,
    };
    it.next().is_none().then(|| example_4_3(body, bc, freq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for (name, _) in catalog() {
            let c = preset(&name).unwrap_or_else(|| panic!("{name}"));
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = crate::config::parse_config(&c.to_toml()).unwrap();
            assert_eq!(back, c, "{name}");
        }
        assert!(preset("example_4_3_circle_soft").is_none());
        assert!(preset("nope").is_none());
    }

    #[test]
    fn first_example_matches_its_description() {
        let c = example_4_1();
        let g = c.grid().unwrap();
        assert_eq!((g.x0, g.x1()), (-14.0, 14.0));
        assert_eq!((c.domain.a1, c.model.c, c.time.tau), (10.0, 1.0, 1e-2));
        let p = |x: f64, y: f64| (-5.0 * ((x - 5.0).powi(2) + y * y)).exp();
        for (x, y) in [(5.0, 0.0), (4.3, 0.2), (0.0, 0.0)] {
            assert_eq!(c.initial.pressure(x, y), p(x, y));
        }
        match c.embedding.unwrap().shape {
            Shape::Circle { center, radius } => assert_eq!((center, radius), ([0.0, 0.0], 2.0)),
            _ => panic!(),
        }
    }

    #[test]
    fn moving_examples_use_stated_sources() {
        let m = example_4_3(Body::Star, BoundaryKind::Hard, Frequency::Moderate);
        let s = m.source.unwrap();
        assert_eq!((s.center, s.eta, s.w, s.sigma, s.t0), ([-3.0, 0.0], 0.25, 10.0 * PI, 0.08, 0.0));
        let h = example_4_3(Body::Ship, BoundaryKind::Soft, Frequency::High);
        let s = h.source.unwrap();
        assert_eq!((s.eta, s.w, s.sigma), (0.01, 100.0 * PI, 1e-3));
        assert_eq!((h.domain.a1, h.domain.a1 + h.domain.l1, h.embedding.unwrap().eps), (7.0, 9.0, 0.05));
    }
}
