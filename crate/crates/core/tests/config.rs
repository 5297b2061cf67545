use pmlde::amr::{AmrSettings, Patch};
use pmlde::config::{load_config, parse_config, EmbeddingSection, InitialData};
use pmlde::geometry::{RigidMotion, Shape};
use pmlde::presets;
use pmlde::stepper::{BoundaryKind, SourceSpec};
use proptest::prelude::*;

fn shape_strategy() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0).prop_map(|(x, y, r)| Shape::Circle { center: [x, y], radius: r }),
        (-1.0f64..1.0, 0.5f64..1.0, 0.0f64..0.4, 3u32..9).prop_map(|(x, r0, r1, k)| Shape::Star {
            center: [x, 0.0],
            base_radius: r0,
            amplitude: r1,
            lobes: k
        }),
        (0.2f64..1.0).prop_map(|s| Shape::Polygon { vertices: vec![[-s, -s], [s, -s], [0.0, s]] }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn configs_survive_a_text_round_trip(
        a in 3.0f64..12.0, l in 0.5f64..4.0, n in 8usize..200, tau in 1e-4f64..0.1, t_end in 0.0f64..2.0,
        c in 1.0f64..20.0, eta in prop::option::of(1e-4f64..1.0), alpha in 0.0f64..50.0, beta in 0.1f64..1e3,
        hard in any::<bool>(), shape in prop::option::of(shape_strategy()), eps in 0.01f64..0.2,
        v in -0.4f64..0.4, src in any::<bool>(), amr in any::<bool>(), tol in 1e-14f64..1e-8,
        xibar in prop::option::of((0.0f64..50.0, 0.0f64..50.0)),
    ) {
        let mut cfg = presets::example_4_1();
        cfg.domain.a1 = a;
        cfg.domain.a2 = a * 0.8;
        cfg.domain.l1 = l;
        cfg.domain.l2 = l * 1.1;
        cfg.grid.nx = n;
        cfg.grid.ny = n + 3;
        cfg.time.tau = tau;
        cfg.time.t_end = t_end;
        cfg.model.c = c;
        cfg.model.eta_d = eta;
        cfg.model.alpha = alpha;
        cfg.model.beta = beta;
        if hard {
            cfg.model.bc = BoundaryKind::Hard;
        }
        cfg.pml.xibar = xibar.map(|(x, y)| [x, y]);
        cfg.embedding = shape.map(|shape| EmbeddingSection { eps, shape, motion: RigidMotion::uniform([v, -v]) });
        if src {
            cfg.source = Some(SourceSpec { center: [0.1, -0.2], eta: 0.3, w: 7.0 * c, sigma: 0.5, t0: 0.1 });
        }
        cfg.initial = InitialData::Gaussian { center: [0.3, eps], decay: 1.0 / eps };
        if amr {
            cfg.amr = AmrSettings { enabled: true, max_level: 1, fixed_patches: Some(vec![Patch::new(2, 4, 10, 12)]), ..AmrSettings::default() };
        }
        cfg.solver.tol = tol;
        cfg.output.snapshot_every = Some(tau * 3.0);
        let text = cfg.to_toml();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}

#[test]
fn loads_from_disk_and_reports_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, presets::example_4_2(BoundaryKind::Hard).to_toml()).unwrap();
    assert_eq!(load_config(&path).unwrap(), presets::example_4_2(BoundaryKind::Hard));

    let missing = load_config(&dir.path().join("absent.toml")).unwrap_err();
    assert_eq!(missing.exit_code(), 5);

    std::fs::write(&path, "[grid]\nnx = 8\nny = 8\n[bogus]\nx = 1\n").unwrap();
    let err = load_config(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("bogus"), "{err}");
}

#[test]
fn shipped_moving_presets_keep_bodies_inside() {
    for (name, _) in presets::catalog() {
        let cfg = presets::preset(&name).unwrap();
        cfg.validate().unwrap();
        if let Some(e) = &cfg.embedding {
            assert!(e.motion.speed() < cfg.model.c, "{name}");
        }
    }
    let mut bad = presets::example_4_3(presets::Body::Circle, BoundaryKind::Soft, presets::Frequency::Moderate);
    bad.time.t_end = 3.0;
    let err = bad.validate().unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("leaves"), "{err}");
}
