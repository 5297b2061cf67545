use pmlde::geometry::{psi_eps, sample_embedding, signed_distance, w_eps, EmbeddingField, RigidMotion, Shape};
use pmlde::grid::{CellField, EdgeField, StaggeredGrid};
use pmlde::ops;
use pmlde::pml::{PmlCoefficients, PmlLayout};
use pmlde::solver::{solve, LinearOperator, SolverSettings};
use pmlde::stepper::{
    bootstrap_first_step, cn_step_fourfield, constraint_residual, leapfrog_step_fixed, BoundaryKind, FourFieldState, ModelParams,
    StepContext, ThreeLevelOperator,
};
use proptest::prelude::*;

fn field(g: &StaggeredGrid, vals: &[f64]) -> CellField {
    CellField { nx: g.nx, ny: g.ny, data: (0..g.n_cells()).map(|k| vals[k % vals.len()]).collect() }
}

fn edges(g: &StaggeredGrid, vals: &[f64], shift: usize) -> EdgeField {
    let mut e = EdgeField::zeros(g);
    for (k, v) in e.x.iter_mut().chain(e.y.iter_mut()).enumerate() {
        *v = vals[(k * 7 + shift) % vals.len()];
    }
    e
}

fn layout_strategy() -> impl Strategy<Value = (PmlLayout, usize, usize)> {
    (0.5f64..5.0, 0.5f64..5.0, 0.2f64..3.0, 0.2f64..3.0, 0.5f64..10.0, -8.0f64..-2.0, 6usize..40, 6usize..40)
        .prop_map(|(a1, a2, l1, l2, c, lr, nx, ny)| (PmlLayout::with_reflection(a1, a2, l1, l2, c, 10f64.powf(lr)), nx, ny))
}

fn params(tau: f64) -> ModelParams {
    ModelParams { c: 1.0, tau, eta_d: 0.01, alpha: 10.0, beta: 100.0, psi_hat: 0.5, eta_n: 1.0, bc: BoundaryKind::Soft }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn summation_by_parts_holds(nx in 4usize..20, ny in 4usize..20,
                                u in prop::collection::vec(-1.0f64..1.0, 16),
                                v in prop::collection::vec(-1.0f64..1.0, 13),
                                w in prop::collection::vec(0.1f64..3.0, 11)) {
        let g = StaggeredGrid::new(nx, ny, (-1.0, 2.0), (0.0, 1.5)).unwrap();
        let (u, v, w) = (field(&g, &u), edges(&g, &v, 0), edges(&g, &w, 3));
        let res = ops::sbp_residual(&g, Some(&w), &u, &v);
        let gu = ops::grad_plus(&g, &u);
        let scale = ops::inner_edge(&g, &v, &v, Some(&w)).sqrt() * ops::inner_edge(&g, &gu, &gu, Some(&w)).sqrt();
        prop_assert!(res.abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn weighted_laplacian_is_symmetric(n in 4usize..16,
                                       u in prop::collection::vec(-1.0f64..1.0, 9),
                                       v in prop::collection::vec(-1.0f64..1.0, 5),
                                       w in prop::collection::vec(0.1f64..3.0, 7)) {
        let g = StaggeredGrid::new(n, n + 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let (u, v, w) = (field(&g, &u), field(&g, &v), edges(&g, &w, 1));
        let lu = ops::laplace_weighted(&g, Some(&w), &u);
        let lv = ops::laplace_weighted(&g, Some(&w), &v);
        let a = ops::inner_cell(&g, &lu.data, &v.data, None);
        let b = ops::inner_cell(&g, &u.data, &lv.data, None);
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0));
    }

    #[test]
    fn damping_coefficients_satisfy_their_identities((layout, nx, ny) in layout_strategy()) {
        let ((x0, x1), (y0, y1)) = layout.domain();
        let g = StaggeredGrid::new(nx, ny, (x0, x1), (y0, y1)).unwrap();
        let c = PmlCoefficients::sample(&layout, &g).unwrap();
        prop_assert!(c.identity_residuals().max() <= 1e-13);
        for k in 0..g.n_cells() {
            let (a, b) = (c.cell.a[k], c.cell.b[k]);
            prop_assert_eq!(a == 0.0, c.cell.xi1[k] == 0.0 && c.cell.xi2[k] == 0.0);
            prop_assert!(b >= 0.0 && a >= 0.0);
            if a == 0.0 { prop_assert_eq!(b, 0.0); }
        }
        let ag = c.ainv_g1();
        prop_assert!(ag.x.iter().chain(&ag.y).all(|v| (0.0..=1.0).contains(v)));
        let ab = c.ainv_b();
        prop_assert!(ab.x.iter().chain(&ab.y).all(|v| *v >= 0.0));
    }

    #[test]
    fn indicator_profile_properties(r in -5.0f64..5.0, eps in 0.01f64..1.0) {
        let p = psi_eps(r, eps);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + psi_eps(-r, eps) - 1.0).abs() <= 1e-15);
        let w = w_eps(r, eps);
        prop_assert!(w >= 0.0 && w <= 1.5 / eps * (1.0 + 1e-14));
        if r.abs() >= 10.0 * eps {
            let outside = if r < 0.0 { 1.0 } else { 0.0 };
            prop_assert!((p - outside).abs() <= 1e-12);
        }
        // central difference of psi against the closed form of |psi'|.
        let h = 1e-5 * eps;
        let fd = (psi_eps(r - h, eps) - psi_eps(r + h, eps)) / (2.0 * h);
        prop_assert!((fd - w).abs() <= 1e-5 * (1.5 / eps));
    }

    #[test]
    fn rigid_translation_shifts_the_distance(vx in -0.9f64..0.9, vy in -0.9f64..0.9, t in 0.0f64..2.0,
                                             x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let shape = Shape::Star { center: [0.2, -0.1], base_radius: 1.0, amplitude: 0.3, lobes: 5 };
        let m = RigidMotion::uniform([vx, vy]);
        let d = signed_distance(&shape, &m, (x, y), t);
        prop_assert_eq!(d, shape.static_distance(x - vx * t, y - vy * t));
        prop_assert_eq!(signed_distance(&shape, &RigidMotion::stationary(), (x, y), t), shape.static_distance(x, y));
    }

    #[test]
    fn sampled_embedding_stays_in_range(eps in 0.02f64..0.3, cx in -0.5f64..0.5, n in 8usize..32) {
        let g = StaggeredGrid::new(n, n, (-2.0, 2.0), (-2.0, 2.0)).unwrap();
        let shape = Shape::Circle { center: [cx, 0.0], radius: 10.0 * eps.min(0.1) };
        let e = sample_embedding(&shape, &RigidMotion::stationary(), &g, 0.0, eps, None).unwrap();
        prop_assert!(e.psi.iter().chain(&e.psi_edge.x).chain(&e.psi_edge.y).all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(e.w.iter().all(|v| *v >= 0.0 && *v <= 1.5 / eps * (1.0 + 1e-14)));
    }

    #[test]
    fn constraint_stays_zero_under_uniform_damping(xi1 in 0.0f64..2.0, xi2 in 0.0f64..2.0, tau in 0.01f64..0.1) {
        let g = StaggeredGrid::new(12, 12, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let coeffs = PmlCoefficients::uniform(&g, xi1, xi2);
        let prm = params(tau);
        let solver = SolverSettings::with_tol(1e-12);
        let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
        let p0 = CellField::from_fn(&g, |x, y| (-6.0 * (x * x + (y - 0.1).powi(2))).exp());
        let mut s = FourFieldState::from_pressure(&g, &p0, &CellField::zeros(&g), &coeffs.cell.a, 1.0);
        for _ in 0..10 {
            s = cn_step_fourfield(&ctx, &s, None).unwrap().state;
        }
        let r = constraint_residual(&g, &s, 1.0);
        prop_assert!(r.max_abs() <= 1e-12 * s.chi.max_abs().max(s.p.data.iter().fold(0.0, |m, v| m.max(v.abs()))));
    }
}

#[test]
fn auxiliary_field_is_confined_to_the_anisotropic_layer() {
    let layout = PmlLayout::with_reflection(1.0, 1.0, 0.5, 0.5, 1.0, 1e-4);
    let ((x0, x1), (y0, y1)) = layout.domain();
    let g = StaggeredGrid::new(40, 40, (x0, x1), (y0, y1)).unwrap();
    let coeffs = PmlCoefficients::sample(&layout, &g).unwrap();
    let prm = params(0.02);
    let solver = SolverSettings::with_tol(1e-12);
    let ctx = StepContext { grid: &g, coeffs: &coeffs, params: &prm, solver: &solver };
    let p0 = CellField::from_fn(&g, |x, y| (-10.0 * ((x - 0.6).powi(2) + y * y)).exp());
    let emb = EmbeddingField::empty(&g, 0.0);
    let mut st = bootstrap_first_step(&ctx, &p0, &CellField::zeros(&g), &emb, None);
    for _ in 0..60 {
        st = leapfrog_step_fixed(&ctx, &st, None).unwrap().state;
    }
    let g2 = coeffs.g2();
    let l = &st.lambda_curr;
    let mut active = 0;
    for (lam, g2) in l.x.iter().chain(&l.y).zip(g2.x.iter().chain(&g2.y)) {
        if *g2 == 0.0 {
            assert_eq!(*lam, 0.0);
        } else if *lam != 0.0 {
            active += 1;
        }
    }
    assert!(active > 0, "the pulse never reached the layer");
}

fn shifted_laplacian(g: &StaggeredGrid) -> ThreeLevelOperator<'_> {
    let (wx, wy) = ops::stencil_weights(g, None, 0.3);
    let diag = (0..g.n_cells()).map(|k| 1.0 + 0.1 * (k % 5) as f64).collect();
    ThreeLevelOperator { grid: g, diag, wx, wy, advect: None, fixed: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_is_deterministic_and_linear(b in prop::collection::vec(-1.0f64..1.0, 7), alpha in 0.1f64..10.0) {
        let g = StaggeredGrid::new(20, 16, (0.0, 1.0), (0.0, 0.8)).unwrap();
        let op = shifted_laplacian(&g);
        let rhs = field(&g, &b).data;
        let s = SolverSettings::with_tol(1e-13);
        let zero = vec![0.0; rhs.len()];
        let (x1, r1) = solve(&op, &rhs, &zero, &s);
        let (x2, r2) = solve(&op, &rhs, &zero, &s);
        prop_assert_eq!(&x1, &x2);
        prop_assert_eq!(r1.iterations, r2.iterations);
        let scaled: Vec<f64> = rhs.iter().map(|v| alpha * v).collect();
        let (xs, _) = solve(&op, &scaled, &zero, &s);
        let m = x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in xs.iter().zip(&x1) {
            prop_assert!((a - alpha * b).abs() <= 1e-10 * alpha * m);
        }
        let mut ax = vec![0.0; rhs.len()];
        op.apply(&x1, &mut ax);
        let res: f64 = ax.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-12 * nb);
    }

    #[test]
    fn operator_is_linear_and_symmetric(u in prop::collection::vec(-1.0f64..1.0, 9),
                                        v in prop::collection::vec(-1.0f64..1.0, 4),
                                        a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = StaggeredGrid::new(10, 12, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let op = shifted_laplacian(&g);
        let (u, v) = (field(&g, &u).data, field(&g, &v).data);
        let n = u.len();
        let (mut au, mut av, mut amix) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        op.apply(&u, &mut au);
        op.apply(&v, &mut av);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        op.apply(&mix, &mut amix);
        for k in 0..n {
            prop_assert!((amix[k] - a * au[k] - b * av[k]).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()) * 100.0);
        }
        let uav: f64 = u.iter().zip(&av).map(|(x, y)| x * y).sum();
        let vau: f64 = v.iter().zip(&au).map(|(x, y)| x * y).sum();
        prop_assert!((uav - vau).abs() <= 1e-12 * (uav.abs() + vau.abs()).max(1.0) * 100.0);
    }
}
