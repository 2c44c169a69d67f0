use pollstop::model::TOL_ROOT;
use pollstop::{derive_constants, Model, ModelParams, StatePoint};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.05f64..0.6, 0.01f64..0.3, 0.01f64..0.5, 0.05f64..0.95).prop_map(|(sigma, r, delta, frac)| {
        ModelParams {
            sigma,
            r,
            delta,
            alpha: r * frac,
            ..Default::default()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constants_positive_and_coef_a_negative(p in params()) {
        let c = derive_constants(&p).unwrap();
        prop_assert!(c.theta > 0.0 && c.theta0 > 0.0 && c.rho > 0.0 && c.rho0 > 0.0);
        prop_assert!(c.coef_a < 0.0);
        prop_assert!(c.coef_b > 0.0);
    }

    #[test]
    fn discount_at_or_below_drift_rejected(r in 0.01f64..0.3, extra in 0.0f64..0.2) {
        let p = ModelParams { r, alpha: r + extra, ..Default::default() };
        prop_assert!(Model::new(p).is_err());
    }

    #[test]
    fn q_strictly_decreasing(z in -10.0f64..10.0, a in 0.001f64..0.998, gap in 1e-4f64..0.5) {
        let model = Model::new(ModelParams::default()).unwrap();
        let b = (a + gap).min(0.999);
        prop_assume!(b > a);
        prop_assert!(model.q_fn(z, b) < model.q_fn(z, a));
    }

    #[test]
    fn q_tends_to_ri_at_zero_belief(z in -10.0f64..10.0) {
        let model = Model::new(ModelParams::default()).unwrap();
        prop_assert!((model.q_fn(z, 1e-60) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn m_is_the_root_and_nondecreasing(p in params(), z in -6.0f64..6.0, dz in 0.0f64..2.0) {
        let model = Model::new(p).unwrap();
        let (m1, m2) = (model.m_fn(z), model.m_fn(z + dz));
        prop_assert!(m1 > 0.0 && m1 < 1.0);
        prop_assert!(m1 <= m2);
        // inside the clamps the root brackets a sign change of q
        if m1 > 1e-8 && m1 < 1.0 - 1e-8 {
            prop_assert!(model.q_fn(z, m1 - TOL_ROOT) > 0.0);
            prop_assert!(model.q_fn(z, m1 + TOL_ROOT) < 0.0);
        }
    }

    #[test]
    fn transform_round_trip(lx in -6.0f64..6.0, pi in 1e-6f64..(1.0 - 1e-6)) {
        let model = Model::new(ModelParams::default()).unwrap();
        let x = lx.exp();
        let tp = model.to_z(x, pi);
        let (x2, pi2) = model.to_xpi(&tp);
        prop_assert!((x2 - x).abs() <= 1e-12 * x);
        prop_assert_eq!(pi2, pi);
    }

    #[test]
    fn reward_identities(lx in -4.0f64..4.0, lp in -3.0f64..3.0, pi in 1e-4f64..(1.0 - 1e-4)) {
        let model = Model::new(ModelParams::default()).unwrap();
        let (x, p) = (lx.exp(), lp.exp());
        let sp = StatePoint::new(x, p, pi).unwrap();
        let g = model.reward_g(x, pi);
        let scale = g.abs().max(1.0);
        prop_assert!((model.value_never(&sp) - model.value_now(&sp) - g).abs() <= 1e-12 * scale);
        prop_assert!((model.obstacle_f(&model.to_z(x, pi)) - g).abs() <= 1e-10 * scale);
    }

    #[test]
    fn reward_increasing(x in 0.01f64..10.0, dx in 0.01f64..1.0, pi in 0.01f64..0.98, dpi in 0.001f64..0.01) {
        let model = Model::new(ModelParams::default()).unwrap();
        prop_assert!(model.reward_g(x + dx, pi) > model.reward_g(x, pi));
        prop_assert!(model.reward_g(x, pi + dpi) > model.reward_g(x, pi));
    }
}

#[test]
fn value_differences_in_belief() {
    let model = Model::new(ModelParams::default()).unwrap();
    let c = *model.consts();
    let p = model.params();
    for (x, p0) in [(1.0, 1.0), (2.5, 0.3)] {
        let hi = model.value_never(&StatePoint { x, p: p0, pi: 1.0 - 1e-15 });
        let lo = model.value_never(&StatePoint { x, p: p0, pi: 1e-15 });
        let expected = p.inflow() * c.theta * x + x * p0 * c.theta0;
        assert!((hi - lo - expected).abs() < 1e-9 * expected);
    }
}
