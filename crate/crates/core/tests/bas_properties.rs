use fluidex::bas::{integrate_to_times, transport_matrix, BasState};
use fluidex::exponent::sample_admissible;
use fluidex::flow::TWO_PI;
use fluidex::{ClassTag, Point, SteadyFlow, Vec3};
use proptest::prelude::*;

fn planar_state() -> impl Strategy<Value = (Point, f64, f64)> {
    (0.0..TWO_PI, 0.0..TWO_PI, 0.0..TWO_PI, prop_oneof![Just(1.0), Just(-1.0)])
        .prop_map(|(a, b, th, s)| (Point::new(a, b, 0.0), th, s))
}

fn unit(th: f64) -> Vec3 {
    Vec3::new(th.cos(), th.sin(), 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn orthogonality_is_conserved(seed in 0u64..1000, abc in any::<bool>()) {
        let flow = if abc { SteadyFlow::abc(1.0, 1.0, 1.0) } else { SteadyFlow::cellular() };
        let set = sample_admissible(&flow, ClassTag::Full, 4, seed).unwrap();
        let times: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        for s in set.samples.iter().take(6) {
            let traj = integrate_to_times(&flow, BasState::from_sample(s).unwrap(), &times, 1e-3).unwrap();
            for st in traj {
                prop_assert!(st.c.dot(&st.eta).abs() <= 1e-7);
                prop_assert!((st.c.norm() - 1.0).abs() <= 1e-10);
                prop_assert!((st.eta.norm() - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn amplitude_is_homogeneous_of_degree_zero_in_xi((x, th, s) in planar_state()) {
        let flow = SteadyFlow::cellular();
        let xi = unit(th);
        let b = Vec3::new(-xi[1], xi[0], 0.0) * s;
        let one = integrate_to_times(&flow, BasState::from_vectors(x, xi, b).unwrap(), &[3.0], 1e-3).unwrap()[0];
        let two = integrate_to_times(&flow, BasState::from_vectors(x, xi * 2.0, b).unwrap(), &[3.0], 1e-3).unwrap()[0];
        prop_assert!((one.beta - two.beta).abs() <= 1e-10);
        prop_assert!((one.c - two.c).norm() <= 1e-10);
        prop_assert!((two.rho - one.rho - 2f64.ln()).abs() <= 1e-10);
    }

    #[test]
    fn amplitude_is_linear_in_b0(x in (0.0..TWO_PI, 0.0..TWO_PI, 0.0..TWO_PI), z in -1.0f64..1.0,
                                 ph in 0.0..TWO_PI, alpha in -2.0f64..2.0, gamma in -2.0f64..2.0) {
        let flow = SteadyFlow::abc(1.0, 1.0, 1.0);
        let x = Point::new(x.0, x.1, x.2);
        let r = (1.0 - z * z).sqrt();
        let xi = Vec3::new(r * ph.cos(), r * ph.sin(), z);
        let a = transport_matrix(&flow, &x, &xi, 2.0, 1e-3).unwrap();
        let basis = fluidex::bas::orthonormal_complement(3, &xi);
        let b0 = basis[0] * alpha + basis[1] * gamma;
        prop_assume!(b0.norm() > 1e-3);
        let direct = integrate_to_times(&flow, BasState::from_vectors(x, xi, b0).unwrap(), &[2.0], 1e-3).unwrap()[0].b();
        let combined = a.apply(&basis[0]) * alpha + a.apply(&basis[1]) * gamma;
        prop_assert!((direct - combined).norm() <= 1e-8 * (1.0 + direct.norm()));
    }

    #[test]
    fn vorticity_gradient_is_transported_as_a_covector((x, _th, _s) in planar_state()) {
        let flow = SteadyFlow::cellular();
        let g = flow.vorticity_gradient(&x).unwrap();
        prop_assume!(g.norm() > 1e-2);
        let xi = g / g.norm();
        let b = Vec3::new(-xi[1], xi[0], 0.0);
        let st = integrate_to_times(&flow, BasState::from_vectors(x, xi, b).unwrap(), &[2.0], 1e-3).unwrap()[0];
        let gt = flow.vorticity_gradient(&st.x).unwrap();
        let sin = (st.eta[0] * gt[1] - st.eta[1] * gt[0]).abs() / gt.norm();
        prop_assert!(sin.asin() <= 1e-6, "angle {}", sin.asin());
    }

    #[test]
    fn transport_matrix_is_a_cocycle((x, th, _s) in planar_state()) {
        let flow = SteadyFlow::cellular();
        let xi = unit(th);
        let first = transport_matrix(&flow, &x, &xi, 1.0, 1e-3).unwrap();
        let second = transport_matrix(&flow, &first.x_t, &first.eta_t, 1.0, 1e-3).unwrap();
        let whole = transport_matrix(&flow, &x, &xi, 2.0, 1e-3).unwrap();
        let composed = second.a0 * first.a0;
        prop_assert!((composed - whole.a0).norm() <= 1e-6 * (1.0 + whole.a0.norm()));
    }
}

#[test]
fn step_halving_shows_fourth_order() {
    let flow = SteadyFlow::cellular();
    let x = Point::new(0.4, 1.1, 0.0);
    let xi = unit(0.7);
    let b = Vec3::new(-xi[1], xi[0], 0.0);
    let beta = |h: f64| integrate_to_times(&flow, BasState::from_vectors(x, xi, b).unwrap(), &[4.0], h).unwrap()[0].beta;
    let (b1, b2, b3) = (beta(0.04), beta(0.02), beta(0.01));
    let ratio = (b1 - b2).abs() / (b2 - b3).abs();
    assert!((10.0..24.0).contains(&ratio), "error ratio {ratio}");
}
