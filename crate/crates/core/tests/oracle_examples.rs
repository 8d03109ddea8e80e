use fluidex::oracle::{
    evolve_linearized_series, predicted_norms, predicted_wavepacket, stable_line_packet, ComparisonSettings,
};
use fluidex::spectral::fit::linear_fit;
use fluidex::spectral::{make_wavepacket, Envelope, PacketKind, PacketSpec};
use fluidex::{compare_growth, estimate_exponent, ClassTag, Point, SteadyFlow, Vec3};

fn packet(x0: (f64, f64), xi0: (f64, f64), zeta: f64, delta: f64) -> PacketSpec {
    PacketSpec {
        kind: PacketKind::Phi2d,
        envelope: Envelope::Bump,
        x0: Point::new(x0.0, x0.1, 0.0),
        zeta,
        delta,
        xi0: Vec3::new(xi0.0, xi0.1, 0.0),
        p: Vec3::zeros(),
    }
}

fn norms(flow: &SteadyFlow, spec: &PacketSpec, times: &[f64], n: usize, dt: f64) -> Vec<f64> {
    let w0 = make_wavepacket(spec, n).unwrap();
    evolve_linearized_series(flow, &w0, times, n, dt)
        .unwrap()
        .iter()
        .map(|s| s.norm().unwrap())
        .collect()
}

#[test]
fn constant_flow_growth_matches_exactly() {
    let flow = SteadyFlow::constant(&[1.0, 2.0]);
    let mut spec = packet((1.0, 1.0), (1.0, 0.0), 1.0, 1.0 / 8.0);
    spec.envelope = Envelope::Global;
    let settings = ComparisonSettings { resolution: 64, dt: 0.005, step: 1e-2, quadrature_points: 32 };
    let cmp = compare_growth(&flow, &spec, &[0.0, 1.0, 2.5, 4.0], &settings).unwrap();
    assert!(cmp.max_gap <= 1e-6, "{cmp:?}");
}

#[test]
fn shear_growth_is_subexponential() {
    let flow = SteadyFlow::shear();
    let spec = packet((1.0, 1.0), (0.6, 0.8), 0.8, 1.0 / 8.0);
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
    let oracle: Vec<f64> = norms(&flow, &spec, &times, 128, 0.01).iter().map(|v| v.ln()).collect();
    let predicted: Vec<f64> = predicted_norms(&flow, &spec, &times, 1e-3, 48).unwrap().iter().map(|v| v.ln()).collect();
    let so = linear_fit(&times, &oracle).unwrap().slope;
    let sp = linear_fit(&times, &predicted).unwrap().slope;
    assert!(so <= 0.1 && sp <= 0.1, "oracle slope {so}, predicted slope {sp}");
}

#[test]
fn stagnation_packet_grows_monotonically() {
    let flow = SteadyFlow::cellular();
    let spec = packet((0.0, 0.0), (1.0, 0.0), 0.8, 1.0 / 8.0);
    let times: Vec<f64> = (0..=12).map(|i| i as f64 * 0.25).collect();
    let n = norms(&flow, &spec, &times, 128, 0.01);
    assert!(n.windows(2).all(|w| w[1] > w[0]), "{n:?}");
}

#[test]
fn transported_packet_starts_at_the_leading_term() {
    let flow = SteadyFlow::cellular();
    let spec = stable_line_packet(1.0 / 8.0);
    let p = predicted_wavepacket(&flow, &spec, 0.0, 64, 1e-3).unwrap();
    let lead = spec.leading_term(64).unwrap();
    assert!(p.sub(&lead).norm_l2() <= 1e-10 * lead.norm_l2());
}

#[test]
fn constant_flow_transport_is_a_translation() {
    let flow = SteadyFlow::constant(&[1.0, 2.0]);
    let spec = packet((1.0, 1.0), (1.0, 0.0), 0.8, 1.0 / 8.0);
    let t = 0.75;
    let p = predicted_wavepacket(&flow, &spec, t, 64, 1e-2).unwrap();
    let mut moved = spec.clone();
    moved.x0 = Point::new(1.0 + t, 1.0 + 2.0 * t, 0.0);
    let lead = moved.leading_term(64).unwrap();
    // The carrier phase is carried along too: x·ξ₀ at the new point is shifted by t c·ξ₀.
    let shift = num_complex::Complex64::from_polar(1.0, -t / spec.delta);
    assert!(p.sub(&lead.scaled(shift)).norm_l2() <= 1e-8 * lead.norm_l2());
}

#[test]
fn time_stepping_is_fourth_order() {
    let flow = SteadyFlow::cellular();
    let spec = stable_line_packet(1.0 / 8.0);
    let w0 = make_wavepacket(&spec, 64).unwrap();
    let q = |dt: f64| evolve_linearized_series(&flow, &w0, &[0.8], 64, dt).unwrap().remove(0).q;
    let (a, b, c) = (q(0.04), q(0.02), q(0.01));
    let ratio = a.sub(&b).norm_l2() / b.sub(&c).norm_l2();
    assert!((10.0..24.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn resolved_packets_are_resolution_independent() {
    let flow = SteadyFlow::cellular();
    let spec = stable_line_packet(1.0 / 8.0);
    let coarse = norms(&flow, &spec, &[2.0], 64, 0.01)[0];
    let fine = norms(&flow, &spec, &[2.0], 128, 0.01)[0];
    assert!((coarse - fine).abs() <= 0.01 * fine, "{coarse} vs {fine}");
}

#[test]
fn packet_growth_is_bounded_by_the_exponent() {
    let flow = SteadyFlow::cellular();
    let mu = estimate_exponent(&flow, ClassTag::Full, &[5.0, 10.0, 15.0], 100, 1, 1e-2).unwrap().mu_hat;
    let t = 3.0;
    for spec in [
        stable_line_packet(1.0 / 8.0),
        packet((0.0, 0.0), (1.0, 0.0), 0.8, 1.0 / 8.0),
        packet((1.0, 2.0), (0.6, 0.8), 0.5, 1.0 / 8.0),
    ] {
        let n = norms(&flow, &spec, &[0.0, t], 128, 0.01);
        let rate = (n[1] / n[0]).ln() / t;
        assert!(rate <= mu + 0.1, "rate {rate} > mu {mu} + 0.1 for {spec:?}");
    }
}
