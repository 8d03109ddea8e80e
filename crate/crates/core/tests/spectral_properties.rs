use fluidex::spectral::field::FourierField;
use fluidex::spectral::operator::DEFAULT_KERNEL_CUTOFF;
use fluidex::spectral::project::divergence_ratio;
use fluidex::spectral::{apply_b, build_b_matrix, helmholtz_project, OperatorMatrix};
use fluidex::SteadyFlow;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// Random coefficients on the modes with `max |k_i| ≤ band`.
fn random_field(dim: usize, n: usize, band: i64, seed: u64) -> FourierField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = FourierField::zeros(dim, n, dim).unwrap();
    let r = -band..=band;
    let zs: Vec<i64> = if dim == 3 { r.clone().collect() } else { vec![0] };
    for k1 in r.clone() {
        for k2 in r.clone() {
            for &k3 in &zs {
                for c in 0..dim {
                    let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    f.set_coeff(c, [k1, k2, k3], v).unwrap();
                }
            }
        }
    }
    f
}

fn cellular_op() -> &'static OperatorMatrix {
    static OP: OnceLock<OperatorMatrix> = OnceLock::new();
    OP.get_or_init(|| build_b_matrix(&SteadyFlow::cellular(), 6, DEFAULT_KERNEL_CUTOFF).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leray_projector_is_orthogonal(seed in any::<u64>(), three in any::<bool>()) {
        let (dim, n) = if three { (3, 8) } else { (2, 16) };
        let v = random_field(dim, n, 3, seed);
        let w = random_field(dim, n, 3, seed ^ 0x5555);
        let pv = helmholtz_project(&v);
        let ppv = helmholtz_project(&pv);
        prop_assert!(ppv.sub(&pv).norm_l2() <= 1e-10 * v.norm_l2());
        let lhs = pv.inner(&w);
        let rhs = v.inner(&helmholtz_project(&w));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * v.norm_l2() * w.norm_l2());
        prop_assert!(divergence_ratio(&pv) <= 1e-12);
    }

    #[test]
    fn b_is_skew_and_solenoidal(seed in any::<u64>()) {
        let flow = SteadyFlow::cellular();
        let v = helmholtz_project(&random_field(2, 32, 4, seed));
        let w = helmholtz_project(&random_field(2, 32, 4, seed.wrapping_add(1)));
        let bv = apply_b(&flow, &v).unwrap();
        let bw = apply_b(&flow, &w).unwrap();
        prop_assert!(divergence_ratio(&bv) <= 1e-9);
        let s = bv.inner(&w) + v.inner(&bw);
        prop_assert!(s.norm() <= 1e-9 * v.norm_l2() * w.norm_l2());
    }

    #[test]
    fn abc_b_is_skew(seed in any::<u64>()) {
        let flow = SteadyFlow::abc(1.0, 1.0, 1.0);
        let v = helmholtz_project(&random_field(3, 16, 2, seed));
        let w = helmholtz_project(&random_field(3, 16, 2, !seed));
        let s = apply_b(&flow, &v).unwrap().inner(&w) + v.inner(&apply_b(&flow, &w).unwrap());
        prop_assert!(s.norm() <= 1e-9 * v.norm_l2() * w.norm_l2());
    }

    #[test]
    fn parseval_holds(seed in any::<u64>(), three in any::<bool>()) {
        let (dim, n) = if three { (3, 8) } else { (2, 16) };
        let v = random_field(dim, n, 3, seed);
        prop_assert!((v.norm_l2() - v.grid_norm_l2()).abs() <= 1e-10 * v.norm_l2());
    }

    #[test]
    fn real_formulas_sample_real(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1i32..5) {
        let f = FourierField::from_fn(2, 16, 1, |x| {
            vec![Complex64::new(a * (k as f64 * x[0]).sin() + b * (x[1] - x[0]).cos(), 0.0)]
        }).unwrap();
        prop_assert!(f.max_imag_on_grid() <= 1e-12);
    }

    #[test]
    fn encoding_roundtrips(seed in any::<u64>(), three in any::<bool>()) {
        let (dim, n) = if three { (3, 4) } else { (2, 8) };
        let v = random_field(dim, n, 1, seed);
        prop_assert_eq!(FourierField::decode(&v.encode()).unwrap(), v);
    }

    #[test]
    fn decoding_arbitrary_bytes_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..600)) {
        let _ = FourierField::decode(&bytes);
    }

    #[test]
    fn truncated_headers_are_rejected(cut in 0usize..12) {
        let v = random_field(2, 4, 1, 1).encode();
        prop_assert!(FourierField::decode(&v[..cut]).is_err());
    }

    #[test]
    fn kernel_projector_is_orthogonal(seed in any::<u64>()) {
        let op = cellular_op();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rand_coords = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            (0..op.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        };
        let c = rand_coords(&mut rng);
        let d = rand_coords(&mut rng);
        let pc = op.project_kernel(&c);
        let ppc = op.project_kernel(&pc);
        let diff: f64 = pc.iter().zip(&ppc).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-10);
        let dot = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(a, b)| a * b.conj()).sum::<Complex64>();
        prop_assert!((dot(&pc, &d) - dot(&c, &op.project_kernel(&d))).norm() <= 1e-10);
        let bp = op.apply(&pc);
        prop_assert!(bp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= 1e-7);
    }
}

#[test]
fn galerkin_matrix_is_skew_hermitian() {
    let op = cellular_op();
    assert!(op.skew_defect() <= 1e-10);
    assert!(op.kernel_rank() < op.len());
    let abc = build_b_matrix(&SteadyFlow::abc(1.0, 1.0, 1.0), 3, DEFAULT_KERNEL_CUTOFF).unwrap();
    assert!(abc.skew_defect() <= 1e-10);
}

#[test]
fn constant_flow_kernel_is_everything() {
    let op = build_b_matrix(&SteadyFlow::constant(&[1.0, 2.0]), 4, DEFAULT_KERNEL_CUTOFF).unwrap();
    assert_eq!(op.kernel_rank(), op.len());
}
