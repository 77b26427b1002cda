use ffpn::feasibility::DropOperator;
use ffpn::geometry::{build_radon_matrix, normalize_rows, ScanGeometry};
use ffpn::metrics::{psnr, ssim};
use ffpn::numerics::{distance, dot, norm, Prng, SparseMatrix};
use ffpn::regularizer::io::{decode_weights, encode_weights};
use ffpn::regularizer::{
    enforce_lipschitz, lipschitz_check, sample_perturbations, ActivationPlacement, NetworkWeights, SafeguardConfig,
};
use ffpn::variational::{soft_threshold, tv_value, DiffOperator};
use proptest::prelude::*;

fn unit_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n)
}

fn signed_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn small_system(angles: usize, beams: usize, side: usize) -> SparseMatrix {
    build_radon_matrix(&ScanGeometry::new(angles, beams, side).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radon_adjoint_identity(angles in 1usize..8, beams in 1usize..12, side in 2usize..9, seed in any::<u64>()) {
        let a = small_system(angles, beams, side);
        let mut rng = Prng::new(seed);
        let u = rng.gaussian_vec(a.cols(), 1.0);
        let y = rng.gaussian_vec(a.rows(), 1.0);
        let lhs = dot(&a.spmv(&u).unwrap(), &y);
        let rhs = dot(&u, &a.spmv_transpose(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn radon_entries_are_nonnegative_lengths(angles in 1usize..8, beams in 1usize..12, side in 2usize..9) {
        let a = small_system(angles, beams, side);
        prop_assert!(a.values().iter().all(|v| *v > 0.0 && *v <= std::f64::consts::SQRT_2 + 1e-12));
    }

    #[test]
    fn drop_step_is_nonexpansive(u in signed_vec(36), v in signed_vec(36), d in signed_vec(32)) {
        let (a, d) = normalize_rows(&small_system(4, 8, 6), &d).unwrap();
        let op = DropOperator::new(a, 1.0).unwrap();
        let tu = op.apply(&d, &u).unwrap();
        let tv = op.apply(&d, &v).unwrap();
        prop_assert!(distance(&tu, &tv) <= distance(&u, &v) + 1e-12);
    }

    #[test]
    fn soft_threshold_satisfies_prox_optimality(u in signed_vec(20), lambda in 0.0f64..1.5) {
        let z = soft_threshold(&u, lambda).unwrap();
        for (zi, ui) in z.iter().zip(&u) {
            let r = ui - zi;
            if *zi == 0.0 {
                prop_assert!(r.abs() <= lambda + 1e-15);
            } else {
                prop_assert!((r - lambda * zi.signum()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn tv_is_a_seminorm(u in signed_vec(30), v in signed_vec(30), c in -3.0f64..3.0) {
        let d = DiffOperator::new(5, 6);
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let tu = tv_value(&d, &u).unwrap();
        prop_assert!(tv_value(&d, &sum).unwrap() <= tu + tv_value(&d, &v).unwrap() + 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        prop_assert!((tv_value(&d, &scaled).unwrap() - c.abs() * tu).abs() <= 1e-10 * (1.0 + tu));
        let shifted: Vec<f64> = u.iter().map(|x| x + c).collect();
        prop_assert!((tv_value(&d, &shifted).unwrap() - tu).abs() <= 1e-12 * (1.0 + tu));
    }

    #[test]
    fn metrics_are_symmetric_and_bounded(u in unit_vec(144), v in unit_vec(144)) {
        let p = psnr(&u, &v, 1.0).unwrap();
        prop_assert_eq!(p, psnr(&v, &u, 1.0).unwrap());
        prop_assert!(p >= 0.0);
        let s = ssim(&u, &v, (12, 12)).unwrap();
        prop_assert!((s - ssim(&v, &u, (12, 12)).unwrap()).abs() <= 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s));
    }

    #[test]
    fn weights_survive_encoding(width in 1usize..5, n_convs in 1usize..5, every in any::<bool>(), seed in any::<u64>()) {
        let placement = if every { ActivationPlacement::EveryConv } else { ActivationPlacement::Interior };
        let net = NetworkWeights::init(width, n_convs, 3, 0.02, &mut Prng::new(seed)).unwrap().with_placement(placement);
        let bytes = encode_weights(&net);
        let back = decode_weights(&bytes).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn regularizer_vjp_matches_forward_linearization(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let net = NetworkWeights::init(3, 3, 3, 0.01, &mut rng).unwrap();
        let u = rng.gaussian_vec(25, 1.0);
        let dir = rng.gaussian_vec(25, 1.0);
        let g = rng.gaussian_vec(25, 1.0);
        let h = 1e-6;
        let plus: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
        let jv: Vec<f64> = net.forward(&plus, 5, 5).unwrap().iter()
            .zip(net.forward(&minus, 5, 5).unwrap())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let lhs = dot(&g, &jv);
        let rhs = dot(&net.vjp_input(&u, &g, 5, 5).unwrap(), &dir);
        prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + lhs.abs()));
    }

    #[test]
    fn safeguard_always_leaves_a_compliant_network(seed in any::<u64>(), gain in 0.1f64..3.0, gamma in 0.5f64..=1.0) {
        let mut rng = Prng::new(seed);
        let mut net = NetworkWeights::zeros(1, 1, 3, 0.01).unwrap();
        for p in net.param_slices_mut() {
            p.iter_mut().for_each(|v| *v = gain * rng.gaussian());
        }
        let points: Vec<Vec<f64>> = (0..4).map(|_| (0..25).map(|_| rng.uniform()).collect()).collect();
        let cfg = SafeguardConfig { gamma, ..SafeguardConfig::default() };
        let zetas = sample_perturbations(&points, &cfg, &mut rng);
        let out = enforce_lipschitz(&net, (5, 5), &points, zetas.clone(), None, gamma).unwrap();
        let check = lipschitz_check(&out.weights, (5, 5), &points, &zetas, None).unwrap();
        if out.enforced {
            prop_assert!(check.c1 <= gamma * check.c2 + 1e-8);
            prop_assert!(out.branch_scale >= 0.0 && out.branch_scale <= 1.0);
        } else {
            prop_assert!(gamma < 1.0);
        }
        prop_assert!(norm(&zetas[0]) > 0.0);
    }
}
