use mixsparse::chernoff::{
    agnostic_theta_max, block_mgf, chernoff_bound, log_chernoff_bound, optimal_theta_agnostic, Block, ChernoffQuery,
};
use mixsparse::cubic::real_roots;
use mixsparse::decoders::{decode_exhaustive, decode_local_search, support_loss};
use mixsparse::lasso::{lasso_objective, solve_lasso, LassoConfig};
use mixsparse::model::{generate_dataset, snr_report, support_error};
use mixsparse::planner::{
    check_sufficient, price_of_quality, sample_frontier, NoiseLayout, RegimeSpec, SufficiencyQuery,
};
use mixsparse::{MixedDataset, NoiseProfile, Setting, SparseSignal};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn variance_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..10.0, 0.0f64..=1.0).prop_map(|(v2, r)| ((v2 * r).max(1e-3), v2))
}

fn setting() -> impl Strategy<Value = Setting> {
    prop_oneof![Just(Setting::Agnostic), Just(Setting::Informed)]
}

proptest! {
    #[test]
    fn snr_is_sandwiched(n1 in 0usize..50, n2 in 0usize..50, (v1, v2) in variance_pair(), s in 1usize..20) {
        prop_assume!(n1 + n2 > 0);
        let noise = NoiseProfile::new(n1, n2, v1, v2).unwrap();
        let sig = SparseSignal::binary(s + 1, &(0..s).collect::<Vec<_>>()).unwrap();
        let r = snr_report(&sig, &noise).unwrap();
        let avg = (n1 as f64 * v1 + n2 as f64 * v2) / (n1 + n2) as f64;
        prop_assert!((r.sigma_avg_sq - avg).abs() <= 1e-12 * avg);
        prop_assert!(r.snr2 <= r.snr * (1.0 + 1e-12));
        prop_assert!(r.snr <= r.snr1 * (1.0 + 1e-12));
    }

    #[test]
    fn support_error_is_a_metric(
        a in proptest::sample::subsequence((0..15).collect::<Vec<usize>>(), 4),
        b in proptest::sample::subsequence((0..15).collect::<Vec<usize>>(), 4),
        c in proptest::sample::subsequence((0..15).collect::<Vec<usize>>(), 4),
    ) {
        prop_assert_eq!(support_error(&a, &b), support_error(&b, &a));
        prop_assert_eq!(support_error(&a, &b) == 0, a == b);
        prop_assert!(support_error(&a, &c) <= support_error(&a, &b) + support_error(&b, &c));
        prop_assert_eq!(support_error(&a, &b) % 2, 0);
    }

    #[test]
    fn poq_bounds_and_informed_dominance((v1, v2) in variance_pair(), delta in 0.01f64..0.99, s in 1usize..200) {
        let ag = price_of_quality(Setting::Agnostic, v1, v2, s, delta).unwrap();
        let inf = price_of_quality(Setting::Informed, v1, v2, s, delta).unwrap();
        prop_assert!(ag >= 1.0 - 1e-12);
        prop_assert!(ag <= 2.0 - v1 / v2 + 1e-12);
        prop_assert!(inf >= ag - 1e-12);
        if v1 < v2 * (1.0 - 1e-6) {
            prop_assert!(ag > 1.0);
        }
    }

    #[test]
    fn trade_property(
        setting in setting(),
        (v1, v2) in variance_pair(),
        delta in 0.05f64..0.95,
        n1 in 1usize..300,
        n2 in 0usize..300,
        eps in 0.01f64..2.0,
    ) {
        let regime = RegimeSpec::sublinear(200, 5).unwrap();
        let check = check_sufficient(&SufficiencyQuery::two_block(setting, n1, n2, v1, v2, delta, eps, regime)).unwrap();
        if check.holds {
            let gamma = check.price_of_quality();
            prop_assert!(check.continuous_lhs(n1 as f64 - 1.0, n2 as f64 + gamma) >= check.rhs() - 1e-9);
        }
    }

    #[test]
    fn low_quality_only_allocation_is_weakest(
        setting in setting(),
        (v1, v2) in variance_pair(),
        delta in 0.05f64..0.95,
        n1 in 0usize..200,
        n2 in 0usize..200,
    ) {
        let regime = RegimeSpec::sublinear(300, 6).unwrap();
        let mixed = check_sufficient(&SufficiencyQuery::two_block(setting, n1, n2, v1, v2, delta, 0.5, regime)).unwrap();
        let flat = check_sufficient(&SufficiencyQuery::two_block(setting, 0, n1 + n2, v1, v2, delta, 0.5, regime)).unwrap();
        prop_assert!(mixed.lhs >= flat.lhs * (1.0 - 1e-12));
        prop_assert!(!flat.holds || mixed.holds);
    }

    #[test]
    fn general_sigma_reproduces_two_blocks(
        setting in setting(),
        (v1, v2) in variance_pair(),
        delta in 0.05f64..0.95,
        n1 in 0usize..60,
        n2 in 1usize..60,
    ) {
        // n2 >= 1: the largest variance must be present for the agnostic form to match.
        let regime = RegimeSpec::sublinear(100, 4).unwrap();
        let two = check_sufficient(&SufficiencyQuery::two_block(setting, n1, n2, v1, v2, delta, 0.5, regime)).unwrap();
        let mut variances = vec![v1; n1];
        variances.extend(std::iter::repeat_n(v2, n2));
        let general = check_sufficient(&SufficiencyQuery {
            layout: NoiseLayout::GeneralSigma { variances },
            ..SufficiencyQuery::two_block(setting, 0, 0, v1, v2, delta, 0.5, regime)
        }).unwrap();
        prop_assert!((general.lhs - two.lhs).abs() <= 1e-12 * two.lhs.max(1.0));
        prop_assert_eq!(general.holds, two.holds);
    }

    #[test]
    fn frontier_is_minimal_and_nonincreasing(
        setting in setting(),
        (v1, v2) in variance_pair(),
        delta in 0.05f64..0.95,
        eps in 0.0f64..2.0,
    ) {
        let regime = RegimeSpec::sublinear(150, 5).unwrap();
        let template = SufficiencyQuery::two_block(setting, 0, 0, v1, v2, delta, eps, regime);
        let grid: Vec<usize> = (0..400).step_by(7).collect();
        let points = sample_frontier(&template, &grid).unwrap();
        prop_assert!(points.windows(2).all(|w| w[1].n2 <= w[0].n2));
        let probe = SufficiencyQuery { epsilon: eps.max(1e-12), ..template.clone() };
        let coeffs = check_sufficient(&probe).unwrap();
        let rhs = (1.0 + eps) * coeffs.n_star;
        for pt in points {
            prop_assert!(coeffs.continuous_lhs(pt.n1 as f64, pt.n2 as f64) >= rhs);
            if pt.n2 > 0 {
                prop_assert!(coeffs.continuous_lhs(pt.n1 as f64, pt.n2 as f64 - 1.0) < rhs);
            }
        }
    }

    #[test]
    fn chernoff_dominance_and_monotonicity(
        (v1, v2) in variance_pair(),
        n1 in 0usize..30,
        n2 in 0usize..30,
        m in 1u64..30,
    ) {
        let ag = ChernoffQuery::new(Setting::Agnostic, n1, n2, v1, v2, m);
        let inf = ChernoffQuery { setting: Setting::Informed, ..ag };
        let a = log_chernoff_bound(&ag).unwrap();
        let i = log_chernoff_bound(&inf).unwrap();
        prop_assert!(i <= a + 1e-12 * a.abs().max(1.0));
        for q in [ag, inf] {
            let base = log_chernoff_bound(&q).unwrap();
            let tol = 1e-12 * base.abs().max(1.0);
            let more_n1 = log_chernoff_bound(&ChernoffQuery { n1: q.n1 + 1, ..q }).unwrap();
            let more_n2 = log_chernoff_bound(&ChernoffQuery { n2: q.n2 + 1, ..q }).unwrap();
            let more_m = log_chernoff_bound(&ChernoffQuery { m: q.m + 1, ..q }).unwrap();
            prop_assert!(more_n1 <= base + tol);
            prop_assert!(more_n2 <= base + tol);
            prop_assert!(more_m <= base + tol);
            let b = chernoff_bound(&q).unwrap();
            prop_assert!(b > 0.0 && b <= 1.0);
        }
    }

    #[test]
    fn optimized_theta_never_worse(
        (v1, v2) in variance_pair(),
        n1 in 0usize..30,
        n2 in 0usize..30,
        m in 1u64..30,
    ) {
        let q = ChernoffQuery::new(Setting::Agnostic, n1, n2, v1, v2, m);
        let (theta, best) = optimal_theta_agnostic(&q).unwrap();
        prop_assert!(best <= log_chernoff_bound(&q).unwrap() + 1e-12);
        prop_assert!(theta > 0.0);
        if n1 + n2 > 0 {
            prop_assert!(theta < agnostic_theta_max(&q));
        }
    }

    #[test]
    fn high_quality_domain_contains_low_quality(
        (v1, v2) in variance_pair(),
        m in 1u64..40,
        theta in 0.0f64..5.0,
    ) {
        let q = ChernoffQuery::new(Setting::Agnostic, 1, 1, v1, v2, m).with_theta(theta);
        if block_mgf(&q, Block::LowQuality).unwrap().is_finite() {
            prop_assert!(block_mgf(&q, Block::HighQuality).unwrap().is_finite());
        }
    }

    #[test]
    fn cubic_roots_have_small_residuals(c in proptest::array::uniform4(-50.0f64..50.0)) {
        prop_assume!(c[0].abs() > 1e-3);
        for r in real_roots(c[0], c[1], c[2], c[3]) {
            let value = ((c[0] * r + c[1]) * r + c[2]) * r + c[3];
            let scale = c.iter().map(|v| v.abs()).sum::<f64>() * (1.0 + r.abs()).powi(3);
            prop_assert!(value.abs() <= 1e-10 * scale);
        }
    }
}

fn small_instance(seed: u64, p: usize, s: usize, n1: usize, n2: usize, v1: f64, v2: f64) -> (MixedDataset, SparseSignal) {
    let support: Vec<usize> = mixsparse::rng::CounterRng::stream(seed, mixsparse::rng::Stream::Signal).subset(p, s);
    let sig = SparseSignal::binary(p, &support).unwrap();
    let ds = generate_dataset(&sig, &NoiseProfile::new(n1, n2, v1, v2).unwrap(), seed).unwrap();
    (ds, sig)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoding_is_permutation_equivariant(seed in any::<u64>(), perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
        let (ds, _) = small_instance(seed, 8, 2, 8, 8, 0.3, 1.2);
        // Column j of the permuted design is column perm[j] of the original.
        let x = DMatrix::from_fn(ds.n(), 8, |i, j| ds.x[(i, perm[j])]);
        let permuted = MixedDataset::from_parts(x, ds.y.clone(), ds.noise, None, ds.seed).unwrap();
        for setting in [Setting::Agnostic, Setting::Informed] {
            let a = decode_exhaustive(&ds, 2, setting).unwrap();
            let b = decode_exhaustive(&permuted, 2, setting).unwrap();
            let mut mapped: Vec<usize> = b.support.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, a.support);
            prop_assert!((a.loss - b.loss).abs() <= 1e-12 * a.loss.max(1.0));
        }
    }

    #[test]
    fn whitening_turns_agnostic_into_informed(seed in any::<u64>(), (v1, v2) in variance_pair()) {
        let (ds, _) = small_instance(seed, 7, 2, 6, 9, v1, v2);
        let informed = decode_exhaustive(&ds, 2, Setting::Informed).unwrap();
        let weights: Vec<f64> = ds.noise.row_variances().iter().map(|v| 1.0 / v.sqrt()).collect();
        let x = DMatrix::from_fn(ds.n(), 7, |i, j| ds.x[(i, j)] * weights[i]);
        let y = nalgebra::DVector::from_fn(ds.n(), |i, _| ds.y[i] * weights[i]);
        let whitened = MixedDataset::from_parts(x, y, ds.noise, None, ds.seed).unwrap();
        let agnostic = decode_exhaustive(&whitened, 2, Setting::Agnostic).unwrap();
        prop_assert_eq!(agnostic.support, informed.support);
        prop_assert!((agnostic.loss - informed.loss).abs() <= 1e-10 * informed.loss.max(1.0));
    }

    #[test]
    fn exhaustive_lower_bounds_local_search(seed in any::<u64>(), restarts in 1usize..4) {
        let (ds, _) = small_instance(seed, 10, 3, 10, 10, 0.4, 1.6);
        for setting in [Setting::Agnostic, Setting::Informed] {
            let full = decode_exhaustive(&ds, 3, setting).unwrap();
            let local = decode_local_search(&ds, 3, setting, restarts, seed).unwrap();
            prop_assert!(full.loss <= local.loss);
            prop_assert_eq!(support_loss(&ds, &local.support, setting).unwrap(), local.loss);
        }
    }

    #[test]
    fn generation_is_pure(seed in any::<u64>()) {
        let (a, _) = small_instance(seed, 6, 2, 3, 4, 0.2, 0.7);
        let (b, _) = small_instance(seed, 6, 2, 3, 4, 0.2, 0.7);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lasso_objective_is_consistent(seed in any::<u64>(), lambda in 0.01f64..0.5) {
        let (ds, _) = small_instance(seed, 12, 3, 10, 10, 0.1, 0.5);
        let sol = solve_lasso(&ds, &LassoConfig::new(lambda)).unwrap();
        prop_assert!(sol.converged);
        let recomputed = lasso_objective(&ds.x, &ds.y, &sol.beta, lambda);
        prop_assert!((sol.objective - recomputed).abs() <= 1e-12 * recomputed.max(1.0));
        prop_assert!(sol.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        prop_assert!(sol.objective <= lasso_objective(&ds.x, &ds.y, &[0.0; 12], lambda) + 1e-12);
    }
}
