use proptest::prelude::*;

use epsfbm::epsilon::{slrb, truncation_level, uniform_error_bound, DyadicPath, RecordParams, TiltedProposal};
use epsfbm::gaussian::{sample_dyadic, GridGaussian};
use epsfbm::mlmc::{allocate, estimate, FunctionalSpec, PathFunctional, SamplerMode};
use epsfbm::rng::RngStream;
use epsfbm::sde::{euler_constants, ssde, FieldBounds, Monomial, VectorFieldSpec};

fn record_params() -> impl Strategy<Value = RecordParams> {
    (0.05..0.95f64, 0.05..0.95f64, 0.5..8.0f64).prop_map(|(h, frac, rho)| RecordParams::new(h, h * frac, rho).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_covariance_is_symmetric_psd(
        mut pts in prop::collection::vec(0.001..1.0f64, 2..24),
        h in 0.05..0.95f64,
    ) {
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let g = GridGaussian::fbm(&pts, h).unwrap();
        prop_assert_eq!(g.mean.len(), pts.len());
        prop_assert_eq!(g.cov.nrows(), pts.len());
        prop_assert!((&g.cov - g.cov.transpose()).amax() <= 1e-10);
        let max_diag = g.cov.diagonal().max();
        let eig = g.cov.clone().symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() >= -1e-10 * max_diag, "{}", eig.min());
    }

    #[test]
    fn streams_replay_and_separate(seed in any::<u64>(), id in 0..1_000_000u64) {
        let draw = |s, i| {
            let mut r = RngStream::new(s, i);
            (0..8).map(|_| r.normal()).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(seed, id), draw(seed, id));
        prop_assert_ne!(draw(seed, id), draw(seed, id + 1));
    }

    #[test]
    fn record_params_split_and_thresholds(
        h in 0.05..0.95f64,
        frac in 0.05..0.95f64,
        nu in 0.01..5.0f64,
        nu_star in 0.01..5.0f64,
    ) {
        let p = RecordParams::with_nu(h, h * frac, nu, nu_star).unwrap();
        prop_assert!((p.rho - 2.0 * (nu + nu_star)).abs() <= 1e-12 * p.rho);
        for k in 0..60 {
            prop_assert!(p.ell(k + 1) < p.ell(k));
        }
        prop_assert!(RecordParams::with_nu(h, h, nu, nu_star).is_err());
        prop_assert!(RecordParams::with_nu(h, h * frac, -nu, nu_star).is_err());
    }

    #[test]
    fn dyadic_restriction_stays_valid(level in 0u32..8, h in 0.05..0.95f64, seed in any::<u64>()) {
        let v = sample_dyadic(level, h, &mut RngStream::new(seed, 0)).unwrap();
        let path = DyadicPath::new(h, level, v).unwrap();
        prop_assert_eq!(path.values[0], 0.0);
        for k in 0..=level {
            let r = path.restrict(k).unwrap();
            prop_assert_eq!(r.values[0], 0.0);
            prop_assert!(DyadicPath::new(h, k, r.values.clone()).is_ok());
            prop_assert_eq!(*r.values.last().unwrap(), *path.values.last().unwrap());
        }
    }

    #[test]
    fn tilted_statistic_is_beta_projection(a in -10.0..10.0f64, b in -10.0..10.0f64, c in -10.0..10.0f64) {
        let t = TiltedProposal { m: 1, k: 1, up: true, triple: [a, b, c] };
        prop_assert!((t.statistic() - (0.5 * a - b + 0.5 * c)).abs() < 1e-12);
    }

    #[test]
    fn certificate_bound_meets_tolerance(p in record_params(), eps in 1e-4..2.0f64, floor in 0u32..30) {
        let n = truncation_level(eps, floor, &p).unwrap();
        prop_assert!(n >= floor);
        let a = p.gap();
        let direct = p.rho * (-a * (n + 1) as f64).exp2() / (1.0 - (-a).exp2());
        prop_assert!((uniform_error_bound(n, &p) - direct).abs() <= 1e-12 * direct);
        prop_assert!(uniform_error_bound(n, &p) <= eps);
        // ceil rounding overshoots the smallest sufficient level by at most one
        if n > floor + 1 {
            prop_assert!(uniform_error_bound(n - 2, &p) > eps * (1.0 - 1e-12));
        }
    }

    #[test]
    fn euler_constant_sequences(
        f in 1e-4..0.02f64,
        grad in 1e-4..0.02f64,
        hess in 0.0..0.02f64,
        c in 1.0..1.5f64,
        alpha in 0.55..0.95f64,
        d in 1usize..3,
        h in 2usize..4,
    ) {
        let k = match euler_constants(&FieldBounds { f, grad_f: grad, hess_f: hess }, d, h, c, alpha) {
            Ok(k) => k,
            Err(epsfbm::Error::Domain(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for w in k.gamma_seq.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        for w in k.upsilon_seq.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert_eq!(k.k_star, (4.0 * k.zeta).powf(1.0 / alpha).ceil() as u64);
        let sum = k.upsilon_final + k.g1_star;
        if sum.is_finite() {
            prop_assert!((k.g - sum).abs() <= 1e-12 * k.g);
        } else {
            prop_assert_eq!(k.g, f64::INFINITY);
        }
    }

    #[test]
    fn plan_reps_positive_and_decaying(eps in 0.02..0.5f64, which in 0usize..3) {
        let g = [PathFunctional::SupNorm, PathFunctional::TimeAverage, PathFunctional::EndpointSquared][which];
        let spec = FunctionalSpec::Path { g };
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let plan = allocate(eps, &spec, &p).unwrap();
        prop_assert_eq!(plan.reps.len(), plan.top as usize + 1);
        prop_assert!(plan.reps.iter().all(|&r| r >= 1));
        for w in plan.reps[1.min(plan.reps.len() - 1)..].windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(plan.bias_bound <= eps / 2f64.sqrt() * (1.0 + 1e-12));
        prop_assert!(plan.variance_budget() <= eps * eps / 2.0 * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ledger_invariants_after_search(seed in any::<u64>(), rho in 4.0..8.0f64) {
        let p = RecordParams::new(0.8, 0.1, rho).unwrap();
        let (ledger, path) = slrb(&p, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert!(ledger.finalized);
        prop_assert!(ledger.breaker_levels.windows(2).all(|w| w[0] < w[1]));
        let want = ledger.breaker_levels.last().copied().unwrap_or(ledger.starting_level).max(ledger.starting_level);
        prop_assert_eq!(ledger.n(), want);
        prop_assert_eq!(path.level, ledger.level);
    }

    #[test]
    fn sde_guarantee_within_eps(seed in any::<u64>(), a in 1e-4..1e-3f64, eps in 0.3..1.0f64) {
        let field = VectorFieldSpec {
            dim: 1,
            noise_dim: 1,
            drift: vec![vec![]],
            diffusion: vec![vec![vec![Monomial { coef: a, powers: vec![1] }]]],
            bounds: FieldBounds { f: 2.0 * a, grad_f: a, hess_f: 0.0 },
            domain_radius: 2.0,
        };
        let p = RecordParams::new(0.95, 0.1, 5.0).unwrap();
        let (res, drivers) = ssde(eps, &field, &[1.0], &p, 0.7, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert!(res.guarantee <= eps);
        prop_assert!(res.level >= res.n_y);
        prop_assert_eq!(res.states.len(), (1usize << res.level) + 1);
        prop_assert!(drivers.iter().all(|d| d.level == res.level));
    }

    #[test]
    fn estimate_is_finite(seed in any::<u64>(), which in 0usize..3) {
        let g = [PathFunctional::SupNorm, PathFunctional::TimeAverage, PathFunctional::Endpoint][which];
        let spec = FunctionalSpec::Path { g };
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let plan = allocate(0.4, &spec, &p).unwrap();
        let e = estimate(&plan, &spec, &p, SamplerMode::Nominal, 1, &RngStream::new(seed, 0)).unwrap();
        prop_assert!(e.value.is_finite() && e.std_error.is_finite());
        prop_assert!(e.levels.iter().all(|l| l.variance >= 0.0));
    }
}
