mod common;

use proptest::prelude::*;

use common::{random_ball, random_spd, random_sym};
use wishart::bounds::*;
use wishart::sampling::{MomentEstimate, Normals, RngSpec, Sampler, Variant};
use wishart::wick::WickCaps;
use wishart::{Error, Matrix, SymMatrix};

type Sym = SymMatrix<f64>;

/// Sample mean and its standard error.
fn mc(trials: u64, rng: &RngSpec, f: impl Fn(&mut Normals) -> f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..trials).map(|t| f(&mut rng.trial(t))).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn within(est: (f64, f64), want: f64, z: f64) -> bool {
    (est.0 - want).abs() <= z * est.1
}

fn psd_a(seed: u64, r: usize) -> Sym {
    random_spd(seed + 500, r, 0.0)
}

const ALL_KINDS: [ThresholdKind; 9] = [
    ThresholdKind::TraceTwoSided,
    ThresholdKind::TracePos,
    ThresholdKind::TraceNeg,
    ThresholdKind::TraceGaussian,
    ThresholdKind::Opnorm,
    ThresholdKind::EigenSup,
    ThresholdKind::Lambda1,
    ThresholdKind::Lambda1Fluctuation,
    ThresholdKind::MomentTail,
];

#[test]
fn opnorm_plug_in() {
    let args = ThresholdArgs { p: Some(Sym::identity(2)), n_samples: Some(1000), delta: 1.0, ..Default::default() };
    let v = concentration_threshold(ThresholdKind::Opnorm, &args).unwrap();
    assert!((v - 5.0 * 45f64.sqrt()).abs() < 1e-12);
    let sup = concentration_threshold(ThresholdKind::EigenSup, &args).unwrap();
    assert!((sup - v / 1000f64.sqrt()).abs() < 1e-12);
}

#[test]
fn thresholds_grow_with_delta() {
    let p = random_spd(1, 3, 0.2);
    let a = psd_a(1, 3);
    for kind in ALL_KINDS {
        let at = |delta: f64| {
            concentration_threshold(
                kind,
                &ThresholdArgs { a: Some(a.clone()), p: Some(p.clone()), n_samples: Some(100_000), delta, z: Some(0.7) },
            )
            .unwrap()
        };
        let mut last = f64::NEG_INFINITY;
        for k in 0..30 {
            let v = at(0.25 * k as f64);
            assert!(v.is_finite() && v >= last, "{kind:?} at step {k}");
            last = v;
        }
    }
}

#[test]
fn threshold_argument_errors() {
    let p = Sym::identity(2);
    let base = ThresholdArgs { p: Some(p.clone()), n_samples: Some(100), delta: 1.0, ..Default::default() };
    assert!(matches!(concentration_threshold(ThresholdKind::TraceTwoSided, &base), Err(Error::Invalid(_))));
    assert!(matches!(concentration_threshold(ThresholdKind::MomentTail, &base), Err(Error::Invalid(_))));
    let neg = ThresholdArgs { delta: -1.0, ..base.clone() };
    assert!(matches!(concentration_threshold(ThresholdKind::Lambda1, &neg), Err(Error::Hypothesis(_))));
    let indefinite = ThresholdArgs { a: Some(Sym::diag(&[1.0, -1.0])), ..base.clone() };
    assert!(matches!(concentration_threshold(ThresholdKind::TracePos, &indefinite), Err(Error::Hypothesis(_))));
    assert!(concentration_threshold(ThresholdKind::TraceTwoSided, &indefinite).is_ok());
    let wrong = ThresholdArgs { a: Some(Sym::identity(3)), ..base };
    assert!(matches!(concentration_threshold(ThresholdKind::TraceTwoSided, &wrong), Err(Error::Dimension { .. })));
}

#[test]
fn trace_threshold_coverage() {
    let r = 3;
    let p = random_spd(2, r, 0.2);
    let a = random_sym(2, r);
    let big_n = 40;
    let delta = 2.0;
    let level = concentration_threshold(
        ThresholdKind::TraceTwoSided,
        &ThresholdArgs { a: Some(a.clone()), p: Some(p.clone()), n_samples: Some(big_n), delta, z: None },
    )
    .unwrap();
    let sampler = Sampler::new(&p).unwrap();
    let f = wishart::sampling::event_frequency(
        |g| {
            let h = sampler.fluctuation(big_n, Variant::Plain, g).unwrap();
            a.matmul(&h).trace().abs() > level
        },
        20_000,
        &RngSpec::new(2, 0),
    )
    .unwrap();
    assert!(f.lo <= (-delta).exp(), "exceedance {}", f.frequency);
}

#[test]
fn moment_tail_coverage_for_exponential() {
    // E(Z^n)^{1/n} = (n!)^{1/n} ≤ n for Z ~ Exp(1).
    for n in 1..=20usize {
        let root = (1..=n).map(|k| (k as f64).ln()).sum::<f64>() / n as f64;
        assert!(root.exp() <= n as f64 + 1e-12);
    }
    for delta in [0.5, 1.0, 3.0, 8.0] {
        let args = ThresholdArgs { delta, z: Some(1.0), ..Default::default() };
        let level = concentration_threshold(ThresholdKind::MomentTail, &args).unwrap();
        assert!((-level).exp() <= (-delta).exp());
        let rng = RngSpec::new(3, 0);
        let f = wishart::sampling::event_frequency(|g| -g.uniform().ln() > level, 10_000, &rng).unwrap();
        assert!(f.lo <= (-delta).exp());
    }
}

#[test]
fn laplace_of_trace_in_the_limit() {
    let r = 3;
    let p = random_spd(4, r, 0.2);
    let a = random_sym(4, r);
    let sampler = Sampler::new(&p).unwrap();
    for t in [-0.3, 0.2] {
        let est = mc(40_000, &RngSpec::new(4, 0), |g| (t * a.matmul(&sampler.gaussian_limit(g)).trace()).exp());
        let want = trace_ah(&a, &p, t).unwrap().exp();
        assert!(within(est, want, 4.0), "t={t}: {est:?} vs {want}");
    }
}

#[test]
fn laplace_of_squared_norm() {
    let p = Sym::diag(&[1.0, 0.5]);
    let t = 0.03;
    let (series, tail) = chi_sq(&p, t).unwrap();
    let closed = chi_sq_closed(&p, t).unwrap();
    assert!((series - closed).abs() <= 1e-12 + tail);
    let sampler = Sampler::new(&p).unwrap();
    let est = mc(40_000, &RngSpec::new(5, 0), |g| (t * sampler.gaussian_limit(g).frobenius().powi(2)).exp());
    assert!(within(est, closed.exp(), 4.0), "{est:?} vs {}", closed.exp());
}

#[test]
fn laplace_of_finite_sample_trace() {
    let r = 2;
    let p = random_spd(6, r, 0.3);
    let a = random_sym(6, r);
    let big_n = 30;
    let t = 0.25;
    let (series, tail) = trace_ahn(&a, &p, big_n, t).unwrap();
    let closed = trace_ahn_closed(&a, &p, big_n, t).unwrap();
    assert!((series - closed).abs() <= 1e-12 * (1.0 + closed.abs()) + tail);
    let sampler = Sampler::new(&p).unwrap();
    let est = mc(40_000, &RngSpec::new(6, 0), |g| (t * a.matmul(&sampler.fluctuation(big_n, Variant::Plain, g).unwrap()).trace()).exp());
    assert!(within(est, closed.exp(), 4.0), "{est:?} vs {}", closed.exp());
}

#[test]
fn h_series_against_sampling() {
    let p = random_spd(7, 2, 0.2);
    let t = 0.15;
    let (value, remainder) = h_series(&p, t, 4, &WickCaps::default()).unwrap();
    assert!(remainder < 1e-4, "remainder {remainder}");
    let sampler = Sampler::new(&p).unwrap();
    let rng = RngSpec::new(7, 0);
    let draws: Vec<Matrix<f64>> =
        (0..40_000).map(|k| sampler.gaussian_limit(&mut rng.trial(k)).scale(t).apply(f64::exp).unwrap().into_matrix()).collect();
    let est = MomentEstimate::from_samples(&draws).unwrap();
    assert!(est.max_z(value.matrix()) < 4.0);
}

#[test]
fn laplace_entry_point() {
    let id = Sym::identity(2);
    let args = LaplaceArgs { t: 0.1, dim: Some(2), ..Default::default() };
    assert_eq!(laplace(LaplaceKind::Rank1Iso, &args).unwrap(), LaplaceValue::Scalar(rank1_iso(2, 0.1).unwrap()));
    assert!(matches!(laplace(LaplaceKind::TraceAh, &args), Err(Error::Invalid(_))));
    let with_p = LaplaceArgs { p: Some(id.clone()), a: Some(id.clone()), n_samples: Some(10), ..args };
    for kind in ["rank1_exact", "h-series", "TRACE_AH", "chi_sq", "trace_ahn"] {
        assert!(laplace(kind.parse().unwrap(), &with_p).is_ok(), "{kind}");
    }
    assert!("bogus".parse::<LaplaceKind>().is_err());
}

#[test]
fn rank1_quadratures_agree() {
    for (seed, r) in [(8, 1), (9, 2), (10, 3)] {
        let p = random_spd(seed, r, 0.2);
        let lmax = p.lambda_max().unwrap();
        for t in [-0.4 / lmax, 0.1 / lmax, 0.3 / lmax] {
            let ex = rank1_exact(&p, t).unwrap();
            let gh = rank1_laplace_hermite(&p, t, false, HERMITE_NODES).unwrap();
            let err = (ex.matrix() - gh.matrix()).max_abs();
            assert!(err < 1e-8, "r={r} t={t} err={err}");
        }
        assert!(matches!(rank1_exact(&p, 0.6 / lmax), Err(Error::Hypothesis(_))));
    }
    let big = Sym::identity(MAX_HERMITE_DIM + 1);
    assert!(rank1_laplace_hermite(&big, 0.1, true, 4).is_err());
}

#[test]
fn rank1_exact_against_sampling() {
    let p = random_spd(11, 2, 0.3);
    let t = 0.1 / p.lambda_max().unwrap();
    let want = rank1_exact(&p, t).unwrap();
    let sampler = Sampler::new(&p).unwrap();
    let rng = RngSpec::new(11, 0);
    let draws: Vec<Matrix<f64>> = (0..40_000)
        .map(|k| {
            let x = sampler.gaussian(&mut rng.trial(k));
            let n2: f64 = x.iter().map(|v| v * v).sum();
            &Matrix::identity(2) + &Matrix::outer(&x, &x).scale(((t * n2).exp() - 1.0) / n2)
        })
        .collect();
    assert!(MomentEstimate::from_samples(&draws).unwrap().max_z(want.matrix()) < 4.0);
}

#[test]
fn matrix_laplace_at_identity() {
    let id = Sym::identity(2);
    let reports = matrix_laplace_check(&id, 0.1).unwrap();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        assert!(r.holds(SLACK), "{r:?}");
    }
    for r in matrix_laplace_check(&id, 0.0).unwrap() {
        assert!(r.margin.abs() < 1e-12, "{r:?}");
    }
    assert!(matches!(matrix_laplace_check(&id, 0.25), Err(Error::Hypothesis(_))));
    assert!(matches!(matrix_laplace_check(&id, -0.1), Err(Error::Hypothesis(_))));
}

#[test]
fn legendre_pair() {
    for x in [0.0, 0.3, 1.0, 4.0, 25.0] {
        let star = legendre(LegendreKind::Lstar, x).unwrap();
        // sup over t in [0, 1) of t·x − L(t)
        let sup = (0..200_000).map(|k| k as f64 / 200_000.0).map(|t| t * x - l_fn(t)).fold(f64::NEG_INFINITY, f64::max);
        assert!((sup - star).abs() < 1e-6 * (1.0 + star), "x={x}");
        let inv = legendre(LegendreKind::LstarInv, star).unwrap();
        assert!((inv - x).abs() < 1e-9 * (1.0 + x));
        assert_eq!(legendre(LegendreKind::CramerThreshold, x).unwrap(), legendre(LegendreKind::LstarInv, x).unwrap());
    }
    assert_eq!("lstar-inv".parse::<LegendreKind>().unwrap(), LegendreKind::LstarInv);
}

#[test]
fn moment_norm_bounds() {
    let caps = WickCaps::default();
    for seed in 0..4 {
        let p = random_spd(seed + 20, 3, 0.1);
        for n in 1..=3 {
            assert!(gaussian_moment_check(&p, n, &caps).unwrap().holds(SLACK));
        }
        for (n, big_n) in [(2, 1), (2, 9), (3, 4), (4, 2), (4, 30)] {
            for r in fluctuation_moment_check(&p, n, big_n, &caps).unwrap() {
                assert!(r.holds(SLACK), "n={n} N={big_n}: {r:?}");
            }
        }
    }
    assert!(fluctuation_moment_check(&Sym::identity(2), 0, 3, &caps).is_err());
}

#[test]
fn trace_moment_gaps() {
    for seed in 0..4 {
        let p = random_spd(seed + 30, 3, 0.2);
        let a = random_sym(seed + 30, 3);
        let (alpha, beta) = default_alpha_beta(&a, &p).unwrap();
        for (n, big_n) in [(1, 5), (2, 20), (3, 100)] {
            for r in trace_moment_gap_check(&a, &p, big_n, n, alpha, beta).unwrap() {
                assert!(r.holds(SLACK), "{r:?}");
            }
        }
        assert!(trace_moment_gap_check(&a, &p, 10, 2, alpha, 0.5 * beta).is_err());
    }
}

#[test]
fn rank1_identities() {
    for seed in 0..6 {
        let p = random_spd(seed + 40, 4, 0.1);
        let x = random_ball(seed, 0, 4);
        let y = random_ball(seed, 1, 4);
        for n in 0..7 {
            let reports = rank1_check(&x, &y, &p, n).unwrap();
            assert_eq!(reports.len(), 3);
            assert!(reports.iter().all(|r| r.holds(SLACK)), "{reports:?}");
        }
    }
    assert!(rank1_check(&[1.0], &[1.0, 0.0], &Sym::identity(2), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refuses_outside_the_domain(seed in 0u64..1000, r in 1usize..=4, big_n in 1usize..400, delta in 0.0f64..20.0) {
        let p = random_spd(seed, r, 0.1);
        let args = ThresholdArgs { p: Some(p), n_samples: Some(big_n), delta, ..Default::default() };
        let ok = big_n as f64 / 8.0 >= delta + 7.0 * r as f64;
        match concentration_threshold(ThresholdKind::Opnorm, &args) {
            Ok(v) => prop_assert!(ok && v > 0.0),
            Err(Error::Hypothesis(_)) => prop_assert!(!ok),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn sub_gaussian_bounds_hold(seed in 0u64..1000, r in 1usize..=4, big_n in 1usize..200, u in 0.0f64..1.0, pos in any::<bool>()) {
        let p = random_spd(seed, r, 0.1);
        let a = if pos { psd_a(seed, r) } else { random_sym(seed, r) };
        let fro = a.matmul(&p).frobenius();
        let t = u * (big_n as f64).sqrt() / (4.0 * fro);
        let reports = sub_gaussian_check(&a, &p, big_n, t).unwrap();
        for rep in &reports {
            prop_assert!(rep.holds(SLACK), "{:?}", rep);
        }
        let far = 2.0 * (big_n as f64).sqrt() / fro;
        if a.lambda_min().unwrap() < 0.0 {
            prop_assert!(matches!(sub_gaussian_check(&a, &p, big_n, far), Err(Error::Hypothesis(_))));
        }
    }

    #[test]
    fn centered_shape_below_uncentered(seed in 0u64..1000, r in 1usize..=6) {
        let p = random_spd(seed, r, 0.0);
        let q = p.scale(1.0 / p.trace());
        let gap = shape_uncentered(&q).sub(&shape_centered(&q)).lambda_min().unwrap();
        prop_assert!(gap >= -1e-12);
        prop_assert!(shape_centered_top(&q).unwrap() <= shape_uncentered(&q).lambda_max().unwrap() + 1e-12);
    }

    #[test]
    fn matrix_laplace_holds(seed in 0u64..1000, r in 1usize..=3, u in 0.0f64..0.95) {
        let p = random_spd(seed, r, 0.1);
        let t = u / (2.0 * p.trace());
        for rep in matrix_laplace_check(&p, t).unwrap() {
            prop_assert!(rep.holds(SLACK), "{:?}", rep);
        }
    }
}
