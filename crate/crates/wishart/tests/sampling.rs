mod common;

use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use common::{random_spd, random_sym};
use wishart::sampling::*;
use wishart::{Matrix, SymMatrix};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn eigen_examples() {
    assert_eq!(eigen(&SymMatrix::diag(&[3.0, 1.0, 2.0])).unwrap(), vec![3.0, 2.0, 1.0]);
    let x = [0.6f64, 0.0, 0.8];
    let e = eigen(&SymMatrix::from_symmetrized(&Matrix::outer(&x, &x))).unwrap();
    assert!((e[0] - 1.0).abs() < 1e-12 && e[1..].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn identical_specs_give_identical_draws() {
    let p = random_spd(1, 3, 0.2);
    let rng = RngSpec::new(99, 4);
    let a = sample_wishart(&p, 12, Variant::Plain, &rng).unwrap();
    let b = sample_wishart(&p, 12, Variant::Plain, &rng).unwrap();
    assert_eq!(a, b);
    let c = sample_wishart(&p, 12, Variant::Plain, &RngSpec::new(99, 5)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let p = random_spd(2, 3, 0.2);
    let rng = RngSpec::new(11, 0);
    let run = |threads: usize| pool(threads).install(|| empirical_moment(&p, 7, 2, Target::HnPower, 500, &rng).unwrap());
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    let freq = |threads: usize| pool(threads).install(|| event_frequency(|g| g.normal() > 0.3, 5000, &rng).unwrap());
    assert_eq!(freq(1), freq(4));
}

#[test]
fn pairwise_sum_is_a_sum() {
    let xs: Vec<Matrix<f64>> = (0..37).map(|k| Matrix::scalar(2, k as f64)).collect();
    assert_eq!(pairwise_sum(&xs, 2), Matrix::scalar(2, 666.0));
    assert_eq!(pairwise_sum::<f64>(&[], 2), Matrix::zeros(2));
}

#[test]
fn eigenvalue_perturbation_inequalities() {
    let p = random_spd(3, 4, 0.1);
    let lp = eigen(&p).unwrap();
    let sampler = Sampler::new(&p).unwrap();
    let rng = RngSpec::new(12, 0);
    for t in 0..200 {
        let pn = sampler.wishart(10, Variant::Plain, &mut rng.trial(t)).unwrap();
        let ln = eigen(&pn).unwrap();
        let diff = pn.sub(&p);
        let op = diff.op_norm().unwrap();
        let fro = diff.frobenius();
        let sup = lp.iter().zip(&ln).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let l2: f64 = lp.iter().zip(&ln).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(sup <= op + 1e-12, "Weyl, trial {t}");
        assert!(l2 <= fro * fro + 1e-12, "Wielandt–Hoffman, trial {t}");
    }
}

#[test]
fn weyl_event_is_certain() {
    let p = random_spd(4, 3, 0.2);
    let sampler = Sampler::new(&p).unwrap();
    let lp = eigen(&p).unwrap();
    let f = event_frequency(
        |g| {
            let h = sampler.fluctuation(20, Variant::Plain, g).unwrap();
            let sum = eigen(&p.add(&h)).unwrap();
            let sup = sum.iter().zip(&lp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            sup <= h.op_norm().unwrap() + 1e-12
        },
        2000,
        &RngSpec::new(13, 0),
    )
    .unwrap();
    assert_eq!(f.frequency, 1.0);
}

#[test]
fn trace_clt_passes_ks() {
    let r = 3;
    let p = random_spd(5, r, 0.2);
    let b = random_sym(6, r);
    let sampler = Sampler::new(&p).unwrap();
    let pb = p.matrix().matmul(b.matrix());
    let tr_pb = pb.trace();
    let scale = (2.0 * pb.matmul(&pb).trace()).sqrt();
    let big_n = 10_000;
    let rng = RngSpec::new(14, 0);
    let stats: Vec<f64> = {
        use rayon::prelude::*;
        (0..1000u64)
            .into_par_iter()
            .map(|t| {
                let mut g = rng.trial(t);
                let s: f64 = (0..big_n)
                    .map(|_| {
                        let x = sampler.gaussian(&mut g);
                        wishart::linalg::dot(&x, &b.matvec(&x)) - tr_pb
                    })
                    .sum();
                s / (big_n as f64).sqrt() / scale
            })
            .collect()
    };
    let mut sorted = stats;
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = normal.cdf(x);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    // Asymptotic 1% critical value.
    assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn rank_deficient_atom() {
    let p = SymMatrix::<f64>::identity(40);
    let h = spectral_histogram(&p, 20, 10, 20, Spectrum::Covariance, &RngSpec::new(15, 0)).unwrap();
    assert!((h.rho - 2.0).abs() < 1e-12);
    assert!((h.near_zero - 0.5).abs() < 0.02, "atom fraction {}", h.near_zero);
    assert_eq!(h.count, 400);
}

#[test]
fn histogram_shape_and_csv() {
    let p = SymMatrix::<f64>::identity(30);
    let h = spectral_histogram(&p, 30, 5, 12, Spectrum::Fluctuation, &RngSpec::new(16, 0)).unwrap();
    assert_eq!(h.rows.len(), 12);
    let mass: f64 = h.rows.iter().map(|r| r.empirical * (r.bin_hi - r.bin_lo)).sum();
    assert!(mass > 0.95 && mass <= 1.0 + 1e-12);
    let sc_mass: f64 = h.rows.iter().map(|r| r.sc_density * (r.bin_hi - r.bin_lo)).sum();
    assert!((sc_mass - 1.0).abs() < 1e-6);
    let csv = h.to_csv();
    assert!(csv.starts_with("bin_lo,bin_hi,empirical,mp_density,sc_density\n"));
    assert_eq!(csv.lines().count(), 13);
    assert!(spectral_histogram(&p, 30, 5, 9, Spectrum::Fluctuation, &RngSpec::new(16, 0)).is_err());
}

#[test]
fn argument_checks() {
    let p = SymMatrix::<f64>::identity(2);
    assert!(empirical_moment(&p, 5, 1, Target::PnPower, 99, &RngSpec::new(0, 0)).is_err());
    assert!(event_frequency(|_| true, 999, &RngSpec::new(0, 0)).is_err());
    assert!(sample_wishart(&p, 0, Variant::Plain, &RngSpec::new(0, 0)).is_err());
    let bad = SymMatrix::diag(&[1.0, -1.0]);
    assert!(sample_wishart(&bad, 3, Variant::Plain, &RngSpec::new(0, 0)).is_err());
    assert!(MomentEstimate::<f64>::from_samples(&[Matrix::identity(2)]).is_err());
    assert_eq!("hn_power".parse::<Target>().unwrap(), Target::HnPower);
}

#[test]
fn gaussian_limit_second_moment() {
    let p = random_spd(17, 3, 0.2);
    let est = empirical_moment(&p, 1, 2, Target::HPower, 20_000, &RngSpec::new(17, 0)).unwrap();
    let want = &p.matrix().pow(2) + &p.matrix().scale(p.trace());
    assert!(est.max_z(&want) < 4.0);
}

#[test]
fn single_precision_sampler() {
    let p = random_spd(18, 2, 0.3).cast::<f32>();
    let est = empirical_moment(&p, 10, 1, Target::PnPower, 5000, &RngSpec::new(18, 0)).unwrap();
    assert!(est.max_z(p.matrix()) < 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenvalues_keep_the_trace(seed in 0u64..10_000, r in 1usize..=8) {
        let a = random_sym(seed, r);
        let e = eigen(&a).unwrap();
        prop_assert!((e.iter().sum::<f64>() - a.trace()).abs() < 1e-10 * (1.0 + a.frobenius()));
        prop_assert!(e.windows(2).all(|w| w[0] >= w[1]));
        let sq: f64 = e.iter().map(|x| x * x).sum();
        prop_assert!((sq - a.frobenius().powi(2)).abs() < 1e-9 * (1.0 + sq));
    }

    #[test]
    fn mean_adjusted_is_unbiased(seed in 0u64..1000) {
        let p = random_spd(seed, 3, 0.3);
        let sampler = Sampler::new(&p).unwrap();
        let rng = RngSpec::new(seed, 3);
        let draws: Vec<Matrix<f64>> = (0..4000)
            .map(|t| sampler.wishart(4, Variant::MeanAdjusted, &mut rng.trial(t)).unwrap().into_matrix())
            .collect();
        let est = MomentEstimate::from_samples(&draws).unwrap();
        prop_assert!(est.max_z(p.matrix()) < 4.5);
    }
}
