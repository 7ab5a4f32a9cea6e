//! Named check suites; `all` is the acceptance suite.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, ToPrimitive};
use wishart::bounds::{self, BoundReport, ThresholdArgs, ThresholdKind};
use wishart::moments::{
    alpha_coeffs, catalan_rational, hn_moment, inversion, limits, m_nm, m_plus, mp_integral, sc_integral, sigma, sigma_circ, sigma_trace,
    sum_power_moment, AlphaRoute, LimitArgs, LimitKind, LimitValue, Route, SampleCoefficient,
};
use wishart::partitions::{enumerate, integer_partitions};
use wishart::sampling::{empirical_moment, event_frequency, spectral_histogram, RngSpec, Sampler, Spectrum, Target, Variant};
use wishart::specnum::{bell, catalan, catalan_triangle, kreweras, narayana, riordan_nm, stirling1, stirling2};
use wishart::wick::{moment_class, moment_h, moment_partition, MomentClass, WickCaps};
use wishart::{Integer as BigInt, Matrix, PartitionClass, RLaurent, Rational as BigRational, SetPartition, SymMatrix, TracePolynomial};

pub type Check = Result<String, String>;

macro_rules! goldens {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../wishart/tests/golden/", $name, ".json")))),*]
    };
}

/// Checked-in canonical serializations, embedded at build time.
pub const GOLDEN: &[(&str, &str)] = goldens!(
    "crossing_pair_4",
    "fourth_moment_gap",
    "h_2",
    "h_4",
    "m_plus_1",
    "m_plus_2",
    "m_plus_3",
    "semicircle_1",
    "semicircle_2",
    "semicircle_3",
    "semicircle_4",
    "semicircle_5",
    "sigma_1",
    "sigma_2",
    "sigma_3",
    "sigma_4",
    "sigma_5",
    "x_minus_p_2",
    "x_minus_p_3",
    "x_minus_p_4",
);

fn golden(name: &str) -> Option<&'static str> {
    GOLDEN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn canonical_json(t: &TracePolynomial) -> String {
    let mut s = serde_json::to_string_pretty(t).expect("serializable");
    s.push('\n');
    s
}

/// `B B'/r + floor·I` with standard normal `B`.
pub fn random_spd(seed: u64, r: usize, floor: f64) -> SymMatrix<f64> {
    let mut g = RngSpec::new(seed, 17).trial(0);
    let b: Vec<f64> = (0..r * r).map(|_| g.normal()).collect();
    let m =
        Matrix::from_fn(r, |i, j| (0..r).map(|k| b[i * r + k] * b[j * r + k]).sum::<f64>() / r as f64 + if i == j { floor } else { 0.0 });
    SymMatrix::from_symmetrized(&m)
}

pub fn random_sym(seed: u64, r: usize) -> SymMatrix<f64> {
    let mut g = RngSpec::new(seed, 23).trial(0);
    let b: Vec<f64> = (0..r * r).map(|_| g.normal()).collect();
    SymMatrix::from_symmetrized(&Matrix::from_fn(r, |i, j| 0.5 * (b[i * r + j] + b[j * r + i])))
}

/// Point in the unit ball with uniform direction and uniform radius.
pub fn random_ball(seed: u64, stream: u64, r: usize) -> Vec<f64> {
    let mut g = RngSpec::new(seed, 31 + stream).trial(0);
    let v: Vec<f64> = (0..r).map(|_| g.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rad = g.uniform();
    v.iter().map(|x| x / norm * rad).collect()
}

fn uniform(seed: u64, stream: u64) -> f64 {
    RngSpec::new(seed, 97 + stream).trial(0).uniform()
}

fn ratf(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

// 1 ---------------------------------------------------------------------------

pub fn golden_values() -> Result<Vec<(String, TracePolynomial)>, String> {
    let caps = WickCaps::default();
    let mut out: Vec<(String, TracePolynomial)> = vec![
        ("h_2".into(), moment_h(2, &caps).map_err(err)?),
        ("h_4".into(), moment_h(4, &caps).map_err(err)?),
        (
            "crossing_pair_4".into(),
            moment_partition(&SetPartition::new(vec![vec![1, 3], vec![2, 4]]).map_err(err)?, true, &caps).map_err(err)?,
        ),
        ("fourth_moment_gap".into(), hn_moment(4, SampleCoefficient::Falling, &caps).map_err(err)?.coeff(-2)),
    ];
    for n in 2..=4 {
        out.push((format!("x_minus_p_{n}"), sum_power_moment(n, 1, &caps).map_err(err)?));
    }
    for n in 1..=3 {
        out.push((format!("m_plus_{n}"), m_plus(n).map_err(err)?));
    }
    for n in 1..=5 {
        out.push((format!("sigma_{n}"), sigma(n, Route::Recursion).map_err(err)?));
        out.push((format!("semicircle_{n}"), sigma_trace(n).map_err(err)?));
    }
    Ok(out)
}

pub fn criterion_1() -> Check {
    let values = golden_values()?;
    for (name, value) in &values {
        let start = Instant::now();
        let want = golden(name).ok_or_else(|| format!("no golden file for {name}"))?;
        let got = canonical_json(value);
        ensure(got == want, || format!("{name} differs from golden: got {value}"))?;
        ensure(start.elapsed() < Duration::from_secs(1), || format!("{name} slow"))?;
    }
    Ok(format!("{} golden files byte-identical", values.len()))
}

// 2 ---------------------------------------------------------------------------

pub fn criterion_2() -> Check {
    let start = Instant::now();
    let caps = WickCaps::default();
    let caps6 = WickCaps { centered: 6, ..caps };
    for n in 1..=7 {
        ensure(sigma(n, Route::Recursion).map_err(err)? == sigma(n, Route::ClosedForm).map_err(err)?, || format!("sigma {n}"))?;
        for m in 1..=n {
            let a = sigma_circ(n, m, Route::Recursion).map_err(err)?;
            let b = sigma_circ(n, m, Route::ClosedForm).map_err(err)?;
            ensure(a == b, || format!("sigma_circ {n},{m}"))?;
        }
    }
    for n in 1..=3 {
        let wick = moment_class(2 * n, n, MomentClass::QPlus, true, &caps6).map_err(err)?;
        ensure(m_plus(n).map_err(err)? == wick, || format!("m_plus {n}"))?;
        let by_class = m_nm(2 * n, n, true, &caps6).map_err(err)?;
        let by_h = moment_h(2 * n, &caps6).map_err(err)?;
        ensure(by_class == by_h, || format!("M_2n,n vs E(H^2n) at n = {n}"))?;
    }
    for n in 1..=4 {
        for m in 1..=n {
            ensure(inversion(n, m, &caps).map_err(err)? == m_nm(n, m, true, &caps).map_err(err)?, || format!("inversion {n},{m}"))?;
        }
    }
    let u: Vec<BigRational> = (0..9).map(|i| BigRational::new(BigInt::from(2 * i + 3), BigInt::from(i + 2))).collect();
    let base = alpha_coeffs(8, &u, AlphaRoute::PartitionSum).map_err(err)?;
    for route in [AlphaRoute::Convolution, AlphaRoute::Bell, AlphaRoute::Sigma] {
        ensure(alpha_coeffs(8, &u, route).map_err(err)? == base, || format!("alpha route {route:?}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("all routes agree in {:.1}s", elapsed.as_secs_f64()))
}

// 3 ---------------------------------------------------------------------------

fn permutations_by_cycles(n: usize) -> Vec<u64> {
    fn rec(perm: &mut Vec<usize>, k: usize, counts: &mut Vec<u64>) {
        if k == perm.len() {
            let mut seen = vec![false; perm.len()];
            let mut cycles = 0;
            for s in 0..perm.len() {
                if !seen[s] {
                    cycles += 1;
                    let mut i = s;
                    while !seen[i] {
                        seen[i] = true;
                        i = perm[i];
                    }
                }
            }
            counts[cycles] += 1;
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(perm, k + 1, counts);
            perm.swap(k, i);
        }
    }
    let mut counts = vec![0; n + 1];
    rec(&mut (0..n).collect(), 0, &mut counts);
    counts
}

pub fn criterion_3() -> Check {
    let mut checked = 0;
    for n in 1..=9usize {
        let all: Vec<SetPartition> = enumerate(n, None, PartitionClass::All).map_err(err)?.collect();
        ensure(BigInt::from(all.len()) == bell(n), || format!("bell {n}"))?;
        let nc: Vec<&SetPartition> = all.iter().filter(|p| !p.is_crossing()).collect();
        ensure(BigInt::from(nc.len()) == catalan(n), || format!("catalan {n}"))?;
        let nc_stream = enumerate(n, None, PartitionClass::Nc).map_err(err)?.count();
        ensure(nc_stream == nc.len(), || format!("nc stream {n}"))?;
        let cycles = permutations_by_cycles(n);
        for m in 1..=n {
            let with_m = all.iter().filter(|p| p.len() == m).count();
            ensure(BigInt::from(with_m) == stirling2(n, m), || format!("stirling2 {n},{m}"))?;
            ensure(BigInt::from(cycles[m]) == stirling1(n, m).abs(), || format!("stirling1 {n},{m}"))?;
            let nar = nc.iter().filter(|p| p.len() == m).count();
            ensure(BigInt::from(nar) == narayana(n, m), || format!("narayana {n},{m}"))?;
            let rio = nc.iter().filter(|p| p.len() == m && !p.has_singleton()).count();
            ensure(BigInt::from(rio) == riordan_nm(n, m), || format!("riordan {n},{m}"))?;
            let outer = nc.iter().filter(|p| p.iota().ok() == Some(m)).count();
            ensure(BigInt::from(outer) == catalan_triangle(n, m), || format!("catalan triangle {n},{m}"))?;
            checked += 6;
        }
        let mut by_type: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for p in &nc {
            *by_type.entry(p.partition_type().mu).or_default() += 1;
        }
        for t in integer_partitions(n) {
            let got = by_type.get(&t.mu).copied().unwrap_or(0);
            ensure(BigInt::from(got) == kreweras(&t), || format!("kreweras {:?}", t.mu))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} cardinalities match closed forms for n ≤ 9"))
}

// 4 ---------------------------------------------------------------------------

fn one_plus_r_pow(n: usize) -> RLaurent {
    let mut acc = RLaurent::constant(BigRational::one());
    let base = RLaurent::constant(BigRational::one()) + RLaurent::r();
    for _ in 0..n {
        acc = acc * base.clone();
    }
    acc
}

pub fn criterion_4() -> Check {
    let caps = WickCaps::default();
    for n in 1..=6 {
        let got = m_plus(n).map_err(err)?.eval_isotropic();
        let want = one_plus_r_pow(n).scale(&catalan_rational(n));
        ensure(got == want, || format!("M+ at n = {n}: {got}"))?;
        let tr = sigma(n, Route::Recursion).map_err(err)?.trace().eval_isotropic();
        ensure(tr == RLaurent::monomial(n as i32 + 1, catalan_rational(n)), || format!("Tr sigma {n}: {tr}"))?;
        for m in 1..=n {
            let tr = sigma_circ(n, m, Route::Recursion).map_err(err)?.trace().eval_isotropic();
            let want = RLaurent::monomial((n - m + 1) as i32, BigRational::from_integer(narayana(n, m)));
            ensure(tr == want, || format!("Tr sigma_circ {n},{m}: {tr}"))?;
        }
    }
    let h2 = moment_h(2, &caps).map_err(err)?.trace().eval_isotropic().shift(-2);
    let mut want2 = RLaurent::constant(rat(1));
    want2.add_term(-1, rat(1));
    ensure(h2 == want2, || format!("second moment law: {h2}"))?;
    let h4 = moment_h(4, &caps).map_err(err)?.trace().eval_isotropic().shift(-3);
    let mut want4 = RLaurent::constant(rat(2));
    want4.add_term(-1, rat(5));
    want4.add_term(-2, rat(5));
    ensure(h4 == want4, || format!("fourth moment law: {h4}"))?;
    Ok("isotropic identities exact in r".into())
}

// 5 ---------------------------------------------------------------------------

pub fn criterion_5() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (num, den) in [(1, 2), (1, 1), (2, 1)] {
        let rho = BigRational::new(BigInt::from(num), BigInt::from(den));
        let rho_f = num as f64 / den as f64;
        for n in 1..=6 {
            let args = LimitArgs { n, rho: rho.clone(), tau: vec![BigRational::one(); n] };
            let LimitValue::Exact(comb) = limits(LimitKind::MpMoment, &args).map_err(err)? else {
                return Err("expected exact value".into());
            };
            let (quad, _) = mp_integral(n, rho_f);
            let diff = (ratf(&comb) - quad).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-6, || format!("MP moment n = {n}, rho = {rho}: {diff:e}"))?;
            if num == den {
                ensure(comb == catalan_rational(n), || format!("rho = 1 moment {n} is not Catalan"))?;
            }
        }
    }
    for n in 0..=12 {
        let (v, _) = sc_integral(n);
        let want = if n % 2 == 0 { ratf(&catalan_rational(n / 2)) } else { 0.0 };
        ensure((v - want).abs() <= 1e-8, || format!("semicircle moment {n}: {v}"))?;
    }
    let p = SymMatrix::identity(200);
    let mut sup = [0.0f64; 2];
    for (k, spectrum) in [Spectrum::Covariance, Spectrum::Fluctuation].into_iter().enumerate() {
        let h = spectral_histogram(&p, 200, 40, 21, spectrum, &RngSpec::new(2024, k as u64)).map_err(err)?;
        let (lo, hi) = if k == 0 { (0.0, 4.0) } else { (-2.0, 2.0) };
        for row in &h.rows {
            if row.bin_lo < lo + 0.3 || row.bin_hi > hi - 0.3 {
                continue;
            }
            let want = if k == 0 { row.mp_density } else { row.sc_density };
            sup[k] = sup[k].max((row.empirical - want).abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(sup[0] <= 0.05 && sup[1] <= 0.05, || format!("histogram sup-error MP {:.4}, SC {:.4}", sup[0], sup[1]))?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("quadrature gap {worst:.1e}; histogram sup-error MP {:.4}, SC {:.4}; {:.1}s", sup[0], sup[1], elapsed.as_secs_f64()))
}

// 6 ---------------------------------------------------------------------------

pub fn criterion_6() -> Check {
    let start = Instant::now();
    let caps = WickCaps::default();
    let p = random_spd(6, 3, 0.2);
    let trials = 10_000;
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let want =
            wishart::moments::pn_moment(n, false, SampleCoefficient::Falling, &caps).map_err(err)?.eval_numeric(&p, 50.0).map_err(err)?;
        let est = empirical_moment(&p, 50, n, Target::PnPower, trials, &RngSpec::new(66, n as u64)).map_err(err)?;
        let z = est.max_z(want.matrix());
        worst = worst.max(z);
        ensure(z < 4.0, || format!("E(P_N^{n}) off by {z:.2} standard errors"))?;
    }
    for n in 1..=2 {
        let want = moment_h(2 * n, &caps).map_err(err)?.eval_numeric(&p).map_err(err)?;
        let est = empirical_moment(&p, 1, 2 * n, Target::HPower, trials, &RngSpec::new(67, n as u64)).map_err(err)?;
        let z = est.max_z(want.matrix());
        worst = worst.max(z);
        ensure(z < 4.0, || format!("E(H^{}) off by {z:.2} standard errors", 2 * n))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("max |z| = {worst:.2} over {trials} trials; {:.1}s", elapsed.as_secs_f64()))
}

// 7 ---------------------------------------------------------------------------

fn tally(reports: &[BoundReport], counts: &mut BTreeMap<String, (usize, usize)>, slack: f64) {
    for r in reports {
        let e = counts.entry(r.name.clone()).or_default();
        e.0 += 1;
        if !r.holds(slack) {
            e.1 += 1;
        }
    }
}

pub fn criterion_7() -> Check {
    let caps = WickCaps::default();
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for i in 0..100u64 {
        let r = 2 + (i % 3) as usize;
        let p = random_spd(1000 + i, r, 0.05);
        let n = 1 + (i % 5) as usize;
        let big_n = 1 + (uniform(i, 1) * 60.0) as usize;
        tally(&bounds::fluctuation_moment_check(&p, n, big_n, &caps).map_err(err)?, &mut counts, 1e-9);
        let k = 1 + (i % 4) as usize;
        tally(&[bounds::gaussian_moment_check(&p, k, &caps).map_err(err)?], &mut counts, 1e-9);

        let pr = random_spd(2000 + i, 2 + (i % 2) as usize, 0.05);
        let t = uniform(i, 2) * 0.98 / (2.0 * pr.trace());
        tally(&bounds::matrix_laplace_check(&pr, t).map_err(err)?, &mut counts, bounds::SLACK);

        let a = if i % 2 == 0 { random_sym(3000 + i, 3) } else { random_spd(3000 + i, 3, 0.0) };
        let p3 = random_spd(4000 + i, 3, 0.05);
        let big_n = 1 + (uniform(i, 3) * 400.0) as usize;
        let fro = a.matmul(&p3).frobenius();
        let tr_ap = a.matmul(&p3).trace().abs();
        let limit = if i % 2 == 0 { (big_n as f64).sqrt() / (4.0 * fro) } else { (big_n as f64).sqrt() / (4.0 * fro.max(tr_ap)) };
        let t = (2.0 * uniform(i, 4) - 1.0) * 0.999 * limit;
        tally(&bounds::sub_gaussian_check(&a, &p3, big_n, t).map_err(err)?, &mut counts, 1e-9);

        let nn = 1 + (i % 4) as usize;
        let (alpha, beta) = bounds::default_alpha_beta(&a, &p3).map_err(err)?;
        tally(&bounds::trace_moment_gap_check(&a, &p3, big_n, nn, alpha, beta).map_err(err)?, &mut counts, 1e-12);
        if i % 2 == 1 {
            let (even, odd) = bounds::trace_moment_differences(&a, &p3, big_n, 1 + (i % 4) as usize / 2).map_err(err)?;
            let e = counts.entry("trace moment signs".into()).or_default();
            e.0 += 1;
            if even < -1e-12 || odd < -1e-12 {
                e.1 += 1;
            }
        }

        let p4 = random_spd(5000 + i, 4, 0.05);
        let (x, y) = (random_ball(6000 + i, 0, 4), random_ball(6000 + i, 1, 4));
        tally(&bounds::rank1_check(&x, &y, &p4, 1 + (i % 8) as usize).map_err(err)?, &mut counts, 0.0);
    }
    let bad: Vec<String> = counts.iter().filter(|(_, (_, v))| *v > 0).map(|(k, (n, v))| format!("{k}: {v}/{n}")).collect();
    ensure(bad.is_empty(), || format!("violations: {}", bad.join(", ")))?;
    let total: usize = counts.values().map(|(n, _)| n).sum();
    let names: Vec<&str> = counts.keys().map(String::as_str).collect();
    Ok(format!("{total} checks, zero violations ({})", names.join(", ")))
}

// 8 ---------------------------------------------------------------------------

pub fn criterion_8() -> Check {
    let start = Instant::now();
    let r = 3;
    let big_n = 400usize;
    let trials = 10_000;
    let p = random_spd(8, r, 0.2);
    let a_sym = random_sym(81, r);
    let a_psd = random_spd(82, r, 0.0);
    let sampler = Sampler::new(&p).map_err(err)?;
    let lam_p = p.eigenvalues().map_err(err)?;
    let tr = |a: &SymMatrix<f64>, h: &SymMatrix<f64>| a.matmul(h).trace();
    let mut worst = f64::INFINITY;
    let mut events = 0;
    for (d, delta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let args = |a: Option<&SymMatrix<f64>>| ThresholdArgs { a: a.cloned(), p: Some(p.clone()), n_samples: Some(big_n), delta, z: None };
        let th = |kind, a: Option<&SymMatrix<f64>>| bounds::concentration_threshold(kind, &args(a)).map_err(err);
        let two = th(ThresholdKind::TraceTwoSided, Some(&a_sym))?;
        let pos = th(ThresholdKind::TracePos, Some(&a_psd))?;
        let neg = th(ThresholdKind::TraceNeg, Some(&a_psd))?;
        let gauss = th(ThresholdKind::TraceGaussian, Some(&a_sym))?;
        let op = th(ThresholdKind::Opnorm, None)?;
        let sup = th(ThresholdKind::EigenSup, None)?;
        let l1 = th(ThresholdKind::Lambda1, None)?;
        let l1h = th(ThresholdKind::Lambda1Fluctuation, None)?;
        let hn = |g: &mut wishart::sampling::Normals| sampler.fluctuation(big_n, Variant::Plain, g).expect("sample");
        let stream = |k: u64| RngSpec::new(800 + d as u64, k);
        let freqs = vec![
            ("two-sided trace", event_frequency(|g| tr(&a_sym, &hn(g)).abs() <= two, trials, &stream(0))),
            ("upper trace", event_frequency(|g| tr(&a_psd, &hn(g)) <= pos, trials, &stream(1))),
            ("lower trace", event_frequency(|g| tr(&a_psd, &hn(g)) >= -neg, trials, &stream(2))),
            ("gaussian trace", event_frequency(|g| tr(&a_sym, &sampler.gaussian_limit(g)) <= gauss, trials, &stream(3))),
            ("operator norm", event_frequency(|g| hn(g).op_norm().expect("eigen") <= op, trials, &stream(4))),
            (
                "eigenvalue sup",
                event_frequency(
                    |g| {
                        let pn = sampler.wishart(big_n, Variant::Plain, g).expect("sample");
                        let l = pn.eigenvalues().expect("eigen");
                        l.iter().zip(&lam_p).all(|(a, b)| (a - b).abs() <= sup)
                    },
                    trials,
                    &stream(5),
                ),
            ),
            (
                "top eigenvalue",
                event_frequency(
                    |g| sampler.wishart(big_n, Variant::Plain, g).expect("sample").lambda_max().expect("eigen") <= l1,
                    trials,
                    &stream(6),
                ),
            ),
            ("top fluctuation eigenvalue", event_frequency(|g| hn(g).lambda_max().expect("eigen") <= l1h, trials, &stream(7))),
        ];
        let target = 1.0 - (-delta).exp();
        for (name, f) in freqs {
            let f = f.map_err(err)?;
            let slack = f.frequency + f.half_width() - target;
            worst = worst.min(slack);
            events += 1;
            ensure(slack >= 0.0, || format!("{name} at δ = {delta}: frequency {:.4} below {target:.4}", f.frequency))?;
        }
    }
    Ok(format!("{events} events covered, smallest excess {worst:.4}; {:.1}s", start.elapsed().as_secs_f64()))
}

pub type Criterion = (&'static str, fn() -> Check);

/// The acceptance criteria in order.
pub const CRITERIA: [Criterion; 8] = [
    ("golden polynomials", criterion_1),
    ("route equivalence", criterion_2),
    ("counting", criterion_3),
    ("isotropic laws", criterion_4),
    ("limit laws", criterion_5),
    ("monte carlo vs symbolic", criterion_6),
    ("bounds as inequalities", criterion_7),
    ("coverage", criterion_8),
];

/// Runs a check, turning a panic into a failure.
pub fn guarded(f: impl FnOnce() -> Check + std::panic::UnwindSafe) -> Check {
    std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()))
}

// named sub-suites ------------------------------------------------------------

pub fn sigma_routes(n_max: usize) -> Check {
    for n in 1..=n_max {
        let a = sigma(n, Route::Recursion).map_err(err)?;
        ensure(a == sigma(n, Route::ClosedForm).map_err(err)?, || format!("sigma {n}: closed form differs"))?;
    }
    Ok(format!("recursion and closed form agree for n ≤ {n_max}"))
}

pub fn sigma_circ_routes(n_max: usize) -> Check {
    for n in 1..=n_max {
        for m in 1..=n {
            let a = sigma_circ(n, m, Route::Recursion).map_err(err)?;
            ensure(a == sigma_circ(n, m, Route::ClosedForm).map_err(err)?, || format!("sigma_circ {n},{m}"))?;
        }
    }
    Ok(format!("recursion and closed form agree for n ≤ {n_max}"))
}

pub fn mplus_routes(n_max: usize) -> Check {
    let caps = WickCaps { centered: 2 * n_max, ..WickCaps::default() };
    let product = wishart::moments::m_plus_table(n_max, wishart::moments::MPlusForm::Product).map_err(err)?;
    let gamma = wishart::moments::m_plus_table(n_max, wishart::moments::MPlusForm::Gamma).map_err(err)?;
    ensure(product == gamma, || "recursion forms differ".into())?;
    for n in 1..=n_max {
        let wick = moment_class(2 * n, n, MomentClass::QPlus, true, &caps).map_err(err)?;
        ensure(product[n] == wick, || format!("M+ {n}: wick differs"))?;
    }
    Ok(format!("two recursions and the wick class sum agree for n ≤ {n_max}"))
}

pub fn alpha_routes(n_max: usize) -> Check {
    let u: Vec<BigRational> = (0..=n_max).map(|i| BigRational::new(BigInt::from(2 * i + 3), BigInt::from(i + 2))).collect();
    let base = alpha_coeffs(n_max, &u, AlphaRoute::PartitionSum).map_err(err)?;
    for route in [AlphaRoute::Convolution, AlphaRoute::Bell, AlphaRoute::Sigma] {
        ensure(alpha_coeffs(n_max, &u, route).map_err(err)? == base, || format!("alpha route {route:?}"))?;
    }
    Ok(format!("four routes agree for n ≤ {n_max}"))
}

pub fn nc_routes(n_max: usize) -> Check {
    use wishart::partitions::{as_set, enumerate_with, NcRoute};
    for n in 0..=n_max {
        for m in std::iter::once(None).chain((0..=n).map(Some)) {
            let a = as_set(enumerate_with(n, m, PartitionClass::Nc, NcRoute::Recursion).map_err(err)?);
            let b = as_set(enumerate_with(n, m, PartitionClass::Nc, NcRoute::Filter).map_err(err)?);
            ensure(a == b, || format!("n = {n}, m = {m:?}"))?;
        }
    }
    Ok(format!("recursion equals filtered enumeration for n ≤ {n_max}"))
}

pub fn kreweras_suite(n_max: usize) -> Check {
    let mut checked = 0;
    for n in 1..=n_max {
        for p in enumerate(n, None, PartitionClass::Nc).map_err(err)? {
            let k = p.kreweras().map_err(err)?;
            ensure(k.len() == n + 1 - p.len(), || format!("{p}: block count"))?;
            ensure(!k.is_crossing(), || format!("{p}: complement crosses"))?;
            if n <= 8 {
                ensure(k == wishart::partitions::kreweras_brute_force(&p).map_err(err)?, || format!("{p}: brute force differs"))?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} complements checked for n ≤ {n_max}"))
}

pub fn wick_engines(n_max: usize) -> Check {
    let caps = WickCaps { centered: 2 * n_max, ..WickCaps::default() };
    for n in 1..=n_max {
        ensure(m_nm(2 * n, n, true, &caps).map_err(err)? == moment_h(2 * n, &caps).map_err(err)?, || format!("n = {n}"))?;
    }
    Ok(format!("class sum equals the Gaussian-limit moment for n ≤ {n_max}"))
}
