//! Reproducible Monte Carlo: Wishart draws, empirical moments, spectra and event frequencies.
//!
//! Every trial owns an xoshiro256** stream seeded from `(seed, stream, trial)` through
//! SplitMix64, so results do not depend on the number of worker threads.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::moments::{mp_density, mp_support, sc_density};
use crate::quad;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    /// Independent generator for one trial.
    pub fn trial(&self, index: u64) -> Normals {
        let key = splitmix(self.seed ^ splitmix(self.stream.wrapping_add(splitmix(index))));
        Normals { rng: Xoshiro256StarStar::seed_from_u64(key), spare: None }
    }
}

/// Standard normal draws by paired Box–Muller.
#[derive(Clone, Debug)]
pub struct Normals {
    rng: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl Normals {
    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (u, v) = (self.uniform(), self.uniform());
        let rad = (-2.0 * u.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * v).sin_cos();
        self.spare = Some(rad * s);
        rad * c
    }

    pub fn vector<T: Real>(&mut self, dim: usize) -> Vec<T> {
        (0..dim).map(|_| T::of(self.normal())).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    /// `N⁻¹ Σ X_i X_i'` over `N` draws.
    Plain,
    /// Sample covariance around the sample mean of `N + 1` draws, divided by `N`.
    MeanAdjusted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Target {
    /// `P_N^n`
    PnPower,
    /// `(P_N − P)^n`
    CenteredPower,
    /// `ℋ_N^n`
    HnPower,
    /// `ℋ^n` for the Gaussian limit
    HPower,
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "PN_POWER" => Self::PnPower,
            "CENTERED_POWER" => Self::CenteredPower,
            "HN_POWER" => Self::HnPower,
            "H_POWER" => Self::HPower,
            _ => return Err(Error::Invalid(format!("unknown target {s}"))),
        })
    }
}

/// Gaussian sampler for a fixed covariance.
#[derive(Clone, Debug)]
pub struct Sampler<T> {
    p: SymMatrix<T>,
    chol: Matrix<T>,
    root: SymMatrix<T>,
}

impl<T: Real> Sampler<T> {
    pub fn new(p: &SymMatrix<T>) -> Result<Self> {
        let chol = p.cholesky()?;
        let root = p.sqrt_psd()?;
        Ok(Sampler { p: p.clone(), chol, root })
    }

    pub fn covariance(&self) -> &SymMatrix<T> {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// One draw of `X ~ N(0, P)`.
    pub fn gaussian(&self, g: &mut Normals) -> Vec<T> {
        self.chol.matvec(&g.vector(self.dim()))
    }

    /// One draw of `P_N`.
    pub fn wishart(&self, n: usize, variant: Variant, g: &mut Normals) -> Result<SymMatrix<T>> {
        if n == 0 {
            return Err(Error::Invalid("N must be at least 1".into()));
        }
        let r = self.dim();
        let draws: Vec<Vec<T>> = match variant {
            Variant::Plain => (0..n).map(|_| self.gaussian(g)).collect(),
            Variant::MeanAdjusted => {
                let xs: Vec<Vec<T>> = (0..=n).map(|_| self.gaussian(g)).collect();
                let inv = T::one() / T::of((n + 1) as f64);
                let mean: Vec<T> = (0..r).map(|i| xs.iter().map(|x| x[i]).sum::<T>() * inv).collect();
                xs.into_iter().map(|x| x.iter().zip(&mean).map(|(a, b)| *a - *b).collect()).collect()
            }
        };
        let mut acc: Matrix<T> = Matrix::zeros(r);
        for x in &draws {
            for i in 0..r {
                for j in i..r {
                    acc[(i, j)] += x[i] * x[j];
                }
            }
        }
        let scale = T::one() / T::of(n as f64);
        Ok(SymMatrix::from_symmetrized(&Matrix::from_fn(r, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            acc[(a, b)] * scale
        })))
    }

    /// `ℋ_N = √N (P_N − P)`.
    pub fn fluctuation(&self, n: usize, variant: Variant, g: &mut Normals) -> Result<SymMatrix<T>> {
        let pn = self.wishart(n, variant, g)?;
        Ok(pn.sub(&self.p).scale(T::of(n as f64).sqrt()))
    }

    /// The Gaussian limit `ℋ = P^{1/2} (W + W')/√2 P^{1/2}`.
    pub fn gaussian_limit(&self, g: &mut Normals) -> SymMatrix<T> {
        let r = self.dim();
        let w: Vec<T> = g.vector(r * r);
        let s = T::of(std::f64::consts::FRAC_1_SQRT_2);
        let goe = Matrix::from_fn(r, |i, j| (w[i * r + j] + w[j * r + i]) * s);
        SymMatrix::from_symmetrized(&self.root.sandwich(&goe))
    }
}

/// One draw of `P_N` from `(seed, stream)`, trial 0.
pub fn sample_wishart<T: Real>(p: &SymMatrix<T>, n: usize, variant: Variant, rng: &RngSpec) -> Result<SymMatrix<T>> {
    Sampler::new(p)?.wishart(n, variant, &mut rng.trial(0))
}

/// Deterministic pairwise sum over a slice.
pub fn pairwise_sum<T: Real>(xs: &[Matrix<T>], dim: usize) -> Matrix<T> {
    match xs.len() {
        0 => Matrix::zeros(dim),
        1 => xs[0].clone(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            &pairwise_sum(a, dim) + &pairwise_sum(b, dim)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate<T: Real> {
    pub mean: SymMatrix<T>,
    pub stderr: SymMatrix<T>,
    pub trials: usize,
}

impl<T: Real> MomentEstimate<T> {
    pub fn from_samples(samples: &[Matrix<T>]) -> Result<Self> {
        let trials = samples.len();
        if trials < 2 {
            return Err(Error::Invalid("need at least two trials".into()));
        }
        let r = samples[0].dim();
        let mean = pairwise_sum(samples, r).scale(T::one() / T::of(trials as f64));
        let sq: Vec<Matrix<T>> = samples
            .par_iter()
            .map(|x| {
                let d = x - &mean;
                Matrix::from_fn(r, |i, j| d[(i, j)] * d[(i, j)])
            })
            .collect();
        let var = pairwise_sum(&sq, r).scale(T::one() / T::of((trials - 1) as f64));
        let stderr = Matrix::from_fn(r, |i, j| (var[(i, j)] / T::of(trials as f64)).sqrt());
        Ok(MomentEstimate { mean: SymMatrix::from_symmetrized(&mean), stderr: SymMatrix::from_symmetrized(&stderr), trials })
    }

    /// Largest entrywise `|mean − want| / stderr`, with a floor on the error.
    pub fn max_z(&self, want: &Matrix<T>) -> T {
        let r = want.dim();
        let floor = T::of(1e-12);
        let mut z = T::zero();
        for i in 0..r {
            for j in 0..r {
                let d = (self.mean[(i, j)] - want[(i, j)]).abs();
                z = z.max(d / self.stderr[(i, j)].max(floor));
            }
        }
        z
    }
}

/// Entrywise sample mean and standard error of a matrix power.
pub fn empirical_moment<T: Real>(
    p: &SymMatrix<T>,
    n_samples: usize,
    power: usize,
    target: Target,
    trials: usize,
    rng: &RngSpec,
) -> Result<MomentEstimate<T>> {
    if trials < 100 {
        return Err(Error::Invalid("need at least 100 trials".into()));
    }
    let sampler = Sampler::new(p)?;
    let draws: Result<Vec<Matrix<T>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut g = rng.trial(t);
            let m = match target {
                Target::PnPower => sampler.wishart(n_samples, Variant::Plain, &mut g)?,
                Target::CenteredPower => sampler.wishart(n_samples, Variant::Plain, &mut g)?.sub(p),
                Target::HnPower => sampler.fluctuation(n_samples, Variant::Plain, &mut g)?,
                Target::HPower => sampler.gaussian_limit(&mut g),
            };
            Ok(m.matrix().pow(power))
        })
        .collect();
    MomentEstimate::from_samples(&draws?)
}

/// Eigenvalues in descending order.
pub fn eigen<T: Real>(m: &SymMatrix<T>) -> Result<Vec<T>> {
    m.eigenvalues()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Spectrum {
    /// Eigenvalues of `P_N`.
    Covariance,
    /// Eigenvalues of `ℋ/√r`.
    Fluctuation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub empirical: f64,
    pub mp_density: f64,
    pub sc_density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub rows: Vec<HistogramRow>,
    /// Pooled eigenvalue count.
    pub count: usize,
    /// Fraction of eigenvalues below `1e-8`.
    pub near_zero: f64,
    pub rho: f64,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,empirical,mp_density,sc_density\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.bin_lo, r.bin_hi, r.empirical, r.mp_density, r.sc_density));
        }
        s
    }
}

/// Pooled eigenvalue histogram with bin-averaged limit densities as overlay columns.
/// The overlays are the isotropic laws with `ρ = r/N`.
pub fn spectral_histogram(
    p: &SymMatrix<f64>,
    n_samples: usize,
    trials: usize,
    bins: usize,
    spectrum: Spectrum,
    rng: &RngSpec,
) -> Result<Histogram> {
    if bins < 10 {
        return Err(Error::Invalid("need at least 10 bins".into()));
    }
    let r = p.dim();
    let rho = r as f64 / n_samples as f64;
    let sampler = Sampler::new(p)?;
    let eig: Result<Vec<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut g = rng.trial(t);
            let m = match spectrum {
                Spectrum::Covariance => sampler.wishart(n_samples, Variant::Plain, &mut g)?,
                Spectrum::Fluctuation => sampler.gaussian_limit(&mut g).scale(1.0 / (r as f64).sqrt()),
            };
            m.eigenvalues()
        })
        .collect();
    let all: Vec<f64> = eig?.into_iter().flatten().collect();
    let (lo, hi) = match spectrum {
        Spectrum::Covariance => (0.0, mp_support(rho).1 * 1.05),
        Spectrum::Fluctuation => (-2.2, 2.2),
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &all {
        if x >= lo && x < hi {
            counts[((x - lo) / width) as usize] += 1;
        }
    }
    let total = all.len() as f64;
    let rows = (0..bins)
        .map(|b| {
            let (a, z) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
            let avg = |f: &dyn Fn(f64) -> f64| quad::integrate(f, a, z, 1e-10).0 / width;
            HistogramRow {
                bin_lo: a,
                bin_hi: z,
                empirical: counts[b] as f64 / (total * width),
                mp_density: avg(&|x| mp_density(x, rho)),
                sc_density: avg(&sc_density),
            }
        })
        .collect();
    Ok(Histogram { rows, count: all.len(), near_zero: all.iter().filter(|x| x.abs() < 1e-8).count() as f64 / total, rho })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hits: usize,
    pub trials: usize,
    pub frequency: f64,
    /// Wilson 95% interval.
    pub lo: f64,
    pub hi: f64,
}

impl Frequency {
    pub fn new(hits: usize, trials: usize) -> Self {
        let z = 1.959_963_984_540_054;
        let n = trials as f64;
        let f = hits as f64 / n;
        let denom = 1.0 + z * z / n;
        let centre = (f + z * z / (2.0 * n)) / denom;
        let half = z * (f * (1.0 - f) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Frequency { hits, trials, frequency: f, lo: (centre - half).max(0.0), hi: (centre + half).min(1.0) }
    }

    /// Half-width of the Wilson interval.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Frequency of a per-trial event; each trial gets its own normal stream.
pub fn event_frequency(event: impl Fn(&mut Normals) -> bool + Sync, trials: usize, rng: &RngSpec) -> Result<Frequency> {
    if trials < 1000 {
        return Err(Error::Invalid("need at least 1000 trials".into()));
    }
    let hits = (0..trials as u64).into_par_iter().filter(|&t| event(&mut rng.trial(t))).count();
    Ok(Frequency::new(hits, trials))
}
