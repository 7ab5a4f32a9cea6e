//! Laplace-transform evaluators, concentration thresholds and inequality checks (f64).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, SymMatrix};
use crate::moments::{hn_moment, SampleCoefficient};
use crate::quad;
use crate::specnum::binomial;
use crate::wick::{moment_h, WickCaps};

type Sym = SymMatrix<f64>;

/// Absolute slack for Loewner-order and scalar inequality checks.
pub const SLACK: f64 = 1e-8;

fn hyp(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

fn same_dim(a: &Sym, b: &Sym) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

/// Outcome of one inequality check: `margin = bound − empirical`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub hypothesis_satisfied: bool,
    pub bound: f64,
    pub empirical: f64,
    pub margin: f64,
}

impl BoundReport {
    pub fn upper(name: &str, bound: f64, empirical: f64) -> Self {
        BoundReport { name: name.into(), hypothesis_satisfied: true, bound, empirical, margin: bound - empirical }
    }

    /// Report whose margin is a minimum eigenvalue of `bound − empirical`.
    pub fn loewner(name: &str, margin: f64) -> Self {
        BoundReport { name: name.into(), hypothesis_satisfied: true, bound: 0.0, empirical: -margin, margin }
    }

    /// Margin non-negative up to `slack · (1 + |bound|)`.
    pub fn holds(&self, slack: f64) -> bool {
        self.hypothesis_satisfied && self.margin >= -slack * (1.0 + self.bound.abs())
    }
}

// ---------------------------------------------------------------------------
// moment constants

fn factorial_f(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(ε_n(N), v_n)`.
pub fn eps_v(n: usize, big_n: usize) -> (f64, f64) {
    assert!(n >= 1 && big_n >= 1, "n, N ≥ 1");
    let h = n / 2;
    let mut sum = BigRational::zero();
    let four_over_n = BigRational::new(BigInt::from(4), BigInt::from(big_n));
    let fact = |k: usize| -> BigInt { (1..=k).map(BigInt::from).product() };
    for m in 1..=h.min(big_n) {
        let mut term = BigRational::new(fact(h), fact(m));
        for _ in 0..h - m {
            term *= &four_over_n;
        }
        sum += term;
    }
    let mut eps = sum.to_f64().unwrap_or(f64::NAN);
    if n % 2 == 1 {
        eps /= (big_n as f64).sqrt();
    }
    let v = factorial_f(n) / (factorial_f(h) * 2f64.powi(h as i32));
    (eps, v)
}

/// `E‖ℋ‖_F² = Tr(P²) + Tr(P)²`.
pub fn h_frobenius_mean(p: &Sym) -> f64 {
    let tr = p.trace();
    p.matmul(p).trace() + tr * tr
}

/// Frobenius-norm bound on `E(ℋ_N^n)`, plus for even `n` the trace and Frobenius gaps to `E(ℋ^n)`.
pub fn fluctuation_moment_check(p: &Sym, n: usize, big_n: usize, caps: &WickCaps) -> Result<Vec<BoundReport>> {
    if n == 0 || big_n == 0 {
        return Err(hyp("n ≥ 1 and N ≥ 1"));
    }
    p.validate_spd()?;
    let tr = p.trace();
    let (eps, v) = eps_v(n, big_n);
    let hn = hn_moment(n, SampleCoefficient::Falling, caps)?.eval_numeric(p, big_n as f64)?;
    let bound = v * 2f64.powi(3 * n as i32 - 1 - (n / 2) as i32) * tr.powi(n as i32) * eps;
    let mut out = vec![BoundReport::upper("fluctuation moment norm", bound, hn.frobenius())];
    if n.is_multiple_of(2) && big_n >= n / 2 {
        let k = (n / 2) as i32;
        let h = moment_h(n, caps)?.eval_numeric(p)?;
        let r = p.dim() as f64;
        let trace_bound = h.trace() + r.sqrt() * 2f64.powi(12 * k - 1) * v * tr.powi(n as i32) * (eps - 1.0);
        out.push(BoundReport::upper("fluctuation trace gap", trace_bound, hn.trace()));
        let gap = big_n as f64 * hn.sub(&h).frobenius();
        let gap_bound = ((k - 1) * (k - 1)) as f64 * v * h_frobenius_mean(p).powi(k) + 2f64.powi(6 * k - 1) * v * tr.powi(n as i32) * eps;
        out.push(BoundReport::upper("fluctuation frobenius gap", gap_bound, gap));
    }
    Ok(out)
}

/// `‖E(ℋ^{2n})‖_F ≤ v_{2n} (Tr(P²) + Tr(P)²)^n`.
pub fn gaussian_moment_check(p: &Sym, n: usize, caps: &WickCaps) -> Result<BoundReport> {
    if n == 0 {
        return Err(hyp("n ≥ 1"));
    }
    p.validate_spd()?;
    let h = moment_h(2 * n, caps)?.eval_numeric(p)?;
    let (_, v) = eps_v(2 * n, 1);
    Ok(BoundReport::upper("gaussian moment norm", v * h_frobenius_mean(p).powi(n as i32), h.frobenius()))
}

// ---------------------------------------------------------------------------
// Laplace transforms

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LaplaceKind {
    Rank1Exact,
    Rank1Iso,
    HSeries,
    TraceAh,
    ChiSq,
    TraceAhn,
}

impl std::str::FromStr for LaplaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "RANK1_EXACT" => Self::Rank1Exact,
            "RANK1_ISO" => Self::Rank1Iso,
            "H_SERIES" => Self::HSeries,
            "TRACE_AH" => Self::TraceAh,
            "CHI_SQ" => Self::ChiSq,
            "TRACE_AHN" => Self::TraceAhn,
            _ => return Err(Error::Invalid(format!("unknown laplace kind {s}"))),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct LaplaceArgs {
    pub t: f64,
    pub p: Option<Sym>,
    pub a: Option<Sym>,
    pub dim: Option<usize>,
    pub n_samples: Option<usize>,
    /// Truncation order for the Gaussian-limit series.
    pub terms: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LaplaceValue {
    Scalar(f64),
    Matrix(Sym),
    Series { value: Sym, remainder: f64 },
    Truncated { value: f64, tail: f64 },
}

pub fn laplace(kind: LaplaceKind, args: &LaplaceArgs) -> Result<LaplaceValue> {
    let need_p = || args.p.as_ref().ok_or_else(|| Error::Invalid("P is required".into()));
    let need_a = || args.a.as_ref().ok_or_else(|| Error::Invalid("A is required".into()));
    let t = args.t;
    Ok(match kind {
        LaplaceKind::Rank1Exact => LaplaceValue::Matrix(rank1_exact(need_p()?, t)?),
        LaplaceKind::Rank1Iso => {
            let r = args.dim.or(args.p.as_ref().map(|p| p.dim())).ok_or_else(|| Error::Invalid("dim is required".into()))?;
            LaplaceValue::Scalar(rank1_iso(r, t)?)
        }
        LaplaceKind::HSeries => {
            let (value, remainder) = h_series(need_p()?, t, args.terms.unwrap_or(4), &WickCaps::default())?;
            LaplaceValue::Series { value, remainder }
        }
        LaplaceKind::TraceAh => LaplaceValue::Scalar(trace_ah(need_a()?, need_p()?, t)?),
        LaplaceKind::ChiSq => {
            let (value, tail) = chi_sq(need_p()?, t)?;
            LaplaceValue::Truncated { value, tail }
        }
        LaplaceKind::TraceAhn => {
            let n = args.n_samples.ok_or_else(|| Error::Invalid("N is required".into()))?;
            let (value, tail) = trace_ahn(need_a()?, need_p()?, n, t)?;
            LaplaceValue::Truncated { value, tail }
        }
    })
}

fn rank1_domain(p: &Sym, t: f64) -> Result<Vec<f64>> {
    p.validate_spd()?;
    let lam = p.eigenvalues()?;
    if 2.0 * t * lam[0] >= 1.0 {
        return Err(hyp("2t·λ₁(P) < 1"));
    }
    Ok(lam)
}

/// `E exp(t𝕏)` for `𝕏 = XX'`, by quadrature in the eigenbasis of `P`.
pub fn rank1_exact(p: &Sym, t: f64) -> Result<Sym> {
    rank1_domain(p, t)?;
    let eig = p.eigen()?;
    let lam = eig.values.clone();
    let det = |s: f64| lam.iter().map(|l| (1.0 - 2.0 * s * l).sqrt()).product::<f64>();
    let (a, b) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    let diag: Vec<f64> = lam.iter().map(|&l| 1.0 + sign * quad::integrate(|s| l / ((1.0 - 2.0 * s * l) * det(s)), a, b, 1e-13).0).collect();
    Ok(Sym::from_symmetrized(&eig.vectors.matmul(&Matrix::diag(&diag)).matmul(&eig.vectors.transpose())))
}

/// Scalar multiplier of `I` in `E exp(t𝕏)` when `P = I_r`.
pub fn rank1_iso(r: usize, t: f64) -> Result<f64> {
    if r == 0 || 2.0 * t >= 1.0 {
        return Err(hyp("r ≥ 1 and 2t < 1"));
    }
    let r = r as f64;
    Ok(1.0 + ((1.0 - 2.0 * t).powf(-r / 2.0) - 1.0) / r)
}

/// Largest dimension accepted by the tensor Gauss–Hermite rule.
pub const MAX_HERMITE_DIM: usize = 4;

/// `E exp(t(𝕏 − Q))` with `Q = P` (centered) or `Q = 0`, by a tensor Gauss–Hermite rule
/// after absorbing `exp(t|X|²)` into the Gaussian weight.
pub fn rank1_laplace_hermite(p: &Sym, t: f64, centered: bool, nodes: usize) -> Result<Sym> {
    crate::error::cap("dimension", p.dim(), MAX_HERMITE_DIM)?;
    rank1_domain(p, t)?;
    let r = p.dim();
    let eig = p.eigen()?;
    let lam = eig.values.clone();
    let scale: Vec<f64> = lam.iter().map(|l| (1.0 - 2.0 * t * l).sqrt()).collect();
    let rule = quad::gauss_hermite(nodes);
    let total = nodes.pow(r as u32);
    let shift = if centered { Matrix::diag(&lam) } else { Matrix::zeros(r) };
    let parts: Vec<Matrix<f64>> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; r];
            let mut w = 1.0;
            for i in 0..r {
                let (y, wy) = rule[idx % nodes];
                idx /= nodes;
                x[i] = lam[i].sqrt() * y * std::f64::consts::SQRT_2 / scale[i];
                w *= wy;
            }
            let norm2 = dot(&x, &x);
            let m = Matrix::from_fn(r, |i, j| t * (x[i] * x[j] - shift[(i, j)] - if i == j { norm2 } else { 0.0 }));
            let e = Sym::from_symmetrized(&m).apply(f64::exp).expect("small symmetric eigenproblem");
            e.into_matrix().scale(w)
        })
        .collect();
    let sum = crate::sampling::pairwise_sum(&parts, r);
    let norm = std::f64::consts::PI.powf(-(r as f64) / 2.0) / scale.iter().product::<f64>();
    let inner = sum.scale(norm);
    Ok(Sym::from_symmetrized(&eig.vectors.matmul(&inner).matmul(&eig.vectors.transpose())))
}

/// Truncated series `Σ_{n ≤ m} t^{2n}/(2n)! E(ℋ^{2n})` and its remainder bound.
pub fn h_series(p: &Sym, t: f64, m: usize, caps: &WickCaps) -> Result<(Sym, f64)> {
    p.validate_spd()?;
    let mut acc = Sym::identity(p.dim());
    for n in 1..=m {
        let h = moment_h(2 * n, caps)?.eval_numeric(p)?;
        acc = acc.add(&h.scale(t.powi(2 * n as i32) / factorial_f(2 * n)));
    }
    let x = 0.5 * t * t * h_frobenius_mean(p);
    let k = (m + 1) as f64;
    let remainder = x.exp() / (2.0 * std::f64::consts::PI * k).sqrt() * (std::f64::consts::E * x / k).powf(k);
    Ok((acc, remainder))
}

/// Eigenvalues of `AP`, through `P^{1/2} A P^{1/2}`.
pub fn ap_spectrum(a: &Sym, p: &Sym) -> Result<Vec<f64>> {
    same_dim(a, p)?;
    let root = p.sqrt_psd()?;
    Sym::from_symmetrized(&root.sandwich(a.matrix())).eigenvalues()
}

fn ap_trace(mu: &[f64], k: usize) -> f64 {
    mu.iter().map(|m| m.powi(k as i32)).sum()
}

fn ap_frobenius2(a: &Sym, p: &Sym) -> f64 {
    let ap = a.matmul(p);
    ap.frobenius().powi(2)
}

/// `log E exp(t Tr(Aℋ)) = t² Tr((AP)²)`.
pub fn trace_ah(a: &Sym, p: &Sym, t: f64) -> Result<f64> {
    Ok(t * t * ap_trace(&ap_spectrum(a, p)?, 2))
}

/// `log E exp(t‖ℋ‖_F²)` as a series with a geometric tail bound.
pub fn chi_sq(p: &Sym, t: f64) -> Result<(f64, f64)> {
    p.validate_spd()?;
    let lam = p.eigenvalues()?;
    let q = 4.0 * t.abs() * lam[0] * lam[0];
    if q >= 1.0 {
        return Err(hyp("4|t|·λ₁(P)² < 1"));
    }
    let tr = |k: usize| lam.iter().map(|l| l.powi(k as i32)).sum::<f64>();
    let r = lam.len() as f64;
    let mut sum = 0.0;
    for n in 1..100_000usize {
        sum += 0.25 * (4.0 * t).powi(n as i32) / n as f64 * (tr(n).powi(2) + tr(2 * n));
        // |term_k| ≤ (r² + r)/4 · q^k / k for k > n
        let tail = 0.25 * (r * r + r) * q.powi(n as i32 + 1) / ((n + 1) as f64 * (1.0 - q));
        if tail <= 1e-16 * sum.abs().max(1e-300) || tail == 0.0 {
            return Ok((sum, tail));
        }
    }
    Err(Error::Convergence("chi-square series".into()))
}

/// Closed form of [`chi_sq`] through the spectrum of `P`.
pub fn chi_sq_closed(p: &Sym, t: f64) -> Result<f64> {
    let lam = p.eigenvalues()?;
    let mut s = 0.0;
    for i in 0..lam.len() {
        s -= 0.5 * (-4.0 * t * lam[i] * lam[i]).ln_1p();
        for j in i + 1..lam.len() {
            s -= 0.5 * (-4.0 * t * lam[i] * lam[j]).ln_1p();
        }
    }
    Ok(s)
}

fn trace_ahn_domain(a: &Sym, p: &Sym, big_n: usize, t: f64) -> Result<Vec<f64>> {
    p.validate_spd()?;
    if big_n == 0 {
        return Err(hyp("N ≥ 1"));
    }
    if 2.0 * t.abs() * ap_frobenius2(a, p).sqrt() >= (big_n as f64).sqrt() {
        return Err(hyp("2|t|·‖AP‖_F < √N"));
    }
    ap_spectrum(a, p)
}

/// `log E exp(t Tr(Aℋ_N))` by its power series in `t/√N`, with a geometric tail certificate.
pub fn trace_ahn(a: &Sym, p: &Sym, big_n: usize, t: f64) -> Result<(f64, f64)> {
    let mu = trace_ahn_domain(a, p, big_n, t)?;
    let rho = mu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sn = (big_n as f64).sqrt();
    let q = 2.0 * t.abs() * rho / sn;
    let second = ap_trace(&mu, 2);
    let mut sum = t * t * second;
    for n in 1..100_000usize {
        sum += t * t * (2.0 * t / sn).powi(n as i32) * 2.0 / (n + 2) as f64 * ap_trace(&mu, n + 2);
        let tail = 2.0 * t * t * second * q.powi(n as i32 + 1) / ((n + 3) as f64 * (1.0 - q));
        if tail <= 1e-16 * sum.abs().max(1e-300) || tail == 0.0 {
            return Ok((sum, tail));
        }
    }
    Err(Error::Convergence("trace log-Laplace series".into()))
}

/// Closed form of [`trace_ahn`]: sum over the spectrum of `AP` of chi-square log-Laplace terms.
pub fn trace_ahn_closed(a: &Sym, p: &Sym, big_n: usize, t: f64) -> Result<f64> {
    let mu = trace_ahn_domain(a, p, big_n, t)?;
    let n = big_n as f64;
    let sn = n.sqrt();
    Ok(mu.iter().map(|m| -0.5 * n * (-2.0 * t * m / sn).ln_1p() - t * sn * m).sum())
}

/// Cumulants `κ_1..=κ_k` of `Tr(Aℋ_N)/√(2r)`; `big_n = None` gives the Gaussian limit.
pub fn trace_cumulants(a: &Sym, p: &Sym, big_n: Option<usize>, k: usize) -> Result<Vec<f64>> {
    let mu = ap_spectrum(a, p)?;
    let r = p.dim() as f64;
    Ok((1..=k)
        .map(|j| match (j, big_n) {
            (1, _) => 0.0,
            (2, _) => 2.0 * ap_trace(&mu, 2) / (2.0 * r),
            (_, None) => 0.0,
            (_, Some(n)) => {
                factorial_f(j - 1) * 2f64.powi(j as i32 - 1) * (n as f64).powf(1.0 - j as f64 / 2.0) * ap_trace(&mu, j)
                    / (2.0 * r).powf(j as f64 / 2.0)
            }
        })
        .collect())
}

/// Raw moments `m_0..=m_k` from cumulants `κ_1..=κ_k`.
pub fn moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let mut m = vec![1.0];
    for n in 1..=kappa.len() {
        let v = (1..=n).map(|j| binomial((n - 1) as i64, (j - 1) as i64).to_f64().unwrap_or(f64::NAN) * kappa[j - 1] * m[n - j]).sum();
        m.push(v);
    }
    m
}

/// Default parameters `α = 1`, `β = ρ(AP)` for the trace-moment gap bounds.
pub fn default_alpha_beta(a: &Sym, p: &Sym) -> Result<(f64, f64)> {
    let mu = ap_spectrum(a, p)?;
    Ok((1.0, mu.iter().fold(0.0f64, |m, x| m.max(x.abs()))))
}

/// Even-moment gap and odd moment of `Tr(Aℋ_N)/√(2r)` against their bounds.
pub fn trace_moment_gap_check(a: &Sym, p: &Sym, big_n: usize, n: usize, alpha: f64, beta: f64) -> Result<Vec<BoundReport>> {
    same_dim(a, p)?;
    p.validate_spd()?;
    if n == 0 || big_n == 0 || alpha < 1.0 || beta < 0.0 {
        return Err(hyp("n ≥ 1, N ≥ 1, α ≥ 1, β ≥ 0"));
    }
    let r = p.dim() as f64;
    let mu = ap_spectrum(a, p)?;
    for k in 1..=2 * n + 1 {
        if ap_trace(&mu, k).abs() / r > alpha * beta.powi(k as i32) * (1.0 + 1e-12) + 1e-300 {
            return Err(hyp(format!("r⁻¹|Tr((AP)^{k})| ≤ αβ^{k}")));
        }
    }
    let mn = moments_from_cumulants(&trace_cumulants(a, p, Some(big_n), 2 * n + 1)?);
    let mg = moments_from_cumulants(&trace_cumulants(a, p, None, 2 * n + 1)?);
    let rn = r * big_n as f64;
    let wide = (8.0 / rn).max(1.0);
    let e1 = std::f64::consts::E - 1.0;
    let even = (mn[2 * n] - mg[2 * n]).abs() / factorial_f(2 * n);
    let even_bound = 4.0 * e1 / rn * alpha.powi(n as i32 - 1) * beta.powi(2 * n as i32) * wide.powi(n as i32 - 1);
    let odd = mn[2 * n + 1].abs() / factorial_f(2 * n + 1);
    let odd_bound = e1 * std::f64::consts::SQRT_2 / rn.sqrt() * alpha.powi(n as i32) * beta.powi(2 * n as i32 + 1) * wide.powi(n as i32);
    Ok(vec![BoundReport::upper("trace even moment gap", even_bound, even), BoundReport::upper("trace odd moment", odd_bound, odd)])
}

/// Signed even-moment gap and odd moment of `Tr(Aℋ_N)/√(2r)`, unnormalised.
pub fn trace_moment_differences(a: &Sym, p: &Sym, big_n: usize, n: usize) -> Result<(f64, f64)> {
    let mn = moments_from_cumulants(&trace_cumulants(a, p, Some(big_n), 2 * n + 1)?);
    let mg = moments_from_cumulants(&trace_cumulants(a, p, None, 2 * n + 1)?);
    Ok((mn[2 * n] - mg[2 * n], mn[2 * n + 1]))
}

/// Sub-Gaussian bounds on `log E exp(t Tr(Aℋ_N))`; only the bounds whose hypotheses hold are reported.
pub fn sub_gaussian_check(a: &Sym, p: &Sym, big_n: usize, t: f64) -> Result<Vec<BoundReport>> {
    same_dim(a, p)?;
    p.validate_spd()?;
    let sn = (big_n as f64).sqrt();
    let fro2 = ap_frobenius2(a, p);
    let mu = ap_spectrum(a, p)?;
    let second = ap_trace(&mu, 2);
    let mut out = Vec::new();
    if 4.0 * t.abs() * fro2.sqrt() <= sn {
        let lhs = trace_ahn_closed(a, p, big_n, t)?;
        out.push(BoundReport::upper("sub-gaussian trace", t * t * (second + 2.0 * fro2), lhs));
    }
    let psd = a.lambda_min()? >= 0.0;
    let tr_ap = ap_trace(&mu, 1);
    if psd && 4.0 * t.abs() * tr_ap < sn {
        let lhs = trace_ahn_closed(a, p, big_n, t)?;
        out.push(BoundReport::upper("sub-gaussian positive trace", 3.0 * t * t * second, lhs));
    }
    if out.is_empty() {
        return Err(hyp("4|t|·‖AP‖_F ≤ √N, or A ⪰ 0 and 4|t|·Tr(AP) < √N"));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// matrix Laplace inequalities

/// `L(t) = t²/(1 − t)`.
pub fn l_fn(t: f64) -> f64 {
    t * t / (1.0 - t)
}

/// `Q[(1/5)I + (5/24)Q + Q²]`.
pub fn shape_centered(q: &Sym) -> Sym {
    shape(q, 5.0 / 24.0)
}

/// `Q[(1/5)I + (1/3)Q + Q²]`.
pub fn shape_uncentered(q: &Sym) -> Sym {
    shape(q, 1.0 / 3.0)
}

fn shape(q: &Sym, c: f64) -> Sym {
    let q2 = q.matmul(q);
    let q3 = q2.matmul(q);
    Sym::from_symmetrized(&(&(&q.matrix().scale(0.2) + &q2.scale(c)) + &q3))
}

/// `λ₁` of [`shape_centered`].
pub fn shape_centered_top(q: &Sym) -> Result<f64> {
    shape_centered(q).lambda_max()
}

/// Gauss–Hermite nodes per axis for the centered rank-one Laplace transform.
pub const HERMITE_NODES: usize = 24;

/// Loewner-order checks of the rank-one Laplace transforms and their logarithms,
/// for `0 ≤ 2t·Tr(P) < 1`.
pub fn matrix_laplace_check(p: &Sym, t: f64) -> Result<Vec<BoundReport>> {
    p.validate_spd()?;
    let tr = p.trace();
    if !(t >= 0.0 && 2.0 * t * tr < 1.0) {
        return Err(hyp("0 ≤ 2t·Tr(P) < 1"));
    }
    let r = p.dim();
    let id = Sym::identity(r);
    let lval = l_fn(2.0 * t * tr);
    let q = p.scale(1.0 / tr);
    let upper1 = shape_uncentered(&q).scale(lval);
    let upper0 = shape_centered(&q).scale(lval);

    // E_0 commutes with P, so E_0 exp(−tP) is symmetric.
    let e0 = rank1_exact(p, t)?;
    let e0_shift = Sym::from_symmetrized(&e0.matmul(p.apply(|x| (-t * x).exp())?.matrix()));
    let ep = rank1_laplace_hermite(p, t, true, HERMITE_NODES)?;
    let log_e0 = e0.apply(f64::ln)?;
    let log_ep = ep.apply(f64::ln)?;
    let gap = |name: &str, lo: &Sym, hi: &Sym| -> Result<BoundReport> { Ok(BoundReport::loewner(name, hi.sub(lo).lambda_min()?)) };
    let both = |name: &str, lo: &Sym, mid: &Sym, hi: &Sym| -> Result<BoundReport> {
        let a = gap(name, lo, mid)?;
        let b = gap(name, mid, hi)?;
        Ok(if a.margin <= b.margin { a } else { b })
    };
    Ok(vec![
        both("uncentered laplace", &id, &e0_shift, &upper1.apply(f64::exp)?)?,
        both("centered laplace", &id, &ep, &upper0.apply(f64::exp)?)?,
        both("uncentered log-laplace", &Sym::from_symmetrized(&Matrix::zeros(r)), &log_e0.sub(&p.scale(t)), &upper1)?,
        both("centered log-laplace", &Sym::from_symmetrized(&Matrix::zeros(r)), &log_ep, &upper0)?,
    ])
}

// ---------------------------------------------------------------------------
// Legendre transform and thresholds

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LegendreKind {
    L,
    Lstar,
    LstarInv,
    CramerThreshold,
}

impl std::str::FromStr for LegendreKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "L" => Self::L,
            "LSTAR" => Self::Lstar,
            "LSTAR_INV" => Self::LstarInv,
            "CRAMER_THRESHOLD" => Self::CramerThreshold,
            _ => return Err(Error::Invalid(format!("unknown legendre kind {s}"))),
        })
    }
}

pub fn legendre(kind: LegendreKind, x: f64) -> Result<f64> {
    match kind {
        LegendreKind::L if (0.0..1.0).contains(&x) => Ok(l_fn(x)),
        LegendreKind::L => Err(hyp("0 ≤ t < 1")),
        _ if x < 0.0 || !x.is_finite() => Err(hyp("argument ≥ 0")),
        LegendreKind::Lstar => Ok(((x + 1.0).sqrt() - 1.0).powi(2)),
        LegendreKind::LstarInv | LegendreKind::CramerThreshold => Ok(x + 2.0 * x.sqrt()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ThresholdKind {
    /// `|Tr(Aℋ_N)|`
    TraceTwoSided,
    /// `Tr(Aℋ_N)` from above, `A ⪰ 0`
    TracePos,
    /// `−Tr(Aℋ_N)` from above, `A ⪰ 0`
    TraceNeg,
    /// `Tr(Aℋ)` from above, Gaussian limit
    TraceGaussian,
    /// `‖ℋ_N‖_op`
    Opnorm,
    /// `sup_k |λ_k(P_N) − λ_k(P)|`
    EigenSup,
    /// `λ₁(P_N)`
    Lambda1,
    /// `λ₁(ℋ_N)`
    Lambda1Fluctuation,
    /// `Z` with `E(Z^n)^{1/n} ≤ z·n`
    MomentTail,
}

impl std::str::FromStr for ThresholdKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "TRACE_TWO_SIDED" => Self::TraceTwoSided,
            "TRACE_POS" => Self::TracePos,
            "TRACE_NEG" => Self::TraceNeg,
            "TRACE_GAUSSIAN" => Self::TraceGaussian,
            "OPNORM" => Self::Opnorm,
            "EIGEN_SUP" => Self::EigenSup,
            "LAMBDA1" => Self::Lambda1,
            "LAMBDA1_FLUCTUATION" => Self::Lambda1Fluctuation,
            "MOMENT_TAIL" => Self::MomentTail,
            _ => return Err(Error::Invalid(format!("unknown threshold kind {s}"))),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct ThresholdArgs {
    pub a: Option<Sym>,
    pub p: Option<Sym>,
    pub n_samples: Option<usize>,
    pub delta: f64,
    /// Moment scale `z` for the moment-tail threshold.
    pub z: Option<f64>,
}

/// Level exceeded with probability at most `e^{−δ}`; refuses when a hypothesis fails.
pub fn concentration_threshold(kind: ThresholdKind, args: &ThresholdArgs) -> Result<f64> {
    let delta = args.delta;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(hyp("δ ≥ 0"));
    }
    if kind == ThresholdKind::MomentTail {
        let z = args.z.ok_or_else(|| Error::Invalid("z is required".into()))?;
        if z <= 0.0 {
            return Err(hyp("z > 0"));
        }
        let e2 = std::f64::consts::E.powi(2);
        return Ok(z * e2 / std::f64::consts::SQRT_2 * (0.5 + delta + delta.sqrt()));
    }
    let p = args.p.as_ref().ok_or_else(|| Error::Invalid("P is required".into()))?;
    p.validate_spd()?;
    let r = p.dim() as f64;
    let n = || args.n_samples.map(|n| n as f64).ok_or_else(|| Error::Invalid("N is required".into()));
    let a = || -> Result<&Sym> {
        let a = args.a.as_ref().ok_or_else(|| Error::Invalid("A is required".into()))?;
        same_dim(a, p)?;
        Ok(a)
    };
    let psd = |a: &Sym| -> Result<()> {
        if a.lambda_min()? < 0.0 {
            return Err(hyp("A ⪰ 0"));
        }
        Ok(())
    };
    match kind {
        ThresholdKind::TraceTwoSided => {
            let (a, n) = (a()?, n()?);
            if 8.0 * delta > n {
                return Err(hyp("8δ ≤ N"));
            }
            let second = ap_trace(&ap_spectrum(a, p)?, 2);
            Ok(2.0 * ((delta + 1.0) * (second + 2.0 * ap_frobenius2(a, p))).sqrt())
        }
        ThresholdKind::TracePos => {
            let (a, n) = (a()?, n()?);
            psd(a)?;
            if 8.0 * delta > n {
                return Err(hyp("8δ ≤ N"));
            }
            Ok(2.0 * 3f64.sqrt() * (delta * ap_trace(&ap_spectrum(a, p)?, 2)).sqrt())
        }
        ThresholdKind::TraceNeg => {
            let (a, n) = (a()?, n()?);
            psd(a)?;
            let mu = ap_spectrum(a, p)?;
            let (second, first) = (ap_trace(&mu, 2), ap_trace(&mu, 1));
            if 4.0 * delta * first * first > n * second {
                return Err(hyp("4δ ≤ N·Tr((AP)²)/Tr(AP)²"));
            }
            Ok(2.0 * (delta * second).sqrt())
        }
        ThresholdKind::TraceGaussian => Ok(2.0 * (delta * ap_trace(&ap_spectrum(a()?, p)?, 2)).sqrt()),
        ThresholdKind::Opnorm | ThresholdKind::EigenSup => {
            let n = n()?;
            if n / 8.0 < delta + 7.0 * r {
                return Err(hyp("N/8 ≥ δ + 7r"));
            }
            let level = 5.0 * 3f64.sqrt() * (delta + 7.0 * r).sqrt() * p.lambda_max()?;
            Ok(if kind == ThresholdKind::Opnorm { level } else { level / n.sqrt() })
        }
        ThresholdKind::Lambda1 | ThresholdKind::Lambda1Fluctuation => {
            let n = n()?;
            let tr = p.trace();
            let top = shape_centered_top(&p.scale(1.0 / tr))?;
            let d = delta + r.ln();
            Ok(if kind == ThresholdKind::Lambda1 {
                p.lambda_max()? + 2.0 * tr * (d / n + 2.0 * (d / n * top).sqrt())
            } else {
                2.0 * tr * (d / n.sqrt() + 2.0 * (d * top).sqrt())
            })
        }
        ThresholdKind::MomentTail => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// rank-one trace powers

fn rank1_uv(x: &[f64], y: &[f64], p: &Sym) -> (f64, f64, f64, f64) {
    let (px, py) = (p.matvec(x), p.matvec(y));
    let (xpx, ypy) = (dot(x, &px), dot(y, &py));
    (dot(x, &py), xpx * ypy, xpx, ypy)
}

fn choose(n: usize, k: usize) -> f64 {
    binomial(n as i64, k as i64).to_f64().unwrap_or(f64::NAN)
}

/// `(a_n, b_n)` with `4(AP)^n A = a_n(xy' + yx') + b_n(⟨x,Px⟩yy' + ⟨y,Py⟩xx')`, `A = (xy' + yx')/2`.
pub fn rank1_coeffs(x: &[f64], y: &[f64], p: &Sym, n: usize) -> (f64, f64) {
    let (u, v, _, _) = rank1_uv(x, y, p);
    let c = 2f64.powi(1 - n as i32);
    let a = (0..=n / 2).map(|l| choose(n, 2 * l) * u.powi((n - 2 * l) as i32) * v.powi(l as i32)).sum::<f64>();
    let b = if n == 0 {
        0.0
    } else {
        (0..=(n - 1) / 2).map(|l| choose(n, 2 * l + 1) * u.powi((n - 1 - 2 * l) as i32) * v.powi(l as i32)).sum::<f64>()
    };
    (c * a, c * b)
}

/// `2^{n+1} Tr[(AP)^{n+2}]` in closed form, `A = (xy' + yx')/2`.
pub fn rank1_trace_power(x: &[f64], y: &[f64], p: &Sym, n: usize) -> f64 {
    let (u, v, _, _) = rank1_uv(x, y, p);
    let first: f64 = (0..=n.div_ceil(2)).map(|l| choose(n + 1, 2 * l) * u.powi((n + 2 - 2 * l) as i32) * v.powi(l as i32)).sum();
    let second: f64 = (1..=n / 2 + 1).map(|l| choose(n + 1, 2 * l - 1) * u.powi((n + 2 - 2 * l) as i32) * v.powi(l as i32)).sum();
    first + second
}

fn rank1_matrix(x: &[f64], y: &[f64]) -> Sym {
    Sym::from_symmetrized(&(&Matrix::outer(x, y) + &Matrix::outer(y, x)).scale(0.5))
}

/// `2^{n+1} Tr[(AP)^{n+2}]` by matrix powers.
pub fn rank1_trace_power_direct(x: &[f64], y: &[f64], p: &Sym, n: usize) -> f64 {
    let ap = rank1_matrix(x, y).matmul(p);
    2f64.powi(n as i32 + 1) * ap.pow(n + 2).trace()
}

/// Closed forms against direct matrix arithmetic, and the unit-ball bound `2^{n+1}Tr[(AP)^{n+2}] ≤ 2^{n+2}λ₁(P)^{n+2}`.
pub fn rank1_check(x: &[f64], y: &[f64], p: &Sym, n: usize) -> Result<Vec<BoundReport>> {
    if x.len() != p.dim() || y.len() != p.dim() {
        return Err(Error::Dimension { expected: p.dim(), got: x.len().min(y.len()) });
    }
    let a = rank1_matrix(x, y);
    let (_, _, xpx, ypy) = rank1_uv(x, y, p);
    let (an, bn) = rank1_coeffs(x, y, p, n);
    let s = &Matrix::outer(x, y) + &Matrix::outer(y, x);
    let bmat = &Matrix::outer(y, y).scale(xpx) + &Matrix::outer(x, x).scale(ypy);
    let closed = &s.scale(an) + &bmat.scale(bn);
    let direct = a.matmul(p).pow(n).matmul(a.matrix()).scale(4.0);
    let scale = 1.0 + direct.max_abs();
    let mat_err = (&closed - &direct).max_abs() / scale;
    let tc = rank1_trace_power(x, y, p, n);
    let td = rank1_trace_power_direct(x, y, p, n);
    let tr_err = (tc - td).abs() / (1.0 + td.abs());
    let mut out =
        vec![BoundReport::upper("rank-one power identity", 1e-10, mat_err), BoundReport::upper("rank-one trace identity", 1e-10, tr_err)];
    if dot(x, x) <= 1.0 && dot(y, y) <= 1.0 {
        let l1 = p.lambda_max()?;
        out.push(BoundReport::upper("rank-one trace bound", 2f64.powi(n as i32 + 2) * l1.powi(n as i32 + 2), td));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn p3() -> Sym {
        Sym::from_rows(&[vec![2.0, 0.3, -0.1], vec![0.3, 1.0, 0.2], vec![-0.1, 0.2, 0.5]]).unwrap()
    }

    #[test]
    fn eps_and_v_values() {
        for n in [1, 2, 7, 100] {
            assert_eq!(eps_v(2, n).0, 1.0);
        }
        assert_eq!(eps_v(4, 1).1, 3.0);
        assert!(close(eps_v(4, 100).0, 1.08, 1e-15));
        let (e, _) = eps_v(3, 100);
        assert!(close(e, 0.1, 1e-15));
    }

    #[test]
    fn rank1_iso_and_exact() {
        assert!(close(rank1_iso(2, 0.1).unwrap(), 1.125, 1e-15));
        let id = Sym::identity(2);
        let e = rank1_exact(&id, 0.1).unwrap();
        assert!((e[(0, 0)] - 1.125).abs() < 1e-12 && e[(0, 1)].abs() < 1e-12);
        let z = rank1_exact(&p3(), 0.0).unwrap();
        assert!((z.matrix() - &Matrix::identity(3)).max_abs() < 1e-15);
        let neg = rank1_exact(&id, -0.3).unwrap();
        assert!((neg[(1, 1)] - rank1_iso(2, -0.3).unwrap()).abs() < 1e-12);
        assert!(rank1_exact(&id, 0.5).is_err());
    }

    #[test]
    fn hermite_matches_quadrature() {
        let p = p3();
        let t = 0.12;
        let gh = rank1_laplace_hermite(&p, t, false, HERMITE_NODES).unwrap();
        let ex = rank1_exact(&p, t).unwrap();
        assert!((gh.matrix() - ex.matrix()).max_abs() < 1e-10, "{:?}", (gh.matrix() - ex.matrix()).max_abs());
        let id = Sym::identity(2);
        let c = rank1_laplace_hermite(&id, 0.1, true, HERMITE_NODES).unwrap();
        let want = (-0.1f64).exp() * 1.125;
        assert!((c[(0, 0)] - want).abs() < 1e-12 && c[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn series_agree_with_closed_forms() {
        let p = p3();
        let a = Sym::from_rows(&[vec![1.0, -0.5, 0.0], vec![-0.5, 0.3, 0.4], vec![0.0, 0.4, -0.8]]).unwrap();
        for t in [-0.7, 0.2, 1.1] {
            let (s, tail) = trace_ahn(&a, &p, 50, t).unwrap();
            assert!(close(s, trace_ahn_closed(&a, &p, 50, t).unwrap(), 1e-12) && tail >= 0.0);
        }
        let (s, _) = chi_sq(&p, 0.03).unwrap();
        assert!(close(s, chi_sq_closed(&p, 0.03).unwrap(), 1e-12));
        assert!(chi_sq(&p, 0.07).is_err());
        assert!(trace_ahn(&a, &p, 4, 3.0).is_err());
    }

    #[test]
    fn cumulant_moments() {
        // Gaussian: m2 = κ2, m4 = 3κ2²
        let m = moments_from_cumulants(&[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(m, vec![1.0, 0.0, 2.0, 0.0, 12.0]);
        let m = moments_from_cumulants(&[1.0, 1.0, 1.0]);
        assert_eq!(m, vec![1.0, 1.0, 2.0, 5.0]);
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(LegendreKind::L, 0.5).unwrap(), 0.5);
        assert_eq!(legendre(LegendreKind::Lstar, 3.0).unwrap(), 1.0);
        assert_eq!(legendre(LegendreKind::LstarInv, 1.0).unwrap(), 3.0);
        assert!(legendre(LegendreKind::L, 1.0).is_err());
        assert!(legendre(LegendreKind::Lstar, -1.0).is_err());
    }

    #[test]
    fn threshold_plug_ins() {
        let args = ThresholdArgs { a: Some(Sym::identity(3)), p: Some(Sym::identity(3)), n_samples: Some(100), delta: 1.0, z: None };
        let v = concentration_threshold(ThresholdKind::TraceTwoSided, &args).unwrap();
        assert!(close(v, 2.0 * 18f64.sqrt(), 1e-14));
        let args = ThresholdArgs { p: Some(Sym::identity(2)), n_samples: Some(1000), delta: 1.0, ..Default::default() };
        let v = concentration_threshold(ThresholdKind::Opnorm, &args).unwrap();
        assert!(close(v, 5.0 * 45f64.sqrt(), 1e-14));
        let small = ThresholdArgs { n_samples: Some(100), ..args };
        assert!(matches!(concentration_threshold(ThresholdKind::Opnorm, &small), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn rank1_eigenvector_pairs() {
        let p = Sym::diag(&[3.0, 2.0, 0.5]);
        let (x, y) = (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]);
        for n in [2usize, 4, 6] {
            let a = rank1_matrix(&x, &y);
            let lhs = 2f64.powi(n as i32 - 1) * a.matmul(&p).pow(n).trace();
            assert!(close(lhs, 6f64.powi(n as i32 / 2), 1e-12));
        }
        for n in 1..6 {
            assert!(rank1_check(&x, &y, &p, n).unwrap().iter().all(|r| r.holds(0.0)));
        }
    }
}
