//! Moment polynomials by recursion and by closed-form partition sums, finite-N
//! expansions, isotropic specializations and large-dimension limits.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{cap, Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::partitions::{enumerate, integer_partitions, PartitionClass, SetPartition};
use crate::quad;
use crate::scalar::Real;
use crate::specnum::{bell_complete, bell_partial_table, binomial, catalan, factorial, kreweras, narayana, pow, riordan_nm, stirling1_row};
use crate::tracepoly::{GammaOp, Key, RLaurent, TracePolynomial};
use crate::wick::{moment_class, moment_partition, MomentClass, WickCaps};

/// Largest `n` for the recursions and closed forms.
pub const MAX_RECURSION: usize = 8;
pub const MAX_SIGMA_TRACE: usize = 10;
pub const MAX_ALPHA: usize = 9;
pub const MAX_ISOTROPIC: usize = 12;
pub const MAX_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Route {
    Recursion,
    ClosedForm,
    Wick,
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "RECURSION" => Route::Recursion,
            "CLOSED_FORM" | "CLOSED" => Route::ClosedForm,
            "WICK" => Route::Wick,
            _ => return Err(Error::Invalid(format!("unknown route {s}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentMeta {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub centered: bool,
    pub route: Route,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentResult {
    pub value: TracePolynomial,
    pub meta: MomentMeta,
}

impl MomentResult {
    pub fn new(value: TracePolynomial, n: usize, m: Option<usize>, centered: bool, route: Route) -> Self {
        MomentResult { value, meta: MomentMeta { n, m, samples: None, centered, route } }
    }
}

fn sum_all(items: impl IntoIterator<Item = TracePolynomial>) -> TracePolynomial {
    items.into_iter().fold(TracePolynomial::zero(), |a, t| a + t)
}

fn rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Which Catalan-type recursion builds `M⁺_{2n,n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MPlusForm {
    /// `Σ [M_k P + Tr(M_k P) I] M_l P`
    #[default]
    Product,
    /// `Σ M_k Γ(M_l)`
    Gamma,
}

/// All of `M⁺_{0,0}, …, M⁺_{2n,n}`.
pub fn m_plus_table(n: usize, form: MPlusForm) -> Result<Vec<TracePolynomial>> {
    cap("n", n, MAX_RECURSION)?;
    let mut t = vec![TracePolynomial::identity()];
    for j in 1..=n {
        let next = sum_all((0..j).map(|k| {
            let (a, b) = (&t[k], &t[j - 1 - k]);
            match form {
                MPlusForm::Product => {
                    let ap = a.mul_p();
                    &(&ap + &ap.trace()) * &b.mul_p()
                }
                MPlusForm::Gamma => a * &b.gamma(GammaOp::Gamma),
            }
        }));
        t.push(next);
    }
    Ok(t)
}

/// Non-crossing, singleton-free part `M⁺_{2n,n}(P)` of the central moment.
pub fn m_plus(n: usize) -> Result<TracePolynomial> {
    Ok(m_plus_table(n, MPlusForm::Product)?.pop().unwrap())
}

/// `Σ_0, …, Σ_n` by the Catalan-type recursion.
pub fn sigma_table(n: usize) -> Vec<TracePolynomial> {
    let mut t = vec![TracePolynomial::identity()];
    for j in 1..=n {
        let next = sum_all((0..j).map(|k| &t[k].mul_p().trace() * &t[j - 1 - k].mul_p()));
        t.push(next);
    }
    t
}

/// Leading-order part `Σ_n(P)` of `E(ℋ^{2n})`.
pub fn sigma(n: usize, route: Route) -> Result<TracePolynomial> {
    cap("n", n, MAX_RECURSION)?;
    match route {
        Route::Recursion => Ok(sigma_table(n).pop().unwrap()),
        Route::ClosedForm => sigma_closed(n),
        Route::Wick => Err(Error::Invalid("sigma has no Wick route".into())),
    }
}

/// Sum over non-crossing partitions: the first block contributes `P^{|π₁|}`, every
/// other block `Tr(P^{1+size})`, and each of the `n − m + 1` extra slots `Tr(P)`.
fn sigma_closed(n: usize) -> Result<TracePolynomial> {
    if n == 0 {
        return Ok(TracePolynomial::identity());
    }
    let parts: Vec<SetPartition> = enumerate(n, None, PartitionClass::Nc)?.collect();
    Ok(parts
        .par_iter()
        .map(|p| {
            let mut v = vec![0u32; n + 2];
            v[1] = (n - p.len() + 1) as u32;
            for b in &p.blocks()[1..] {
                v[b.len() + 1] += 1;
            }
            TracePolynomial::monomial(BigRational::one(), v, p.blocks()[0].len() as u32)
        })
        .reduce(TracePolynomial::zero, |a, b| a + b))
}

/// One entry of the multinomial table: trace exponents `mu[i]` of `Tr(P^i)` and coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaTerm {
    pub mu: Vec<usize>,
    pub coeff: u64,
}

/// Profiles `mu` with `Σ mu_i = n + 1`, `Σ i·mu_i = 2n` and coefficients `2·n!/∏ mu_i!`.
pub fn sigma_trace_table(n: usize) -> Result<Vec<SigmaTerm>> {
    cap("n", n, MAX_SIGMA_TRACE)?;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut out: Vec<SigmaTerm> = integer_partitions(2 * n)
        .into_iter()
        .filter(|t| t.blocks() == n + 1)
        .map(|t| {
            let mut mu = t.mu.clone();
            mu.truncate(n + 1);
            let denom = mu.iter().fold(BigInt::one(), |a, &c| a * factorial(c));
            SigmaTerm { coeff: (factorial(n) * 2u32 / denom).to_u64().expect("coefficient fits in u64"), mu }
        })
        .collect();
    out.sort_by(|a, b| b.mu[1..].cmp(&a.mu[1..]));
    Ok(out)
}

/// `Tr(Σ_n(P))` as the multinomial trace sum.
pub fn sigma_trace(n: usize) -> Result<TracePolynomial> {
    Ok(sum_all(
        sigma_trace_table(n)?.into_iter().map(|t| TracePolynomial::monomial(rat(t.coeff), t.mu.iter().map(|&c| c as u32).collect(), 0)),
    ))
}

/// Table `Σ°_{n,m}` for `n ≤ nmax`, indexed `[n][m]`.
pub fn sigma_circ_table(nmax: usize) -> Vec<Vec<TracePolynomial>> {
    let mut t: Vec<Vec<TracePolynomial>> = vec![vec![TracePolynomial::identity()]];
    for n in 1..=nmax {
        let mut row = vec![TracePolynomial::zero(); n + 1];
        for (m, slot) in row.iter_mut().enumerate().skip(1) {
            // Σ°_{n,m} from Σ°_{n-1,m-1} P and the closed-block splits with n2 ≥ 1
            let (n0, m0) = (n - 1, m - 1);
            let mut acc = if m0 <= n0 { t[n0][m0].mul_p() } else { TracePolynomial::zero() };
            for n2 in 1..=n0 {
                let n1 = n0 - n2;
                for m2 in 1..=n2.min(m0 + 1) {
                    let m1 = m0 + 1 - m2;
                    if m1 > n1 {
                        continue;
                    }
                    let left = &t[n1][m1];
                    let right = &t[n2][m2];
                    if left.is_empty() || right.is_empty() {
                        continue;
                    }
                    acc += &(&left.mul_p() * &right.trace());
                }
            }
            *slot = acc;
        }
        t.push(row);
    }
    t
}

/// Leading-order part `Σ°_{n,m}(P)` of the uncentered moment `M°_{n,m}(P)`.
pub fn sigma_circ(n: usize, m: usize, route: Route) -> Result<TracePolynomial> {
    cap("n", n, MAX_RECURSION)?;
    if m > n || (m == 0 && n > 0) {
        return Ok(TracePolynomial::zero());
    }
    match route {
        Route::Recursion => Ok(sigma_circ_table(n)[n][m].clone()),
        Route::ClosedForm => sigma_circ_closed(n, m),
        Route::Wick => Err(Error::Invalid("sigma_circ has no Wick route".into())),
    }
}

/// Sum over `𝒩_{n,m}` of the complement's trace profile, with the outer block of size ι
/// turned into the matrix power `P^ι`.
fn sigma_circ_closed(n: usize, m: usize) -> Result<TracePolynomial> {
    if n == 0 {
        return Ok(TracePolynomial::identity());
    }
    let parts: Vec<SetPartition> = enumerate(n, Some(m), PartitionClass::Nc)?.collect();
    let terms: Result<Vec<TracePolynomial>> = parts
        .par_iter()
        .map(|p| {
            let iota = p.iota()?;
            let k = p.kreweras()?;
            let mut v = vec![0u32; n + 1];
            for b in k.blocks() {
                v[b.len()] += 1;
            }
            if v[iota] == 0 {
                return Err(Error::Invalid(format!("complement of {p} has no block of size {iota}")));
            }
            v[iota] -= 1;
            Ok(TracePolynomial::monomial(BigRational::one(), v, iota as u32))
        })
        .collect();
    Ok(sum_all(terms?))
}

/// Coefficient of `M_{n,m}` in the finite-`N` expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SampleCoefficient {
    /// `(N)_m = N(N−1)⋯(N−m+1)`
    #[default]
    Falling,
    /// `binom(N, m)`
    Binomial,
}

/// `Σ_d N^{d/2} · coeff_d`, a trace polynomial with half-integer powers of `N`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NExpansion {
    terms: BTreeMap<i32, TracePolynomial>,
}

impl NExpansion {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Adds `N^{doubled/2} · t`.
    pub fn add(&mut self, doubled: i32, t: &TracePolynomial) {
        let e = self.terms.entry(doubled).or_default();
        *e += t;
        if e.is_empty() {
            self.terms.remove(&doubled);
        }
    }

    /// Coefficient of `N^{doubled/2}`.
    pub fn coeff(&self, doubled: i32) -> TracePolynomial {
        self.terms.get(&doubled).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&i32, &TracePolynomial)> {
        self.terms.iter()
    }

    /// Multiplies by `N^{doubled/2}`.
    pub fn shift(&self, doubled: i32) -> Self {
        NExpansion { terms: self.terms.iter().map(|(d, t)| (d + doubled, t.clone())).collect() }
    }

    /// Exact value at an integer sample size; all powers must be whole.
    pub fn at(&self, n: u64) -> Result<TracePolynomial> {
        let mut out = TracePolynomial::zero();
        let nn = rat(n);
        for (d, t) in &self.terms {
            if d % 2 != 0 {
                return Err(Error::Invalid("half-integer power of N has no rational value".into()));
            }
            let e = d / 2;
            let mut f = pow(&nn, e.unsigned_abs() as usize);
            if e < 0 {
                f = f.recip();
            }
            out += &t.scale(&f);
        }
        Ok(out)
    }

    pub fn eval_numeric<T: Real>(&self, p: &SymMatrix<T>, n: f64) -> Result<SymMatrix<T>> {
        let mut out = Matrix::zeros(p.dim());
        for (d, t) in &self.terms {
            let v = t.eval_numeric(p)?;
            out = &out + &v.matrix().scale(T::of(n.powf(*d as f64 / 2.0)));
        }
        Ok(SymMatrix::from_symmetrized(&out))
    }
}

impl fmt::Display for NExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (j, (d, t)) in self.terms.iter().rev().enumerate() {
            if j > 0 {
                writeln!(f)?;
            }
            let e = if d % 2 == 0 { format!("{}", d / 2) } else { format!("{d}/2") };
            write!(f, "N^{e}: {t}")?;
        }
        Ok(())
    }
}

impl Serialize for NExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            half_power: i32,
            value: &'a TracePolynomial,
        }
        let terms: Vec<Term> = self.terms.iter().rev().map(|(d, t)| Term { half_power: *d, value: t }).collect();
        terms.serialize(s)
    }
}

/// `Σ_m c_m(N) · M_m` expanded in powers of `N`, with the result scaled by `N^{shift/2}`.
fn expand(blocks: &[(usize, TracePolynomial)], coeff: SampleCoefficient, shift: i32) -> NExpansion {
    let mut out = NExpansion::zero();
    for (m, mm) in blocks {
        let s = stirling1_row(*m);
        let div = match coeff {
            SampleCoefficient::Falling => BigRational::one(),
            SampleCoefficient::Binomial => rat(factorial(*m)).recip(),
        };
        for (l, c) in s.iter().enumerate() {
            if !c.is_zero() {
                out.add(2 * l as i32 + shift, &mm.scale(&(rat(c.clone()) * &div)));
            }
        }
    }
    out
}

/// `M_{n,m}(P)` (centered, singleton-free) or `M°_{n,m}(P)` (uncentered, all partitions).
pub fn m_nm(n: usize, m: usize, centered: bool, caps: &WickCaps) -> Result<TracePolynomial> {
    let class = if centered { MomentClass::QAll } else { MomentClass::PAll };
    moment_class(n, m, class, centered, caps)
}

/// `E(ℋ_N^n)` with exact dependence on `N`.
pub fn hn_moment(n: usize, coeff: SampleCoefficient, caps: &WickCaps) -> Result<NExpansion> {
    cap("n", n, caps.centered)?;
    let blocks: Result<Vec<(usize, TracePolynomial)>> = (1..=n / 2).map(|m| Ok((m, m_nm(n, m, true, caps)?))).collect();
    Ok(expand(&blocks?, coeff, -(n as i32)))
}

/// `E(P_N^n)` (uncentered) or `E((P_N − P)^n)` (centered).
pub fn pn_moment(n: usize, centered: bool, coeff: SampleCoefficient, caps: &WickCaps) -> Result<NExpansion> {
    if centered {
        return Ok(hn_moment(n, coeff, caps)?.shift(-(n as i32)));
    }
    cap("n", n, caps.uncentered)?;
    let blocks: Result<Vec<(usize, TracePolynomial)>> = (1..=n).map(|m| Ok((m, m_nm(n, m, false, caps)?))).collect();
    Ok(expand(&blocks?, coeff, -2 * n as i32))
}

/// `∂_{n,m}(P) = Σ_l s(l,m) M_{n,l}(P)`, or the uncentered `∂°_{n,m}(P)`.
pub fn differential(n: usize, m: usize, centered: bool, caps: &WickCaps) -> Result<TracePolynomial> {
    let top = if centered { n / 2 } else { n };
    let mut out = TracePolynomial::zero();
    for l in m.max(1)..=top {
        let s = &stirling1_row(l)[m];
        if !s.is_zero() {
            out += &m_nm(n, l, centered, caps)?.scale(&rat(s.clone()));
        }
    }
    Ok(out)
}

/// `E[(Σ_{i≤k} (𝕏_i − P))^n]` by summing the Wick moment of every label map `[n] → [k]`.
pub fn sum_power_moment(n: usize, k: usize, caps: &WickCaps) -> Result<TracePolynomial> {
    cap("n", n, caps.centered)?;
    let mut counts: BTreeMap<SetPartition, u64> = BTreeMap::new();
    let mut labels = vec![0usize; n];
    loop {
        *counts.entry(SetPartition::from_labels(&labels)).or_default() += 1;
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let mut out = TracePolynomial::zero();
    for (p, c) in counts {
        out += &moment_partition(&p, true, caps)?.scale(&rat(c));
    }
    Ok(out)
}

/// Recovers `M_{n,m}(P)` from the finite-sample moments of `k ≤ m` summands.
pub fn inversion(n: usize, m: usize, caps: &WickCaps) -> Result<TracePolynomial> {
    if m == 0 {
        return Err(Error::Invalid("m must be at least 1".into()));
    }
    let mut out = TracePolynomial::zero();
    for k in 1..=m {
        let c = rat(if (m - k).is_multiple_of(2) { 1 } else { -1 }) / rat(factorial(k) * factorial(m - k));
        out += &sum_power_moment(n, k, caps)?.scale(&c);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Isotropic {
    /// `M°_π(I)` for a non-crossing `π`.
    MPiCirc(SetPartition),
    /// `M_π(I)` for a non-crossing `π`.
    MPiCentered(SetPartition),
    /// `E((𝕏 − I)^n)` in Bell-polynomial form.
    XMinusIPower(usize),
    /// `M⁺_{2n,n}(I)`.
    MPlusI(usize),
    /// `E(𝕏^n)` as a trace polynomial.
    Rank1Power(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum IsoValue {
    Laurent(RLaurent),
    Poly(TracePolynomial),
}

impl fmt::Display for IsoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoValue::Laurent(l) => write!(f, "{l}"),
            IsoValue::Poly(p) => write!(f, "{p}"),
        }
    }
}

fn r_plus(c: i64) -> RLaurent {
    RLaurent::r() + RLaurent::constant(rat(c))
}

/// `E(𝕏^k)` at `P = I`: `∏_{1≤l<k} (r + 2l)`.
pub fn rank1_power_iso(k: usize) -> RLaurent {
    (1..k).fold(RLaurent::one(), |a, l| a * r_plus(2 * l as i64))
}

/// `E((𝕏 − I)^n)` at `P = I` through the complete Bell polynomial.
pub fn x_minus_i_bell(n: usize) -> RLaurent {
    if n == 0 {
        return RLaurent::one();
    }
    let mut x = vec![r_plus(-1)];
    for k in 2..=n {
        x.push(RLaurent::monomial(1, rat(factorial(k - 1) << (k - 1))));
    }
    let sign = rat(if n.is_multiple_of(2) { 1 } else { -1 });
    bell_complete(n, &x).shift(-1) + (RLaurent::one() - RLaurent::monomial(-1, BigRational::one())).scale(&sign)
}

/// `E((𝕏 − I)^n)` at `P = I` through the binomial expansion.
pub fn x_minus_i_binomial(n: usize) -> RLaurent {
    (0..=n).fold(RLaurent::zero(), |a, k| {
        let c = binomial(n as i64, k as i64) * if (n - k).is_multiple_of(2) { 1 } else { -1 };
        a + rank1_power_iso(k).scale(&rat(c))
    })
}

/// `E(𝕏^n)` through the Bell-polynomial formula in the traces `Tr(P^j)`.
pub fn rank1_power(n: usize) -> Result<TracePolynomial> {
    cap("n", n, MAX_ISOTROPIC)?;
    if n == 0 {
        return Ok(TracePolynomial::identity());
    }
    let y: Vec<TracePolynomial> = (1..n).map(|j| TracePolynomial::tr(j).scale(&rat(factorial(j - 1) << (j - 1)))).collect();
    let table = crate::specnum::bell_complete_all(n - 1, &y);
    let mut out = TracePolynomial::zero();
    for (k, b) in table.iter().enumerate() {
        let c = rat(factorial(k) << k).recip();
        out += &(b * &TracePolynomial::p_pow((n - k) as u32)).scale(&c);
    }
    Ok(out.scale(&rat(factorial(n - 1) << (n - 1))))
}

fn block_product(p: &SetPartition, f: impl Fn(usize) -> RLaurent) -> Result<RLaurent> {
    if p.is_crossing() {
        return Err(Error::Crossing("the isotropic product formula"));
    }
    Ok(p.blocks().iter().fold(RLaurent::one(), |a, b| a * f(b.len())))
}

pub fn isotropic(kind: &Isotropic) -> Result<IsoValue> {
    Ok(match kind {
        Isotropic::MPiCirc(p) => {
            cap("n", p.n(), MAX_ISOTROPIC)?;
            IsoValue::Laurent(block_product(p, rank1_power_iso)?)
        }
        Isotropic::MPiCentered(p) => {
            cap("n", p.n(), MAX_ISOTROPIC)?;
            IsoValue::Laurent(block_product(p, x_minus_i_bell)?)
        }
        Isotropic::XMinusIPower(n) => {
            cap("n", *n, MAX_ISOTROPIC)?;
            IsoValue::Laurent(x_minus_i_bell(*n))
        }
        Isotropic::MPlusI(n) => IsoValue::Laurent(m_plus(*n)?.eval_isotropic()),
        Isotropic::Rank1Power(n) => IsoValue::Poly(rank1_power(*n)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LimitKind {
    MpMoment,
    MpMomentIso,
    MpCenteredIso,
    SemicircleSigma,
    MpIntegral,
    ScIntegral,
}

impl std::str::FromStr for LimitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "MP_MOMENT" => Self::MpMoment,
            "MP_MOMENT_ISO" => Self::MpMomentIso,
            "MP_CENTERED_ISO" => Self::MpCenteredIso,
            "SEMICIRCLE_SIGMA" => Self::SemicircleSigma,
            "MP_INTEGRAL" => Self::MpIntegral,
            "SC_INTEGRAL" => Self::ScIntegral,
            _ => return Err(Error::Invalid(format!("unknown limit kind {s}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitArgs {
    pub n: usize,
    pub rho: BigRational,
    /// Normalized traces `τ_1, τ_2, …`.
    pub tau: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LimitValue {
    Exact(#[serde(serialize_with = "ser_rational")] BigRational),
    Approx { value: f64, abs_error: f64 },
}

fn ser_rational<S: serde::Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::tracepoly::rational_string(x))
}

impl LimitValue {
    pub fn value(&self) -> f64 {
        match self {
            LimitValue::Exact(x) => x.to_f64().unwrap_or(f64::NAN),
            LimitValue::Approx { value, .. } => *value,
        }
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitValue::Exact(x) if x.is_integer() => write!(f, "{}", x.numer()),
            LimitValue::Exact(x) => write!(f, "{}/{}", x.numer(), x.denom()),
            LimitValue::Approx { value, abs_error } => write!(f, "{value:.12} ± {abs_error:.1e}"),
        }
    }
}

fn tau_product(mu: &[usize], tau: &[BigRational]) -> BigRational {
    mu.iter().enumerate().skip(1).fold(BigRational::one(), |a, (i, &c)| a * pow(&tau[i - 1], c))
}

/// Marchenko–Pastur density with ratio `rho` (absolutely continuous part).
pub fn mp_density(x: f64, rho: f64) -> f64 {
    let (lo, hi) = mp_support(rho);
    if x <= lo || x >= hi || x <= 0.0 {
        return 0.0;
    }
    ((hi - x) * (x - lo)).sqrt() / (2.0 * std::f64::consts::PI * rho * x)
}

pub fn mp_support(rho: f64) -> (f64, f64) {
    let s = rho.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Semicircle density on `[-2, 2]`.
pub fn sc_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

const QUAD_TOL: f64 = 1e-11;

/// `∫ x^n` against the Marchenko–Pastur law, atom included, with `x = c + h cos φ`.
pub fn mp_integral(n: usize, rho: f64) -> (f64, f64) {
    let (lo, hi) = mp_support(rho);
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let f = |phi: f64| {
        let x = c + h * phi.cos();
        let s = h * phi.sin();
        let xn1 = if n == 0 { 1.0 / x } else { x.powi(n as i32 - 1) };
        xn1 * s * s / (2.0 * std::f64::consts::PI * rho)
    };
    let (v, e) = quad::integrate(f, 0.0, std::f64::consts::PI, QUAD_TOL);
    let atom = if n == 0 { (1.0 - 1.0 / rho).max(0.0) } else { 0.0 };
    (v + atom, e)
}

/// `∫ x^n` against the semicircle law, with `x = 2 cos φ`.
pub fn sc_integral(n: usize) -> (f64, f64) {
    let f = |phi: f64| {
        let s = phi.sin();
        (2.0 * phi.cos()).powi(n as i32) * 4.0 * s * s / (2.0 * std::f64::consts::PI)
    };
    quad::integrate(f, 0.0, std::f64::consts::PI, QUAD_TOL)
}

pub fn limits(kind: LimitKind, args: &LimitArgs) -> Result<LimitValue> {
    let n = args.n;
    cap("n", n, MAX_LIMIT)?;
    let rho = &args.rho;
    let needs_rho = !matches!(kind, LimitKind::SemicircleSigma | LimitKind::ScIntegral);
    if needs_rho && *rho <= BigRational::zero() {
        return Err(Error::Invalid("rho must be positive".into()));
    }
    let needs_tau = matches!(kind, LimitKind::MpMoment | LimitKind::SemicircleSigma);
    if needs_tau && args.tau.len() < n {
        return Err(Error::Invalid(format!("need {n} trace values, got {}", args.tau.len())));
    }
    Ok(match kind {
        LimitKind::MpMoment => LimitValue::Exact(if n == 0 {
            BigRational::one()
        } else {
            integer_partitions(n)
                .iter()
                .fold(BigRational::zero(), |a, t| a + pow(rho, t.blocks() - 1) * rat(kreweras(t)) * tau_product(&t.mu, &args.tau))
        }),
        LimitKind::MpMomentIso => LimitValue::Exact(if n == 0 {
            BigRational::one()
        } else {
            (0..n).fold(BigRational::zero(), |a, m| {
                let c = binomial(n as i64, m as i64) * binomial(n as i64 - 1, m as i64);
                a + pow(rho, m) * rat(c) / rat(m as i64 + 1)
            })
        }),
        LimitKind::MpCenteredIso => LimitValue::Exact(if n == 0 {
            BigRational::one()
        } else {
            (1..=n / 2).fold(BigRational::zero(), |a, m| a + pow(rho, n - m) * rat(riordan_nm(n, m)))
        }),
        LimitKind::SemicircleSigma => LimitValue::Exact(
            sigma_trace_table(n)?.iter().fold(BigRational::zero(), |a, t| a + rat(t.coeff) * tau_product(&t.mu, &args.tau)),
        ),
        LimitKind::MpIntegral => {
            let (value, abs_error) = mp_integral(n, rho.to_f64().unwrap_or(f64::NAN));
            LimitValue::Approx { value, abs_error }
        }
        LimitKind::ScIntegral => {
            let (value, abs_error) = sc_integral(n);
            LimitValue::Approx { value, abs_error }
        }
    })
}

/// `Σ_m ρ^{n−m} N_{n,m}`: the isotropic limit through Narayana numbers.
pub fn mp_narayana(n: usize, rho: &BigRational) -> BigRational {
    (1..=n).fold(BigRational::zero(), |a, m| a + pow(rho, n - m) * rat(narayana(n, m)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlphaRoute {
    /// Sum over non-crossing partitions by first-block size.
    PartitionSum,
    /// `α_{n+1}(1) = Σ u(m) α_n(m)` with compositions for `m ≥ 2`.
    Convolution,
    /// Same induction with `α_n(m)` from partial Bell polynomials.
    Bell,
    /// Coefficients of `Σ_n(P)` with `Tr(P^{1+i}) = u(i)`.
    Sigma,
}

/// Table `α_n(m)`, `0 ≤ m ≤ n ≤ n_max`; `u[i]` stands for `Tr(P^{1+i})`.
pub fn alpha_coeffs(n_max: usize, u: &[BigRational], route: AlphaRoute) -> Result<Vec<Vec<BigRational>>> {
    cap("n_max", n_max, MAX_ALPHA)?;
    if u.len() < n_max {
        return Err(Error::Invalid(format!("need {n_max} values of u, got {}", u.len())));
    }
    let mut t = vec![vec![BigRational::one()]];
    match route {
        AlphaRoute::PartitionSum => {
            for n in 1..=n_max {
                let mut row = vec![BigRational::zero(); n + 1];
                for p in enumerate(n, None, PartitionClass::Nc)? {
                    let mut x = pow(&u[0], n - p.len() + 1);
                    for b in &p.blocks()[1..] {
                        x *= &u[b.len()];
                    }
                    row[p.blocks()[0].len()] += x;
                }
                t.push(row);
            }
        }
        AlphaRoute::Convolution | AlphaRoute::Bell => {
            let mut first: Vec<BigRational> = vec![BigRational::zero(), u[0].clone()];
            for n in 1..=n_max {
                let row: Vec<BigRational> = if route == AlphaRoute::Convolution {
                    // comp[m][k]: sum over compositions of k into m parts of ∏ α_{k_i}(1)
                    let mut comp = vec![vec![BigRational::zero(); n + 1]; n + 1];
                    comp[0][0] = BigRational::one();
                    for m in 1..=n {
                        for k in m..=n {
                            let mut acc = BigRational::zero();
                            for j in 1..=k - (m - 1) {
                                acc += &first[j] * &comp[m - 1][k - j];
                            }
                            comp[m][k] = acc;
                        }
                    }
                    (0..=n).map(|m| comp[m][n].clone()).collect()
                } else {
                    let x: Vec<BigRational> = (1..=n).map(|j| rat(factorial(j)) * &first[j]).collect();
                    let b = bell_partial_table(n, &x);
                    (0..=n).map(|m| rat(factorial(m)) / rat(factorial(n)) * &b[n][m]).collect()
                };
                if n < n_max {
                    let next = (1..=n).fold(BigRational::zero(), |a, m| a + &u[m] * &row[m]);
                    first.push(next);
                }
                t.push(row);
            }
        }
        AlphaRoute::Sigma => {
            let table = sigma_table(n_max);
            for (n, s) in table.iter().enumerate().skip(1) {
                let powers = s.substitute_traces(|i| if i == 0 { BigRational::zero() } else { u[i - 1].clone() });
                t.push((0..=n).map(|m| powers.get(&(m as u32)).cloned().unwrap_or_else(BigRational::zero)).collect());
            }
        }
    }
    Ok(t)
}

/// Coefficient lookup helper: `Tr_v(P) P^w` in `t`.
pub fn coeff_of(t: &TracePolynomial, v: &[u32], w: u32) -> BigRational {
    t.coeff(&Key::new(v.to_vec(), w))
}

/// Catalan number as a rational, for the isotropic identities.
pub fn catalan_rational(n: usize) -> BigRational {
    rat(catalan(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specnum::{catalan_triangle, q, stirling1};

    fn tp(s: &str) -> TracePolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn m_plus_small() {
        assert_eq!(m_plus(1).unwrap(), tp("P^2 + Tr(P) P"));
        for n in 0..=6 {
            let a = m_plus_table(n, MPlusForm::Product).unwrap();
            let b = m_plus_table(n, MPlusForm::Gamma).unwrap();
            assert_eq!(a, b);
        }
        let caps = WickCaps::default();
        for n in 1..=2 {
            assert_eq!(m_plus(n).unwrap(), moment_class(2 * n, n, MomentClass::QPlus, true, &caps).unwrap());
        }
    }

    #[test]
    fn m_plus_isotropic_catalan() {
        for n in 0..=6 {
            let want = (0..n).fold(RLaurent::constant(catalan_rational(n)), |a, _| a * r_plus(1));
            assert_eq!(m_plus(n).unwrap().eval_isotropic(), want);
        }
    }

    #[test]
    fn sigma_routes_and_examples() {
        assert_eq!(sigma(1, Route::Recursion).unwrap(), tp("Tr(P) P"));
        assert_eq!(sigma(2, Route::Recursion).unwrap(), tp("Tr(P)^2 P^2 + Tr(P^2) Tr(P) P"));
        for n in 0..=6 {
            assert_eq!(sigma(n, Route::Recursion).unwrap(), sigma(n, Route::ClosedForm).unwrap(), "n={n}");
        }
        for n in 1..=6 {
            assert_eq!(sigma(n, Route::Recursion).unwrap().trace(), sigma_trace(n).unwrap());
        }
    }

    #[test]
    fn sigma_trace_examples() {
        assert_eq!(sigma_trace(3).unwrap(), tp("2 Tr(P)^3 Tr(P^3) + 3 Tr(P)^2 Tr(P^2)^2"));
        for n in 1..=10 {
            let total: u64 = sigma_trace_table(n).unwrap().iter().map(|t| t.coeff).sum();
            assert_eq!(BigInt::from(total), catalan(n));
        }
    }

    #[test]
    fn sigma_circ_routes() {
        assert_eq!(sigma_circ(1, 1, Route::Recursion).unwrap(), tp("P"));
        assert_eq!(sigma_circ(2, 1, Route::Recursion).unwrap(), tp("Tr(P) P"));
        for n in 1..=6 {
            assert_eq!(sigma_circ(n, n, Route::ClosedForm).unwrap(), TracePolynomial::p_pow(n as u32));
            for m in 1..=n {
                let a = sigma_circ(n, m, Route::Recursion).unwrap();
                let b = sigma_circ(n, m, Route::ClosedForm).unwrap();
                assert_eq!(a, b, "({n},{m})");
                let lead = a.trace().eval_isotropic();
                assert_eq!(lead, RLaurent::monomial((n - m + 1) as i32, rat(narayana(n, m))));
            }
        }
    }

    #[test]
    fn finite_n_examples() {
        let caps = WickCaps::default();
        let h2 = hn_moment(2, SampleCoefficient::Falling, &caps).unwrap();
        assert_eq!(h2.coeff(0), tp("P^2 + Tr(P) P"));
        assert_eq!(h2.terms().count(), 1);
        let h3 = hn_moment(3, SampleCoefficient::Falling, &caps).unwrap();
        let x3 = moment_partition(&SetPartition::single_block(3), true, &caps).unwrap();
        assert_eq!(h3.coeff(-1), x3);
        assert_eq!(h3.terms().count(), 1);
        let h4 = hn_moment(4, SampleCoefficient::Falling, &caps).unwrap();
        let gap = tp("20 P^4 + 12 Tr(P) P^3 + 3 Tr(P)^2 P^2 + 5 Tr(P^2) P^2 + Tr(P)^3 P + 3 Tr(P) Tr(P^2) P + 4 Tr(P^3) P");
        assert_eq!(h4.coeff(-2), gap);
        let p2 = pn_moment(2, false, SampleCoefficient::Falling, &caps).unwrap();
        assert_eq!(p2.coeff(0), tp("P^2"));
        assert_eq!(p2.coeff(-2), tp("Tr(P) P + P^2"));
        let b2 = pn_moment(2, false, SampleCoefficient::Binomial, &caps).unwrap();
        assert_ne!(b2, p2);
        assert_eq!(pn_moment(1, false, SampleCoefficient::Falling, &caps).unwrap().at(7).unwrap(), tp("P"));
    }

    #[test]
    fn differential_matches_expansion() {
        let caps = WickCaps::default();
        let h4 = hn_moment(4, SampleCoefficient::Falling, &caps).unwrap();
        for m in 1..=2 {
            assert_eq!(h4.coeff(2 * m as i32 - 4), differential(4, m, true, &caps).unwrap());
        }
        assert_eq!(stirling1(2, 1), BigInt::from(-1));
        let p3 = pn_moment(3, false, SampleCoefficient::Falling, &caps).unwrap();
        for m in 1..=3 {
            assert_eq!(p3.coeff(2 * m as i32 - 6), differential(3, m, false, &caps).unwrap());
        }
        assert_eq!(differential(3, 3, false, &caps).unwrap(), tp("P^3"));
    }

    #[test]
    fn inversion_examples() {
        let caps = WickCaps::default();
        assert_eq!(inversion(2, 1, &caps).unwrap(), tp("P^2 + Tr(P) P"));
        for (n, m) in [(2, 1), (3, 1), (4, 1), (4, 2)] {
            assert_eq!(inversion(n, m, &caps).unwrap(), m_nm(n, m, true, &caps).unwrap(), "({n},{m})");
        }
    }

    #[test]
    fn isotropic_forms() {
        for n in 0..=8 {
            assert_eq!(x_minus_i_bell(n), x_minus_i_binomial(n), "n={n}");
        }
        assert_eq!(x_minus_i_bell(2), r_plus(1));
        let IsoValue::Laurent(m2) = isotropic(&Isotropic::MPlusI(2)).unwrap() else { panic!() };
        assert_eq!(m2.to_string(), "2 + 4r + 2r^2");
        let caps = WickCaps::default();
        for n in 1..=5 {
            let wick = moment_partition(&SetPartition::single_block(n), false, &caps).unwrap();
            assert_eq!(rank1_power(n).unwrap(), wick, "n={n}");
        }
        for p in enumerate(4, None, PartitionClass::Nc).unwrap() {
            let IsoValue::Laurent(c) = isotropic(&Isotropic::MPiCirc(p.clone())).unwrap() else { panic!() };
            assert_eq!(c, moment_partition(&p, false, &caps).unwrap().eval_isotropic());
            let IsoValue::Laurent(z) = isotropic(&Isotropic::MPiCentered(p.clone())).unwrap() else { panic!() };
            assert_eq!(z, moment_partition(&p, true, &caps).unwrap().eval_isotropic(), "{p}");
        }
    }

    #[test]
    fn limit_examples() {
        let args = |n, rho: BigRational, tau: Vec<BigRational>| LimitArgs { n, rho, tau };
        let one = BigRational::one();
        assert_eq!(limits(LimitKind::MpMomentIso, &args(3, one.clone(), vec![])).unwrap(), LimitValue::Exact(rat(5)));
        let v = limits(LimitKind::MpIntegral, &args(3, one.clone(), vec![])).unwrap().value();
        assert!((v - 5.0).abs() < 1e-8, "{v}");
        let s = limits(LimitKind::SemicircleSigma, &args(2, one.clone(), vec![one.clone(), one.clone()])).unwrap();
        assert_eq!(s, LimitValue::Exact(rat(2)));
        let sc = limits(LimitKind::ScIntegral, &args(4, one.clone(), vec![])).unwrap().value();
        assert!((sc - 2.0).abs() < 1e-8);
        for rho in [q(1, 2), q(1, 1), q(2, 1)] {
            for n in 1..=6 {
                let iso = limits(LimitKind::MpMomentIso, &args(n, rho.clone(), vec![])).unwrap();
                assert_eq!(iso, LimitValue::Exact(mp_narayana(n, &rho)));
                let gen = limits(LimitKind::MpMoment, &args(n, rho.clone(), vec![one.clone(); n])).unwrap();
                assert_eq!(gen, iso);
                let quad = limits(LimitKind::MpIntegral, &args(n, rho.clone(), vec![])).unwrap().value();
                assert!((quad - iso.value()).abs() < 1e-8, "n={n} rho={rho}");
            }
            let m0 = mp_integral(0, rho.to_f64().unwrap()).0;
            assert!((m0 - 1.0).abs() < 1e-8);
        }
        let tau = vec![q(2, 1), q(5, 1)];
        let v = limits(LimitKind::MpMoment, &args(2, q(1, 3), tau)).unwrap();
        assert_eq!(v, LimitValue::Exact(q(5, 1) + q(4, 3)));
    }

    #[test]
    fn alpha_routes() {
        let u: Vec<BigRational> = (0..8).map(|i| q(i + 2, 3 - (i % 2))).collect();
        let a = alpha_coeffs(8, &u, AlphaRoute::PartitionSum).unwrap();
        for route in [AlphaRoute::Convolution, AlphaRoute::Bell, AlphaRoute::Sigma] {
            assert_eq!(alpha_coeffs(8, &u, route).unwrap(), a, "{route:?}");
        }
        let ones = vec![BigRational::one(); 9];
        let c = alpha_coeffs(9, &ones, AlphaRoute::Convolution).unwrap();
        for (n, row) in c.iter().enumerate() {
            assert_eq!(row[0], if n == 0 { one() } else { BigRational::zero() });
            for m in 1..=n {
                assert_eq!(row[m], rat(catalan_triangle(n, m)));
            }
            assert_eq!(row.iter().fold(BigRational::zero(), |s, x| s + x), catalan_rational(n));
        }
    }

    fn one() -> BigRational {
        BigRational::one()
    }
}
