//! Exact counting sequences and Bell polynomials.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::PartitionType;

/// Commutative ring with an embedding of the integers.
pub trait Ring: Clone + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn from_integer(n: &BigInt) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_integer(&BigInt::from(n))
    }
}

impl Ring for BigRational {
    fn from_integer(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }
}

impl Ring for BigInt {
    fn from_integer(n: &BigInt) -> Self {
        n.clone()
    }
}

impl Ring for f64 {
    fn from_integer(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn int(n: i64) -> BigInt {
    BigInt::from(n)
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |a, k| a * k)
}

pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Falling factorial `x (x-1) ... (x-m+1)`.
pub fn falling(x: i64, m: usize) -> BigInt {
    (0..m as i64).fold(BigInt::one(), |a, i| a * (x - i))
}

/// Signed Stirling numbers of the first kind.
pub fn stirling1(n: usize, m: usize) -> BigInt {
    stirling1_row(n).get(m).cloned().unwrap_or_default()
}

/// `s(n, 0..=n)`: coefficients of the falling factorial `(N)_n` in powers of `N`.
pub fn stirling1_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (j, c) in row.iter().enumerate() {
            next[j + 1] += c;
            next[j] -= c * k;
        }
        row = next;
    }
    row
}

pub fn stirling2(n: usize, m: usize) -> BigInt {
    let mut row = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (j, c) in row.iter().enumerate() {
            next[j] += c * j;
            next[j + 1] += c;
        }
        row = next;
    }
    row.get(m).cloned().unwrap_or_default()
}

pub fn bell(n: usize) -> BigInt {
    (0..=n).map(|m| stirling2(n, m)).sum()
}

pub fn catalan(n: usize) -> BigInt {
    binomial(2 * n as i64, n as i64) / (n + 1)
}

/// Non-crossing partitions of `[n]` with `m` blocks.
pub fn narayana(n: usize, m: usize) -> BigInt {
    if n == 0 {
        return if m == 0 { BigInt::one() } else { BigInt::zero() };
    }
    if m == 0 || m > n {
        return BigInt::zero();
    }
    let (n, m) = (n as i64, m as i64);
    binomial(n, m - 1) * binomial(n, m) / n
}

/// Non-crossing partitions of `[n]` with `m` blocks and no singleton.
pub fn riordan_nm(n: usize, m: usize) -> BigInt {
    if n == 0 {
        return if m == 0 { BigInt::one() } else { BigInt::zero() };
    }
    if m == 0 || 2 * m > n {
        return BigInt::zero();
    }
    let (n, m) = (n as i64, m as i64);
    binomial(n + 1, m) * binomial(n - 1 - m, m - 1) / (n + 1)
}

pub fn riordan(n: usize) -> BigInt {
    (0..=n).map(|m| riordan_nm(n, m)).sum()
}

/// Non-crossing partitions of a given block-size profile: `n!/((n+1-m)! ∏ mu_k!)`.
pub fn kreweras(t: &PartitionType) -> BigInt {
    let n = t.weight();
    let m = t.blocks();
    if n == 0 {
        return BigInt::one();
    }
    let denom = t.mu.iter().fold(factorial(n + 1 - m), |a, &c| a * factorial(c));
    factorial(n) / denom
}

/// Non-crossing partitions of `[n]` whose first block has `m` elements: `m/(2n-m)·C(2n-m, n)`.
pub fn catalan_triangle(n: usize, m: usize) -> BigInt {
    if n == 0 {
        return if m == 0 { BigInt::one() } else { BigInt::zero() };
    }
    if m == 0 || m > n {
        return BigInt::zero();
    }
    let (n, m) = (n as i64, m as i64);
    binomial(2 * n - m, n) * m / (2 * n - m)
}

/// `(2n)!/(2^n n!)`: the `2n`-th moment of a standard Gaussian.
pub fn gauss_even(n: usize) -> BigInt {
    factorial(2 * n) / (factorial(n) << n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CountKind {
    Stirling1,
    Stirling2,
    Bell,
    Catalan,
    Narayana,
    RiordanNm,
    RiordanN,
    Kreweras,
    CatalanTriangle,
    Pochhammer,
    GaussEven,
}

impl std::str::FromStr for CountKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "STIRLING1" => Self::Stirling1,
            "STIRLING2" => Self::Stirling2,
            "BELL" => Self::Bell,
            "CATALAN" => Self::Catalan,
            "NARAYANA" => Self::Narayana,
            "RIORDAN_NM" => Self::RiordanNm,
            "RIORDAN_N" | "RIORDAN" => Self::RiordanN,
            "KREWERAS" => Self::Kreweras,
            "CATALAN_TRIANGLE" => Self::CatalanTriangle,
            "POCHHAMMER" => Self::Pochhammer,
            "GAUSS_EVEN" => Self::GaussEven,
            _ => return Err(Error::Invalid(format!("unknown count kind {s}"))),
        })
    }
}

/// Uniform entry point. `KREWERAS` takes the block-size profile `mu[1..]`
/// (so `[0, 2]` means two blocks of size 2); `POCHHAMMER` takes `(x, m)`.
pub fn count(kind: CountKind, args: &[usize]) -> Result<BigInt> {
    let need = |k: usize| -> Result<()> {
        if args.len() != k {
            return Err(Error::Invalid(format!("{kind:?} takes {k} argument(s), got {}", args.len())));
        }
        Ok(())
    };
    let pair = |check: fn(usize, usize) -> bool| -> Result<(usize, usize)> {
        need(2)?;
        if !check(args[0], args[1]) {
            return Err(Error::Invalid(format!("{kind:?} index out of range: {args:?}")));
        }
        Ok((args[0], args[1]))
    };
    let le = |n: usize, m: usize| m <= n;
    Ok(match kind {
        CountKind::Stirling1 => {
            let (n, m) = pair(le)?;
            stirling1(n, m)
        }
        CountKind::Stirling2 => {
            let (n, m) = pair(le)?;
            stirling2(n, m)
        }
        CountKind::Narayana => {
            let (n, m) = pair(le)?;
            narayana(n, m)
        }
        CountKind::RiordanNm => {
            let (n, m) = pair(le)?;
            riordan_nm(n, m)
        }
        CountKind::CatalanTriangle => {
            let (n, m) = pair(le)?;
            catalan_triangle(n, m)
        }
        CountKind::Pochhammer => {
            let (x, m) = pair(|_, _| true)?;
            falling(x as i64, m)
        }
        CountKind::Bell => {
            need(1)?;
            bell(args[0])
        }
        CountKind::Catalan => {
            need(1)?;
            catalan(args[0])
        }
        CountKind::RiordanN => {
            need(1)?;
            riordan(args[0])
        }
        CountKind::GaussEven => {
            need(1)?;
            gauss_even(args[0])
        }
        CountKind::Kreweras => {
            let mut mu = vec![0];
            mu.extend_from_slice(args);
            kreweras(&PartitionType::from_mu(mu))
        }
    })
}

/// Table `t[n][k]` of partial Bell polynomials `B_{k,n}(x)` for `n ≤ nmax`; `x[0]` is `x_1`.
pub fn bell_partial_table<R: Ring>(nmax: usize, x: &[R]) -> Vec<Vec<R>> {
    assert!(x.len() >= nmax, "need {nmax} Bell arguments, got {}", x.len());
    let mut t: Vec<Vec<R>> = vec![vec![R::one()]];
    for n in 1..=nmax {
        let mut row = vec![R::zero(); n + 1];
        for (k, slot) in row.iter_mut().enumerate().skip(1) {
            let mut acc = R::zero();
            for i in 1..=n + 1 - k {
                if k - 1 < t[n - i].len() {
                    let prev = &t[n - i][k - 1];
                    if prev.is_zero() || x[i - 1].is_zero() {
                        continue;
                    }
                    let c = R::from_integer(&binomial(n as i64 - 1, i as i64 - 1));
                    acc = acc + c * x[i - 1].clone() * prev.clone();
                }
            }
            *slot = acc;
        }
        t.push(row);
    }
    t
}

/// Partial Bell polynomial with `k` blocks over `n` points.
pub fn bell_partial<R: Ring>(k: usize, n: usize, x: &[R]) -> R {
    if k > n {
        return R::zero();
    }
    bell_partial_table(n, x)[n][k].clone()
}

/// Complete Bell polynomials `B_0..=B_nmax`.
pub fn bell_complete_all<R: Ring>(nmax: usize, x: &[R]) -> Vec<R> {
    assert!(x.len() >= nmax, "need {nmax} Bell arguments, got {}", x.len());
    let mut b = vec![R::one()];
    for n in 0..nmax {
        let mut acc = R::zero();
        for i in 0..=n {
            if x[i].is_zero() || b[n - i].is_zero() {
                continue;
            }
            acc = acc + R::from_integer(&binomial(n as i64, i as i64)) * x[i].clone() * b[n - i].clone();
        }
        b.push(acc);
    }
    b
}

pub fn bell_complete<R: Ring>(n: usize, x: &[R]) -> R {
    bell_complete_all(n, x).pop().unwrap()
}

/// Recovers `x_1..x_n` from `y_k = B_k(x)`.
pub fn bell_inverse<R: Ring>(y: &[R]) -> Vec<R> {
    let n = y.len();
    let t = bell_partial_table(n, y);
    (1..=n)
        .map(|m| {
            let mut acc = R::zero();
            for k in 1..=m {
                let c = factorial(k - 1) * if k % 2 == 1 { 1 } else { -1 };
                acc = acc + R::from_integer(&c) * t[m][k].clone();
            }
            acc
        })
        .collect()
}

/// Evaluates both growth bounds on Bell polynomials whose arguments vanish below
/// index `p` and satisfy `|x_k| ≤ k! ρ β^k`. `q` is ignored when `p = 1`.
/// When every `x_k ≥ 0` the positivity and lower bound are also required.
pub fn growth_bound_check(p: usize, rho: &BigRational, beta: &BigRational, x: &[BigRational], n: usize, q: usize) -> Result<bool> {
    if p == 0 || n == 0 {
        return Err(Error::Invalid("p and n must be at least 1".into()));
    }
    let check_q = p > 1;
    if check_q && (q == 0 || q >= p) {
        return Err(Error::Invalid(format!("need 1 ≤ q < p, got q = {q}, p = {p}")));
    }
    let top = p * n + if check_q { q } else { 0 };
    if x.len() < top {
        return Err(Error::Invalid(format!("need {top} arguments, got {}", x.len())));
    }
    if rho.is_negative() || beta.is_negative() {
        return Err(Error::Hypothesis("ρ and β must be non-negative".into()));
    }
    for (i, xi) in x.iter().enumerate().take(top) {
        let k = i + 1;
        if k < p && !xi.is_zero() {
            return Err(Error::Hypothesis(format!("x_{k} must vanish below index {p}")));
        }
        let bound = BigRational::from_integer(factorial(k)) * rho * pow(beta, k);
        if k >= p && xi.abs() > bound {
            return Err(Error::Hypothesis(format!("|x_{k}| exceeds k!ρβ^k")));
        }
    }
    let b = bell_complete_all(top, &x[..top]);
    let geom = |kmax: usize| -> BigRational {
        let ratio = rho / BigRational::from_integer(BigInt::one() << (p - 1));
        (1..=kmax).fold(BigRational::zero(), |a, k| a + pow(&ratio, k) / BigRational::from_integer(factorial(k)))
    };
    let two_beta = beta * BigRational::from_integer(int(2));
    let xp_term = pow(&(&x[p - 1] / BigRational::from_integer(factorial(p))), n) * BigRational::from_integer(factorial(n * p))
        / BigRational::from_integer(factorial(n));
    let half = BigRational::new(int(1), int(2));
    let rhs1 = BigRational::from_integer(factorial(n * p)) * &half * pow(&two_beta, p * n) * geom(n - 1);
    let mut ok = (&b[p * n] - &xp_term).abs() <= rhs1;
    if check_q {
        let m = p * n + q;
        let rhs2 = BigRational::from_integer(factorial(m)) * &half * pow(&two_beta, m) * geom(n);
        ok &= b[m].abs() <= rhs2;
    }
    if x[..top].iter().all(|v| !v.is_negative()) {
        ok &= b.iter().all(|v| !v.is_negative()) && b[p * n] >= xp_term;
    }
    Ok(ok)
}

pub(crate) fn pow<R: Ring>(x: &R, k: usize) -> R {
    (0..k).fold(R::one(), |a, _| a * x.clone())
}

/// Rational `a/b` shorthand.
pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(int(a), int(b))
}

pub fn is_integer(x: &BigRational) -> bool {
    x.denom().is_one()
}

pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}
