//! Exact trace polynomials `Σ c · ∏ Tr(P^i)^{v_i} · P^w` and Laurent polynomials in the dimension `r`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::scalar::Real;
use crate::specnum::Ring;

/// Monomial key: trace exponents `v` (index 0 is the dimension `r = Tr(P^0)`, trailing
/// zeros trimmed) and matrix power `w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Key {
    pub v: Vec<u32>,
    pub w: u32,
}

impl Key {
    pub fn new(mut v: Vec<u32>, w: u32) -> Self {
        while v.last() == Some(&0) {
            v.pop();
        }
        Key { v, w }
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.v.get(i).copied().unwrap_or(0)
    }

    /// Degree in `P`.
    pub fn degree(&self) -> u32 {
        self.v.iter().enumerate().map(|(i, &e)| i as u32 * e).sum::<u32>() + self.w
    }

    /// Number of trace factors, including powers of `r`.
    pub fn traces(&self) -> u32 {
        self.v.iter().sum()
    }

    fn with_trace(&self, i: usize, by: u32) -> Key {
        let mut v = self.v.clone();
        if v.len() <= i {
            v.resize(i + 1, 0);
        }
        v[i] += by;
        Key::new(v, self.w)
    }

    fn times(&self, other: &Key) -> Key {
        let len = self.v.len().max(other.v.len());
        let v = (0..len).map(|i| self.exp(i) + other.exp(i)).collect();
        Key::new(v, self.w + other.w)
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        other.w.cmp(&self.w).then_with(|| self.v.cmp(&other.v))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Linear combination of trace monomials with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct TracePolynomial {
    terms: BTreeMap<Key, BigRational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GammaOp {
    /// `Q ↦ P Q P + Tr(P Q) P`
    Gamma,
    /// `Q ↦ 2 P Q P`
    Omega,
    /// `Q ↦ Tr(P Q) P`
    GammaBar,
    /// `Q ↦ E[𝕏 Q 𝕏] = 2 P Q P + Tr(P Q) P`
    GammaUncentered,
}

impl TracePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::monomial(BigRational::one(), vec![], 0)
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, vec![], 0)
    }

    pub fn monomial(c: BigRational, v: Vec<u32>, w: u32) -> Self {
        let mut t = Self::zero();
        t.add_term(Key::new(v, w), c);
        t
    }

    /// `P^w`.
    pub fn p_pow(w: u32) -> Self {
        Self::monomial(BigRational::one(), vec![], w)
    }

    /// `Tr(P^i)` as a scalar; `i = 0` is `r`.
    pub fn tr(i: usize) -> Self {
        Self::identity().times_trace(i)
    }

    pub fn dim() -> Self {
        Self::tr(0)
    }

    pub fn add_term(&mut self, key: Key, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &Key) -> BigRational {
        self.terms.get(key).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        TracePolynomial { terms: self.terms.iter().map(|(k, x)| (k.clone(), x * c)).collect() }
    }

    fn map_keys(&self, f: impl Fn(&Key) -> Key) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(f(k), c.clone());
        }
        out
    }

    pub fn mul_p(&self) -> Self {
        self.map_keys(|k| Key { v: k.v.clone(), w: k.w + 1 })
    }

    pub fn times_trace(&self, i: usize) -> Self {
        self.map_keys(|k| k.with_trace(i, 1))
    }

    /// Matrix trace: `P^w ↦ Tr(P^w)`, with `Tr(I) = r`.
    pub fn trace(&self) -> Self {
        self.map_keys(|k| Key { w: 0, ..k.with_trace(k.w as usize, 1) })
    }

    pub fn gamma(&self, op: GammaOp) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let sandwich = Key { v: k.v.clone(), w: k.w + 2 };
            let bar = Key { w: 1, ..k.with_trace(k.w as usize + 1, 1) };
            match op {
                GammaOp::Omega => out.add_term(sandwich, c * &two),
                GammaOp::GammaBar => out.add_term(bar, c.clone()),
                GammaOp::Gamma => {
                    out.add_term(sandwich, c.clone());
                    out.add_term(bar, c.clone());
                }
                GammaOp::GammaUncentered => {
                    out.add_term(sandwich, c * &two);
                    out.add_term(bar, c.clone());
                }
            }
        }
        out
    }

    /// Removes one factor `Tr(P^i)` from every term; `None` if some term lacks it.
    pub fn div_trace(&self, i: usize) -> Option<Self> {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            if k.exp(i) == 0 {
                return None;
            }
            let mut v = k.v.clone();
            v[i] -= 1;
            out.add_term(Key::new(v, k.w), c.clone());
        }
        Some(out)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Key::degree).max().unwrap_or(0)
    }

    /// Highest matrix power `w`.
    pub fn max_power(&self) -> u32 {
        self.terms.keys().map(|k| k.w).max().unwrap_or(0)
    }

    /// Highest trace index `i` with a factor `Tr(P^i)`.
    pub fn max_trace_index(&self) -> usize {
        self.terms.keys().map(|k| k.v.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Membership in the space of degree ≤ `p` with at most (`strict`: exactly) `q` trace factors per term.
    pub fn class_check(&self, p: u32, q: u32, strict: bool) -> bool {
        self.terms.keys().all(|k| k.degree() <= p && if strict { k.traces() == q } else { k.traces() <= q })
    }

    /// Numeric value at a concrete symmetric `P`.
    pub fn eval_numeric<T: Real>(&self, p: &SymMatrix<T>) -> Result<SymMatrix<T>> {
        let r = p.dim();
        if r == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        let wmax = self.max_power().max(self.max_trace_index() as u32) as usize;
        let mut powers = vec![Matrix::identity(r)];
        for k in 1..=wmax {
            powers.push(powers[k - 1].matmul(p.matrix()));
        }
        let traces: Vec<T> = powers.iter().map(Matrix::trace).collect();
        let mut out = Matrix::zeros(r);
        for (k, c) in &self.terms {
            let mut s = T::of(c.to_f64().unwrap_or(f64::NAN));
            for (i, &e) in k.v.iter().enumerate() {
                s *= traces[i].powi(e as i32);
            }
            out = &out + &powers[k.w as usize].scale(s);
        }
        Ok(SymMatrix::from_symmetrized(&out))
    }

    /// Value at `P = I_r` as the Laurent polynomial multiplying `I`.
    pub fn eval_isotropic(&self) -> RLaurent {
        let mut out = RLaurent::zero();
        for (k, c) in &self.terms {
            out.add_term(k.traces() as i32, c.clone());
        }
        out
    }

    /// Replaces each `Tr(P^i)` by `value(i)`, leaving a rational combination of powers `P^w`.
    pub fn substitute_traces(&self, value: impl Fn(usize) -> BigRational) -> BTreeMap<u32, BigRational> {
        let mut out: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut x = c.clone();
            for (i, &e) in k.v.iter().enumerate() {
                for _ in 0..e {
                    x *= value(i);
                }
            }
            *out.entry(k.w).or_insert_with(BigRational::zero) += x;
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

fn fmt_coeff(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_monomial(k: &Key) -> Vec<String> {
    let mut parts = Vec::new();
    for (i, &e) in k.v.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let base = match i {
            0 => "r".to_string(),
            1 => "Tr(P)".to_string(),
            _ => format!("Tr(P^{i})"),
        };
        parts.push(if e == 1 { base } else { format!("{base}^{e}") });
    }
    match k.w {
        0 => {}
        1 => parts.push("P".into()),
        w => parts.push(format!("P^{w}")),
    }
    parts
}

impl fmt::Display for TracePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (j, (k, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (j, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut parts = fmt_monomial(k);
            if !a.is_one() || parts.is_empty() {
                parts.insert(0, fmt_coeff(&a));
            }
            write!(f, "{}", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Parser for the pretty format, extended with `*`, `(...)` and `[...]` grouping.
struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, what: &str) -> Error {
        Error::Invalid(format!("trace polynomial parse error at byte {}: {what}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn uint(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(txt.parse().unwrap())
    }

    fn small(&mut self) -> Result<u32> {
        self.uint()?.to_u32().ok_or_else(|| self.err("exponent too large"))
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.eat("^") {
            self.small()
        } else {
            Ok(1)
        }
    }

    fn expr(&mut self) -> Result<TracePolynomial> {
        let mut acc = if self.eat("-") { -self.term()? } else { self.term()? };
        loop {
            if self.eat("+") {
                acc = acc + self.term()?;
            } else if self.eat("-") {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<TracePolynomial> {
        let mut acc = self.factor()?;
        loop {
            self.eat("*");
            match self.peek() {
                Some(b'0'..=b'9' | b'r' | b'T' | b'P' | b'I' | b'(' | b'[') => acc = acc * self.factor()?,
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<TracePolynomial> {
        match self.peek() {
            Some(b'0'..=b'9') => {
                let num = self.uint()?;
                let den = if self.eat("/") { self.uint()? } else { BigInt::one() };
                if den.is_zero() {
                    return Err(self.err("zero denominator"));
                }
                Ok(TracePolynomial::constant(BigRational::new(num, den)))
            }
            Some(b'(') | Some(b'[') => {
                let close = if self.eat("(") {
                    ")"
                } else {
                    self.eat("[");
                    "]"
                };
                let inner = self.expr()?;
                if !self.eat(close) {
                    return Err(self.err("unbalanced bracket"));
                }
                let e = self.exponent()?;
                Ok((0..e).fold(TracePolynomial::identity(), |a, _| a * inner.clone()))
            }
            _ if self.eat("Tr(P") => {
                let i = self.exponent()? as usize;
                if !self.eat(")") {
                    return Err(self.err("expected ')'"));
                }
                let e = self.exponent()?;
                Ok(TracePolynomial::monomial(BigRational::one(), trace_vec(i, e), 0))
            }
            _ if self.eat("r") => {
                let e = self.exponent()?;
                Ok(TracePolynomial::monomial(BigRational::one(), vec![e], 0))
            }
            _ if self.eat("P") => Ok(TracePolynomial::p_pow(self.exponent()?)),
            _ if self.eat("I") => Ok(TracePolynomial::identity()),
            _ => Err(self.err("unexpected token")),
        }
    }
}

fn trace_vec(i: usize, e: u32) -> Vec<u32> {
    let mut v = vec![0; i + 1];
    v[i] = e;
    v
}

impl FromStr for TracePolynomial {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let out = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(out)
    }
}

impl Add<&TracePolynomial> for &TracePolynomial {
    type Output = TracePolynomial;
    fn add(self, rhs: &TracePolynomial) -> TracePolynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&TracePolynomial> for TracePolynomial {
    fn add_assign(&mut self, rhs: &TracePolynomial) {
        for (k, c) in &rhs.terms {
            self.add_term(k.clone(), c.clone());
        }
    }
}

impl Sub<&TracePolynomial> for &TracePolynomial {
    type Output = TracePolynomial;
    fn sub(self, rhs: &TracePolynomial) -> TracePolynomial {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }
}

impl Mul<&TracePolynomial> for &TracePolynomial {
    type Output = TracePolynomial;
    fn mul(self, rhs: &TracePolynomial) -> TracePolynomial {
        let mut out = TracePolynomial::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &rhs.terms {
                out.add_term(k1.times(k2), c1 * c2);
            }
        }
        out
    }
}

impl Add for TracePolynomial {
    type Output = TracePolynomial;
    fn add(mut self, rhs: TracePolynomial) -> TracePolynomial {
        self += &rhs;
        self
    }
}

impl Sub for TracePolynomial {
    type Output = TracePolynomial;
    fn sub(self, rhs: TracePolynomial) -> TracePolynomial {
        &self - &rhs
    }
}

impl Mul for TracePolynomial {
    type Output = TracePolynomial;
    fn mul(self, rhs: TracePolynomial) -> TracePolynomial {
        &self * &rhs
    }
}

impl Neg for TracePolynomial {
    type Output = TracePolynomial;
    fn neg(self) -> TracePolynomial {
        TracePolynomial { terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect() }
    }
}

impl Zero for TracePolynomial {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for TracePolynomial {
    fn one() -> Self {
        Self::identity()
    }
}

impl Ring for TracePolynomial {
    fn from_integer(n: &BigInt) -> Self {
        Self::constant(BigRational::from_integer(n.clone()))
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    c: String,
    v: BTreeMap<u32, u32>,
    w: u32,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    terms: Vec<TermJson>,
}

pub(crate) fn rational_string(c: &BigRational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Invalid(format!("bad rational {s:?}"));
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

impl Serialize for TracePolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| TermJson {
                c: rational_string(c),
                v: k.v.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i as u32, e)).collect(),
                w: k.w,
            })
            .collect();
        PolyJson { terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TracePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolyJson::deserialize(d)?;
        let mut out = TracePolynomial::zero();
        for t in j.terms {
            let c = parse_rational(&t.c).map_err(serde::de::Error::custom)?;
            let len = t.v.keys().max().map_or(0, |&m| m as usize + 1);
            let mut v = vec![0; len];
            for (i, e) in t.v {
                v[i as usize] = e;
            }
            out.add_term(Key::new(v, t.w), c);
        }
        Ok(out)
    }
}

/// Laurent polynomial in the dimension symbol `r`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct RLaurent {
    terms: BTreeMap<i32, BigRational>,
}

impl RLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(power: i32, c: BigRational) -> Self {
        let mut out = Self::zero();
        out.add_term(power, c);
        out
    }

    /// The symbol `r` itself.
    pub fn r() -> Self {
        Self::monomial(1, BigRational::one())
    }

    pub fn add_term(&mut self, power: i32, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(power).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&power);
        }
    }

    pub fn coeff(&self, power: i32) -> BigRational {
        self.terms.get(&power).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i32, &BigRational)> {
        self.terms.iter()
    }

    /// Multiplies by `r^k`.
    pub fn shift(&self, k: i32) -> Self {
        RLaurent { terms: self.terms.iter().map(|(p, c)| (p + k, c.clone())).collect() }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (p, x) in &self.terms {
            out.add_term(*p, x * c);
        }
        out
    }

    pub fn max_power(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn eval(&self, r: &BigRational) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |a, (p, c)| a + c * pow_i(r, *p))
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        self.terms.iter().map(|(p, c)| c.to_f64().unwrap_or(f64::NAN) * r.powi(*p)).sum()
    }
}

fn pow_i(x: &BigRational, p: i32) -> BigRational {
    let b = (0..p.unsigned_abs()).fold(BigRational::one(), |a, _| a * x);
    if p < 0 {
        b.recip()
    } else {
        b
    }
}

impl fmt::Display for RLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (j, (p, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (j, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let sym = match *p {
                0 => String::new(),
                1 => "r".into(),
                p => format!("r^{p}"),
            };
            let coeff = if a.is_integer() { a.numer().to_string() } else { format!("({}/{})", a.numer(), a.denom()) };
            match (a.is_one(), sym.is_empty()) {
                (_, true) => write!(f, "{coeff}")?,
                (true, false) => write!(f, "{sym}")?,
                (false, false) => write!(f, "{coeff}{sym}")?,
            }
        }
        Ok(())
    }
}

impl Add for RLaurent {
    type Output = RLaurent;
    fn add(mut self, rhs: RLaurent) -> RLaurent {
        for (p, c) in rhs.terms {
            self.add_term(p, c);
        }
        self
    }
}

impl Sub for RLaurent {
    type Output = RLaurent;
    fn sub(self, rhs: RLaurent) -> RLaurent {
        self + (-rhs)
    }
}

impl Mul for RLaurent {
    type Output = RLaurent;
    fn mul(self, rhs: RLaurent) -> RLaurent {
        let mut out = RLaurent::zero();
        for (p1, c1) in &self.terms {
            for (p2, c2) in &rhs.terms {
                out.add_term(p1 + p2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for RLaurent {
    type Output = RLaurent;
    fn neg(self) -> RLaurent {
        RLaurent { terms: self.terms.into_iter().map(|(p, c)| (p, -c)).collect() }
    }
}

impl Zero for RLaurent {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for RLaurent {
    fn one() -> Self {
        Self::constant(BigRational::one())
    }
}

impl Ring for RLaurent {
    fn from_integer(n: &BigInt) -> Self {
        Self::constant(BigRational::from_integer(n.clone()))
    }
}

impl Serialize for RLaurent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<i32, String> = self.terms.iter().map(|(p, c)| (*p, rational_string(c))).collect();
        m.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specnum::q;

    fn tp(s: &str) -> TracePolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        let a = tp("P^2 + Tr(P) P");
        assert_eq!(&a * &TracePolynomial::identity(), a);
        let s1 = tp("Tr(P) P");
        assert_eq!(&s1 * &s1, tp("Tr(P)^2 P^2"));
        let s2 = tp("Tr(P)^2 P^2 + Tr(P^2) Tr(P) P");
        assert_eq!(&s2 - &tp("Tr(P^2) Tr(P) P"), &s1 * &s1);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(tp("P^2").trace(), tp("Tr(P^2)"));
        assert_eq!(tp("Tr(P) P").trace(), tp("Tr(P)^2"));
        assert_eq!(TracePolynomial::identity().trace(), tp("r"));
        assert_eq!(tp("P").mul_p(), tp("P^2"));
    }

    #[test]
    fn gamma_examples() {
        let i = TracePolynomial::identity();
        let g = i.gamma(GammaOp::Gamma);
        assert_eq!(g, tp("P^2 + Tr(P) P"));
        assert_eq!(g.gamma(GammaOp::Gamma), tp("P^4 + Tr(P) P^3 + [Tr(P^3) + Tr(P) Tr(P^2)] P"));
        assert_eq!(g.eval_isotropic(), RLaurent::r() + RLaurent::one());
        let q1 = tp("3 Tr(P) P^2 - 1/2 P");
        let lhs = q1.gamma(GammaOp::Gamma);
        let rhs = &q1.gamma(GammaOp::Omega).scale(&q(1, 2)) + &q1.gamma(GammaOp::GammaBar);
        assert_eq!(lhs, rhs);
        assert_eq!(q1.gamma(GammaOp::GammaUncentered), &lhs + &q1.mul_p().mul_p());
    }

    #[test]
    fn numeric_examples() {
        let i2 = SymMatrix::<f64>::identity(2);
        let v = tp("Tr(P) P").eval_numeric(&i2).unwrap();
        assert_eq!(v.matrix(), &Matrix::scalar(2, 2.0));
        let p = SymMatrix::diag(&[1.0, 2.0]);
        let s2 = tp("Tr(P)^2 P^2 + Tr(P^2) Tr(P) P").eval_numeric(&p).unwrap();
        assert_eq!(s2.matrix(), &Matrix::diag(&[9.0 + 15.0, 36.0 + 30.0]));
        let h2 = tp("P^2 + Tr(P) P").eval_numeric(&SymMatrix::<f64>::identity(4)).unwrap();
        assert!((h2.trace() / 16.0 - 1.25).abs() < 1e-15);
    }

    #[test]
    fn class_examples() {
        let h4 = tp("5 P^4 + 3 Tr(P) P^3 + [Tr(P^2) + Tr(P)^2] P^2 + [Tr(P^3) + Tr(P) Tr(P^2)] P");
        assert!(h4.class_check(4, 2, false));
        assert!(!h4.class_check(4, 1, false));
        let rest = &h4 - &tp("Tr(P)^2 P^2 + Tr(P) Tr(P^2) P");
        assert!(rest.class_check(4, 1, false));
        assert!(tp("Tr(P) P").class_check(2, 1, true));
    }

    #[test]
    fn pretty_and_json() {
        let p = tp("3 Tr(P) P^3 + 5 P^4 + Tr(P^2) P^2 - 1/2 r^2 + Tr(P)^2 P^2");
        assert_eq!(p.to_string(), "5 P^4 + 3 Tr(P) P^3 + Tr(P^2) P^2 + Tr(P)^2 P^2 - 1/2 r^2");
        assert_eq!(tp(&p.to_string()), p);
        let j = serde_json::to_string(&tp("2 Tr(P) P - r")).unwrap();
        assert_eq!(j, r#"{"terms":[{"c":"2/1","v":{"1":1},"w":1},{"c":"-1/1","v":{"0":1},"w":0}]}"#);
        let back: TracePolynomial = serde_json::from_str(&j).unwrap();
        assert_eq!(back, tp("2 Tr(P) P - r"));
        assert_eq!(TracePolynomial::zero().to_string(), "0");
        assert!("Tr(P".parse::<TracePolynomial>().is_err());
    }

    #[test]
    fn laurent_display() {
        let x = RLaurent::one() + RLaurent::r();
        let sq = (x.clone() * x).scale(&q(2, 1));
        assert_eq!(sq.to_string(), "2 + 4r + 2r^2");
        let y = RLaurent::one() - RLaurent::monomial(-1, q(1, 1));
        assert_eq!(y.to_string(), "-r^-1 + 1");
    }

    #[test]
    fn division_by_trace() {
        let a = tp("Tr(P^2) Tr(P) P + Tr(P^2) P^3");
        assert_eq!(a.div_trace(2).unwrap(), tp("Tr(P) P + P^3"));
        assert!(a.div_trace(1).is_none());
    }
}
