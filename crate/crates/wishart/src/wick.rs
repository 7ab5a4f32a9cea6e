//! Isserlis/Wick contraction engine: exact moments of products of rank-one
//! Wishart factors `𝕏_l = X_l X_l'` with `X_l ~ N(0, P)` independent across labels.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{cap, Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::partitions::{enumerate, PartitionClass, SetPartition};
use crate::scalar::Real;
use crate::tracepoly::{Key, TracePolynomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Item {
    /// `P^power`; power 0 is the identity.
    Fixed(u32),
    /// One rank-one factor with the given label.
    Occ(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GaussianWord {
    pub items: Vec<Item>,
}

impl GaussianWord {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        if items.iter().any(|i| matches!(i, Item::Occ(0))) {
            return Err(Error::Invalid("labels must be positive".into()));
        }
        Ok(GaussianWord { items })
    }

    /// The word `𝕏_{α(1)} ⋯ 𝕏_{α(n)}` of a partition.
    pub fn of_partition(p: &SetPartition) -> Self {
        GaussianWord { items: p.alpha().into_iter().map(|l| Item::Occ(l as u32)).collect() }
    }

    /// Splits into the fixed powers between occurrences (`k+1` of them) and the `k` labels.
    pub fn normalize(&self) -> (Vec<u32>, Vec<u32>) {
        let mut fixed = vec![0];
        let mut labels = Vec::new();
        for it in &self.items {
            match *it {
                Item::Fixed(p) => *fixed.last_mut().unwrap() += p,
                Item::Occ(l) => {
                    labels.push(l);
                    fixed.push(0);
                }
            }
        }
        (fixed, labels)
    }

    pub fn occurrences(&self) -> usize {
        self.items.iter().filter(|i| matches!(i, Item::Occ(_))).count()
    }
}

/// Perfect matching of Gaussian slots. Occurrence `j` (0-based) owns the ket slot `2j`
/// (the column `X`) and the bra slot `2j+1` (the row `X'`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
}

impl Pairing {
    fn partner(&self, slots: usize) -> Result<Vec<usize>> {
        let mut partner = vec![usize::MAX; slots];
        for &(a, b) in &self.pairs {
            if a >= slots || b >= slots || a == b || partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(Error::Invalid("pairing is not a perfect matching of the slots".into()));
            }
            partner[a] = b;
            partner[b] = a;
        }
        if partner.contains(&usize::MAX) {
            return Err(Error::Invalid("pairing leaves a slot unmatched".into()));
        }
        Ok(partner)
    }
}

/// One factor along a contraction walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// The `index`-th fixed block, transposed when walked right-to-left.
    Fixed { index: usize, transposed: bool },
    /// A covariance `P` inserted by a matched pair.
    Cov,
}

/// Open path from the left end to the right end plus closed loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contraction {
    pub path: Vec<Step>,
    pub loops: Vec<Vec<Step>>,
}

/// Walks the half-edge structure of a matched word with `k` occurrences.
pub fn walk(k: usize, partner: &[usize]) -> Contraction {
    let slots = 2 * k;
    let mut seen = vec![false; slots];
    // From the far side of a matched pair at slot t, the fixed edge leading onward.
    let onward = |t: usize| -> (Step, Option<usize>) {
        let occ = t / 2;
        if t.is_multiple_of(2) {
            let next = if occ == 0 { None } else { Some(t - 1) };
            (Step::Fixed { index: occ, transposed: true }, next)
        } else {
            let next = if occ + 1 == k { None } else { Some(t + 1) };
            (Step::Fixed { index: occ + 1, transposed: false }, next)
        }
    };
    let mut path = vec![Step::Fixed { index: 0, transposed: false }];
    let mut at = if k == 0 { None } else { Some(0) };
    while let Some(s) = at {
        seen[s] = true;
        let t = partner[s];
        seen[t] = true;
        path.push(Step::Cov);
        let (step, next) = onward(t);
        path.push(step);
        at = next;
    }
    let mut loops = Vec::new();
    for start in 0..slots {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut s = start;
        loop {
            seen[s] = true;
            let t = partner[s];
            seen[t] = true;
            cycle.push(Step::Cov);
            let (step, next) = onward(t);
            cycle.push(step);
            s = next.expect("loops cannot reach an end of the word");
            if s == start {
                break;
            }
        }
        loops.push(cycle);
    }
    Contraction { path, loops }
}

fn power_of(steps: &[Step], fixed: &[u32]) -> u32 {
    steps
        .iter()
        .map(|s| match *s {
            Step::Cov => 1,
            Step::Fixed { index, .. } => fixed[index],
        })
        .sum()
}

fn contract_key(fixed: &[u32], partner: &[usize]) -> Key {
    let c = walk(fixed.len() - 1, partner);
    let mut v: Vec<u32> = Vec::new();
    for l in &c.loops {
        let p = power_of(l, fixed) as usize;
        if v.len() <= p {
            v.resize(p + 1, 0);
        }
        v[p] += 1;
    }
    Key::new(v, power_of(&c.path, fixed))
}

/// Symbolic value of one Wick term: a trace monomial with coefficient 1.
pub fn contract(word: &GaussianWord, pairing: &Pairing) -> Result<TracePolynomial> {
    let (fixed, labels) = word.normalize();
    let partner = pairing.partner(2 * labels.len())?;
    for (s, &t) in partner.iter().enumerate() {
        if labels[s / 2] != labels[t / 2] {
            return Err(Error::Invalid("pairing joins slots of different labels".into()));
        }
    }
    let key = contract_key(&fixed, &partner);
    let mut out = TracePolynomial::zero();
    out.add_term(key, BigRational::one());
    Ok(out)
}

/// Numeric value of one Wick term with general (possibly non-symmetric) fixed blocks.
pub fn contract_numeric<T: Real>(fixed: &[Matrix<T>], p: &Matrix<T>, partner: &[usize]) -> Matrix<T> {
    let c = walk(fixed.len() - 1, partner);
    let product = |steps: &[Step]| -> Matrix<T> {
        let mut m = Matrix::identity(p.dim());
        for s in steps {
            m = match *s {
                Step::Cov => m.matmul(p),
                Step::Fixed { index, transposed: false } => m.matmul(&fixed[index]),
                Step::Fixed { index, transposed: true } => m.matmul(&fixed[index].transpose()),
            };
        }
        m
    };
    let scalar: T = c.loops.iter().map(|l| product(l).trace()).fold(T::one(), |a, b| a * b);
    product(&c.path).scale(scalar)
}

/// Same-label perfect matchings, smallest unmatched slot first.
pub fn pairings(labels: &[u32]) -> Vec<Vec<usize>> {
    fn rec(slot_labels: &[u32], partner: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(s) = partner.iter().position(|&p| p == usize::MAX) else {
            out.push(partner.clone());
            return;
        };
        for t in s + 1..partner.len() {
            if partner[t] == usize::MAX && slot_labels[t] == slot_labels[s] {
                partner[s] = t;
                partner[t] = s;
                rec(slot_labels, partner, out);
                partner[s] = usize::MAX;
                partner[t] = usize::MAX;
            }
        }
    }
    let slot_labels: Vec<u32> = labels.iter().flat_map(|&l| [l, l]).collect();
    let mut out = Vec::new();
    rec(&slot_labels, &mut vec![usize::MAX; slot_labels.len()], &mut out);
    out
}

/// Size limits for the contraction engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WickCaps {
    pub centered: usize,
    pub uncentered: usize,
    pub h_power: usize,
}

impl Default for WickCaps {
    fn default() -> Self {
        WickCaps { centered: 5, uncentered: 6, h_power: 8 }
    }
}

/// `E[word]` summed over all legal pairings.
pub fn expect_word(word: &GaussianWord) -> TracePolynomial {
    let (fixed, labels) = word.normalize();
    let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
    for partner in pairings(&labels) {
        *counts.entry(contract_key(&fixed, &partner)).or_default() += 1;
    }
    let mut out = TracePolynomial::zero();
    for (k, c) in counts {
        out.add_term(k, BigRational::from_integer(c.into()));
    }
    out
}

/// Items of the word where occurrences outside `keep` are replaced by `P`.
fn centered_terms(labels: &[u32]) -> Vec<(bool, Vec<Item>)> {
    let n = labels.len();
    (0u32..1 << n)
        .map(|mask| {
            let items = (0..n).map(|i| if mask >> i & 1 == 1 { Item::Occ(labels[i]) } else { Item::Fixed(1) }).collect();
            ((n - mask.count_ones() as usize) % 2 == 1, items)
        })
        .collect()
}

/// `E[𝕏_π]` (uncentered) or `E[(𝕏 − P)_π]` (centered) for `Q = I`.
pub fn moment_partition(p: &SetPartition, centered: bool, caps: &WickCaps) -> Result<TracePolynomial> {
    let limit = if centered { caps.centered } else { caps.uncentered };
    cap("n", p.n(), limit)?;
    let word = GaussianWord::of_partition(p);
    if !centered {
        return Ok(expect_word(&word));
    }
    if p.has_singleton() {
        return Ok(TracePolynomial::zero());
    }
    let (_, labels) = word.normalize();
    let mut out = TracePolynomial::zero();
    for (negative, items) in centered_terms(&labels) {
        let t = expect_word(&GaussianWord { items });
        out = if negative { &out - &t } else { &out + &t };
    }
    Ok(out)
}

/// Same as [`moment_partition`] but without the singleton shortcut; used to test
/// the vanishing law itself.
pub fn moment_partition_full(p: &SetPartition, caps: &WickCaps) -> Result<TracePolynomial> {
    cap("n", p.n(), caps.centered)?;
    let (_, labels) = GaussianWord::of_partition(p).normalize();
    let mut out = TracePolynomial::zero();
    for (negative, items) in centered_terms(&labels) {
        let t = expect_word(&GaussianWord { items });
        out = if negative { &out - &t } else { &out + &t };
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MomentClass {
    /// Partitions without singletons.
    QAll,
    /// Non-crossing, without singletons.
    QPlus,
    /// Crossing, without singletons.
    QMinus,
    Nc,
    PAll,
}

impl MomentClass {
    pub fn partition_class(self) -> PartitionClass {
        match self {
            MomentClass::QAll => PartitionClass::NoSing,
            MomentClass::QPlus => PartitionClass::NoSingNc,
            MomentClass::QMinus => PartitionClass::NoSingCross,
            MomentClass::Nc => PartitionClass::Nc,
            MomentClass::PAll => PartitionClass::All,
        }
    }
}

impl std::str::FromStr for MomentClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "Q_ALL" | "Q" => Self::QAll,
            "Q_PLUS" | "Q+" => Self::QPlus,
            "Q_MINUS" | "Q-" => Self::QMinus,
            "NC" => Self::Nc,
            "P_ALL" | "P" | "ALL" => Self::PAll,
            _ => return Err(Error::Invalid(format!("unknown moment class {s}"))),
        })
    }
}

/// Sum of partition moments over a class with `m` blocks.
pub fn moment_class(n: usize, m: usize, class: MomentClass, centered: bool, caps: &WickCaps) -> Result<TracePolynomial> {
    let limit = if centered { caps.centered } else { caps.uncentered };
    cap("n", n, limit)?;
    let parts: Vec<SetPartition> = enumerate(n, Some(m), class.partition_class())?.collect();
    let terms: Result<Vec<TracePolynomial>> = parts.par_iter().map(|p| moment_partition(p, centered, caps)).collect();
    Ok(terms?.iter().fold(TracePolynomial::zero(), |a, t| &a + t))
}

/// `E(ℋ^power)` for the Gaussian limit `ℋ` with `E[ℋ_ij ℋ_kl] = P_ik P_jl + P_il P_jk`.
pub fn moment_h(power: usize, caps: &WickCaps) -> Result<TracePolynomial> {
    cap("power", power, caps.h_power)?;
    if power % 2 == 1 {
        return Ok(TracePolynomial::zero());
    }
    let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
    for matching in position_matchings(power) {
        let pairs = matching.len();
        for choice in 0u32..1 << pairs {
            // nodes 0..=power; position q spans nodes (q, q+1)
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); power + 1];
            for (j, &(a, b)) in matching.iter().enumerate() {
                let (la, ra, lb, rb) = (a, a + 1, b, b + 1);
                let (e1, e2) = if choice >> j & 1 == 0 { ((la, lb), (ra, rb)) } else { ((la, rb), (ra, lb)) };
                for (x, y) in [e1, e2] {
                    adj[x].push(y);
                    adj[y].push(x);
                }
            }
            *counts.entry(graph_key(&adj, power)).or_default() += 1;
        }
    }
    let mut out = TracePolynomial::zero();
    for (k, c) in counts {
        out.add_term(k, BigRational::from_integer(c.into()));
    }
    Ok(out)
}

fn position_matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(free: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some(a) = free.iter().position(|&f| f) else {
            out.push(cur.clone());
            return;
        };
        free[a] = false;
        for b in a + 1..free.len() {
            if free[b] {
                free[b] = false;
                cur.push((a, b));
                rec(free, cur, out);
                cur.pop();
                free[b] = true;
            }
        }
        free[a] = true;
    }
    let mut out = Vec::new();
    rec(&mut vec![true; n], &mut Vec::new(), &mut out);
    out
}

/// Path/loop decomposition of a multigraph where the end nodes have degree 1 and all others degree 2.
fn graph_key(adj: &[Vec<usize>], end: usize) -> Key {
    let n = adj.len();
    let mut used: Vec<Vec<bool>> = adj.iter().map(|a| vec![false; a.len()]).collect();
    let mut seen = vec![false; n];
    let take = |at: usize, used: &mut Vec<Vec<bool>>| -> Option<usize> {
        let j = (0..adj[at].len()).find(|&j| !used[at][j])?;
        used[at][j] = true;
        let to = adj[at][j];
        let back = (0..adj[to].len()).find(|&k| !used[to][k] && adj[to][k] == at).unwrap();
        used[to][back] = true;
        Some(to)
    };
    let mut w = 0;
    let mut at = 0;
    seen[0] = true;
    while at != end {
        at = take(at, &mut used).expect("open path must reach the right end");
        seen[at] = true;
        w += 1;
    }
    let mut v: Vec<u32> = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut at = start;
        loop {
            seen[at] = true;
            at = take(at, &mut used).unwrap();
            len += 1;
            if at == start {
                break;
            }
        }
        if v.len() <= len {
            v.resize(len + 1, 0);
        }
        v[len] += 1;
    }
    Key::new(v, w)
}

/// Numeric `E[Q_1 𝕏_{α(1)} Q_2 𝕏_{α(2)} ⋯ Q_n 𝕏_{α(n)}]`, or its centered version.
pub fn moment_numeric<T: Real>(
    p: &SetPartition,
    q: &[Matrix<T>],
    centered: bool,
    pnum: &SymMatrix<T>,
    caps: &WickCaps,
) -> Result<Matrix<T>> {
    if q.len() != p.n() {
        return Err(Error::Dimension { expected: p.n(), got: q.len() });
    }
    let mut fixed = q.to_vec();
    fixed.push(Matrix::identity(pnum.dim()));
    let labels: Vec<u32> = p.alpha().into_iter().map(|l| l as u32).collect();
    moment_numeric_word(&fixed, &labels, centered, pnum, caps)
}

/// Numeric `E[A_0 𝕏_{l_1} A_1 ⋯ 𝕏_{l_k} A_k]` with general `A_j`; centered replaces each `𝕏` by `𝕏 − P`.
pub fn moment_numeric_word<T: Real>(
    fixed: &[Matrix<T>],
    labels: &[u32],
    centered: bool,
    pnum: &SymMatrix<T>,
    caps: &WickCaps,
) -> Result<Matrix<T>> {
    let k = labels.len();
    if fixed.len() != k + 1 {
        return Err(Error::Dimension { expected: k + 1, got: fixed.len() });
    }
    let r = pnum.dim();
    if let Some(bad) = fixed.iter().find(|m| m.dim() != r) {
        return Err(Error::Dimension { expected: r, got: bad.dim() });
    }
    cap("n", k, if centered { caps.centered } else { caps.uncentered })?;
    let p = pnum.matrix();
    let eval = |fixed: &[Matrix<T>], labels: &[u32]| -> Matrix<T> {
        pairings(labels).iter().fold(Matrix::zeros(r), |acc, partner| &acc + &contract_numeric(fixed, p, partner))
    };
    if !centered {
        return Ok(eval(fixed, labels));
    }
    let mut out = Matrix::zeros(r);
    for mask in 0u32..1 << k {
        let mut f = vec![fixed[0].clone()];
        let mut l = Vec::new();
        for i in 0..k {
            if mask >> i & 1 == 1 {
                l.push(labels[i]);
                f.push(fixed[i + 1].clone());
            } else {
                let last = f.last_mut().unwrap();
                *last = last.matmul(p).matmul(&fixed[i + 1]);
            }
        }
        let term = eval(&f, &l);
        out = if (k - mask.count_ones() as usize) % 2 == 1 { &out - &term } else { &out + &term };
    }
    Ok(out)
}
