//! Set partitions of `[n]`: enumeration by class, crossing tests, nesting depth,
//! closure, concatenation and the Kreweras complement.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{cap, Error, Result};

/// Largest ground set accepted by [`enumerate`].
pub const MAX_N: usize = 14;
/// Largest ground set for which the non-crossing recursion is materialized.
pub const MAX_N_RECURSION: usize = 12;

/// Partition of `{1..n}` with blocks sorted internally and ordered by smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// The null partition of the empty set.
    pub fn empty() -> Self {
        SetPartition { n: 0, blocks: Vec::new() }
    }

    pub fn single_block(n: usize) -> Self {
        if n == 0 {
            return Self::empty();
        }
        SetPartition { n, blocks: vec![(1..=n).collect()] }
    }

    pub fn singletons(n: usize) -> Self {
        SetPartition { n, blocks: (1..=n).map(|i| vec![i]).collect() }
    }

    /// Builds a partition from arbitrary blocks; validates and canonicalizes.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; n + 1];
        let mut blocks = blocks;
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::Invalid("empty block".into()));
            }
            b.sort_unstable();
            for &i in b.iter() {
                if i == 0 || i > n || seen[i] {
                    return Err(Error::Invalid(format!("blocks do not partition 1..{n}")));
                }
                seen[i] = true;
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(SetPartition { n, blocks })
    }

    /// Builds a partition from a 1-based block-index vector (restricted growth string
    /// or any labelling).
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, Vec<usize>)> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match map.iter_mut().find(|(k, _)| *k == l) {
                Some((_, b)) => b.push(i + 1),
                None => map.push((l, vec![i + 1])),
            }
        }
        SetPartition { n: labels.len(), blocks: map.into_iter().map(|(_, b)| b).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn has_singleton(&self) -> bool {
        self.blocks.iter().any(|b| b.len() == 1)
    }

    /// `alpha[i-1]` is the 1-based index of the block containing `i`.
    pub fn alpha(&self) -> Vec<usize> {
        let mut a = vec![0; self.n];
        for (k, b) in self.blocks.iter().enumerate() {
            for &i in b {
                a[i - 1] = k + 1;
            }
        }
        a
    }

    pub fn block_of(&self, i: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&i))
    }

    pub fn is_crossing(&self) -> bool {
        is_crossing_labels(&self.alpha())
    }

    /// Number of blocks not nested under the span of another block.
    pub fn iota(&self) -> Result<usize> {
        if self.is_crossing() {
            return Err(Error::Crossing("iota"));
        }
        let spans: Vec<(usize, usize)> = self.blocks.iter().map(|b| (b[0], *b.last().unwrap())).collect();
        Ok(spans.iter().filter(|&&(lo, hi)| !spans.iter().any(|&(a, b)| a < lo && hi < b)).count())
    }

    /// Shift by one and join `1` to the block that contained `n`.
    pub fn closure(&self) -> Self {
        if self.n == 0 {
            return SetPartition { n: 1, blocks: vec![vec![1]] };
        }
        let mut blocks: Vec<Vec<usize>> = self.blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect();
        let last = blocks.iter().position(|b| b.contains(&(self.n + 1))).unwrap();
        blocks[last].insert(0, 1);
        blocks.sort_by_key(|b| b[0]);
        SetPartition { n: self.n + 1, blocks }
    }

    /// Concatenation: `other` is shifted past `self`.
    pub fn oplus(&self, other: &Self) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().map(|b| b.iter().map(|i| i + self.n).collect()));
        SetPartition { n: self.n + other.n, blocks }
    }

    /// Kreweras complement on the interleaved nodes: node `k` sits between `k` and `k+1`.
    pub fn kreweras(&self) -> Result<Self> {
        if self.is_crossing() {
            return Err(Error::Crossing("kreweras"));
        }
        let n = self.n;
        if n == 0 {
            return Ok(Self::empty());
        }
        // sigma cycles each block upward; complement cycles are those of sigma^{-1} after the shift k -> k+1.
        let mut sigma_inv = vec![0; n + 1];
        for b in &self.blocks {
            for (j, &i) in b.iter().enumerate() {
                let next = b[(j + 1) % b.len()];
                sigma_inv[next] = i;
            }
        }
        let mut seen = vec![false; n + 1];
        let mut blocks = Vec::new();
        for start in 1..=n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                cycle.push(k);
                k = sigma_inv[k % n + 1];
            }
            cycle.sort_unstable();
            blocks.push(cycle);
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(SetPartition { n, blocks })
    }

    pub fn partition_type(&self) -> PartitionType {
        let mut mu = vec![0; self.n + 1];
        for b in &self.blocks {
            mu[b.len()] += 1;
        }
        PartitionType::from_mu(mu)
    }

    pub fn in_class(&self, class: PartitionClass) -> bool {
        let sing = self.has_singleton();
        match class {
            PartitionClass::All => true,
            PartitionClass::Nc => !self.is_crossing(),
            PartitionClass::NoSing => !sing,
            PartitionClass::NoSingNc => !sing && !self.is_crossing(),
            PartitionClass::NoSingCross => !sing && self.is_crossing(),
            PartitionClass::Cross => self.is_crossing(),
        }
    }
}

/// Crossing test on a block-label vector with a single left-to-right stack pass.
pub fn is_crossing_labels(labels: &[usize]) -> bool {
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut last = vec![0; k + 1];
    for (i, &l) in labels.iter().enumerate() {
        last[l] = i;
    }
    let mut open = vec![false; k + 1];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if open[l] {
            if stack.last() != Some(&l) {
                return true;
            }
            if last[l] == i {
                stack.pop();
                open[l] = false;
            }
        } else if last[l] != i {
            open[l] = true;
            stack.push(l);
        }
    }
    false
}

impl Ord for SetPartition {
    /// Canonical stream order: by `n`, then lexicographically by the block-index vector.
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| self.alpha().cmp(&other.alpha()))
    }
}

impl PartialOrd for SetPartition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "{{}}");
        }
        for b in &self.blocks {
            write!(f, "{{")?;
            for (j, i) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

impl Serialize for SetPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SetPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let blocks = Vec::<Vec<usize>>::deserialize(d)?;
        SetPartition::new(blocks).map_err(serde::de::Error::custom)
    }
}

/// Block-size profile: `mu[k]` blocks of size `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionType {
    pub mu: Vec<usize>,
    /// Same counts as `mu`, kept under the name used by the moment formulas.
    pub r: Vec<usize>,
}

impl PartitionType {
    pub fn from_mu(mut mu: Vec<usize>) -> Self {
        if mu.is_empty() {
            mu.push(0);
        }
        PartitionType { r: mu.clone(), mu }
    }

    /// Ground-set size `Σ k·mu[k]`.
    pub fn weight(&self) -> usize {
        self.mu.iter().enumerate().map(|(k, &c)| k * c).sum()
    }

    pub fn blocks(&self) -> usize {
        self.mu.iter().sum()
    }

    pub fn count(&self, size: usize) -> usize {
        self.mu.get(size).copied().unwrap_or(0)
    }
}

/// All block-size profiles of `n` (integer partitions), each as a `mu` vector of length `n+1`.
pub fn integer_partitions(n: usize) -> Vec<PartitionType> {
    fn rec(rest: usize, max: usize, mu: &mut Vec<usize>, out: &mut Vec<PartitionType>) {
        if rest == 0 {
            out.push(PartitionType::from_mu(mu.clone()));
            return;
        }
        for k in (1..=max.min(rest)).rev() {
            mu[k] += 1;
            rec(rest - k, k, mu, out);
            mu[k] -= 1;
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut vec![0; n + 1], &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PartitionClass {
    All,
    Nc,
    NoSing,
    NoSingNc,
    NoSingCross,
    Cross,
}

impl std::str::FromStr for PartitionClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "ALL" => Self::All,
            "NC" => Self::Nc,
            "NOSING" => Self::NoSing,
            "NOSING_NC" => Self::NoSingNc,
            "NOSING_CROSS" => Self::NoSingCross,
            "CROSS" => Self::Cross,
            _ => return Err(Error::Invalid(format!("unknown partition class {s}"))),
        })
    }
}

/// How non-crossing classes are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NcRoute {
    /// Closure/concatenation recursion, falling back to filtering above [`MAX_N_RECURSION`].
    #[default]
    Recursion,
    Filter,
    /// Runs both and fails if they disagree.
    CrossCheck,
}

pub type PartitionStream = Box<dyn Iterator<Item = SetPartition> + Send>;

/// Restricted growth strings of length `n` in lexicographic order.
struct AllPartitions {
    rgs: Vec<usize>,
    max: Vec<usize>,
    done: bool,
}

impl AllPartitions {
    fn new(n: usize) -> Self {
        AllPartitions { rgs: vec![1; n], max: vec![1; n], done: false }
    }
}

impl Iterator for AllPartitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let out = SetPartition::from_labels(&self.rgs);
        let n = self.rgs.len();
        // advance: rightmost position that can grow
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.rgs[i] <= self.max[i - 1] {
                self.rgs[i] += 1;
                self.max[i] = self.max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 1;
                    self.max[j] = self.max[j - 1];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Streams the members of a class, optionally restricted to `m` blocks, in canonical order.
pub fn enumerate(n: usize, m: Option<usize>, class: PartitionClass) -> Result<PartitionStream> {
    enumerate_with(n, m, class, NcRoute::default())
}

pub fn enumerate_with(n: usize, m: Option<usize>, class: PartitionClass, route: NcRoute) -> Result<PartitionStream> {
    cap("n", n, MAX_N)?;
    if let Some(m) = m {
        if m > n {
            return Err(Error::Invalid(format!("block count {m} exceeds n = {n}")));
        }
    }
    let nc_class = matches!(class, PartitionClass::Nc | PartitionClass::NoSingNc);
    if nc_class && route != NcRoute::Filter && n <= MAX_N_RECURSION {
        let mut list = nc_by_recursion(n, m);
        if class == PartitionClass::NoSingNc {
            list.retain(|p| !p.has_singleton());
        }
        if route == NcRoute::CrossCheck {
            let filtered: Vec<SetPartition> = filtered(n, m, class).collect();
            if filtered != list {
                return Err(Error::Invalid(format!("non-crossing routes disagree at n = {n}: {} vs {}", list.len(), filtered.len())));
            }
        }
        return Ok(Box::new(list.into_iter()));
    }
    Ok(Box::new(filtered(n, m, class)))
}

fn filtered(n: usize, m: Option<usize>, class: PartitionClass) -> impl Iterator<Item = SetPartition> + Send {
    AllPartitions::new(n).filter(move |p| m.is_none_or(|m| p.len() == m) && p.in_class(class))
}

/// Non-crossing partitions of `[n]` built by the closure/concatenation recursion, sorted canonically.
pub fn nc_by_recursion(n: usize, m: Option<usize>) -> Vec<SetPartition> {
    let table = nc_table(n);
    let mut out: Vec<SetPartition> = match m {
        Some(m) => table[n][m].clone(),
        None => table[n].iter().flatten().cloned().collect(),
    };
    out.sort();
    out
}

/// `table[n][m]` holds the non-crossing partitions of `[n]` with `m` blocks.
///
/// A partition of `[n+1]` either has `{n+1}` as a singleton, or its last block starts at
/// `n1+1` and the tail is the closure of a partition of `n2 = n - n1 ≥ 1` points.
fn nc_table(nmax: usize) -> Vec<Vec<Vec<SetPartition>>> {
    let mut t: Vec<Vec<Vec<SetPartition>>> = vec![vec![vec![SetPartition::empty()]]];
    let unit = SetPartition::closure(&SetPartition::empty());
    for n in 0..nmax {
        let mut row: Vec<Vec<SetPartition>> = vec![Vec::new(); n + 2];
        for m in 0..=n {
            for p in &t[n][m] {
                row[m + 1].push(p.oplus(&unit));
            }
        }
        for n1 in 0..n {
            let n2 = n - n1;
            for m1 in 0..=n1 {
                for m2 in 1..=n2 {
                    for p1 in &t[n1][m1] {
                        for p2 in &t[n2][m2] {
                            row[m1 + m2].push(p1.oplus(&p2.closure()));
                        }
                    }
                }
            }
        }
        t.push(row);
    }
    t
}

/// Brute-force coarsest partition of the interleaved nodes compatible with `p`;
/// used to validate [`SetPartition::kreweras`].
pub fn kreweras_brute_force(p: &SetPartition) -> Result<SetPartition> {
    if p.is_crossing() {
        return Err(Error::Crossing("kreweras"));
    }
    let n = p.n();
    cap("n", n, 10)?;
    let alpha = p.alpha();
    let offset = p.len();
    let mut labels = vec![0; 2 * n];
    for i in 0..n {
        labels[2 * i] = alpha[i];
    }
    let mut best: Option<SetPartition> = None;
    for k in AllPartitions::new(n) {
        let ka = k.alpha();
        for i in 0..n {
            labels[2 * i + 1] = offset + ka[i];
        }
        if !is_crossing_labels(&labels) && best.as_ref().is_none_or(|b| k.len() < b.len()) {
            best = Some(k);
        }
    }
    Ok(best.unwrap_or_else(SetPartition::empty))
}

/// Set view used by the recursion checks.
pub fn as_set(parts: impl IntoIterator<Item = SetPartition>) -> BTreeSet<Vec<usize>> {
    parts.into_iter().map(|p| p.alpha()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(blocks: &[&[usize]]) -> SetPartition {
        SetPartition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    fn fig19() -> SetPartition {
        sp(&[&[1, 4], &[2, 3], &[5], &[6, 7]])
    }

    #[test]
    fn nc_three_two() {
        let v: Vec<String> = enumerate(3, Some(2), PartitionClass::Nc).unwrap().map(|p| p.to_string()).collect();
        assert_eq!(v, ["{1,2}{3}", "{1,3}{2}", "{1}{2,3}"]);
    }

    #[test]
    fn nosing_nc_four_two() {
        let v: Vec<SetPartition> = enumerate(4, Some(2), PartitionClass::NoSingNc).unwrap().collect();
        assert_eq!(v, vec![sp(&[&[1, 2], &[3, 4]]), sp(&[&[1, 4], &[2, 3]])]);
        let crossing: Vec<_> = enumerate(4, Some(2), PartitionClass::NoSingCross).unwrap().collect();
        assert_eq!(crossing, vec![sp(&[&[1, 3], &[2, 4]])]);
    }

    #[test]
    fn null_partition() {
        let v: Vec<_> = enumerate(0, Some(0), PartitionClass::Nc).unwrap().collect();
        assert_eq!(v, vec![SetPartition::empty()]);
        assert_eq!(enumerate(3, Some(0), PartitionClass::Nc).unwrap().count(), 0);
    }

    #[test]
    fn crossing_examples() {
        assert!(sp(&[&[1, 3], &[2, 4]]).is_crossing());
        assert!(!sp(&[&[1, 4], &[2, 3]]).is_crossing());
        assert!(!SetPartition::single_block(6).is_crossing());
        assert!(sp(&[&[1, 4], &[2, 5], &[3]]).is_crossing());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(sp(&[&[1, 2], &[3, 4]]).alpha(), vec![1, 1, 2, 2]);
        assert_eq!(sp(&[&[1, 3], &[2, 4]]).alpha(), vec![1, 2, 1, 2]);
        assert_eq!(fig19().alpha(), vec![1, 2, 2, 1, 3, 4, 4]);
    }

    #[test]
    fn iota_examples() {
        assert_eq!(fig19().iota().unwrap(), 3);
        assert_eq!(SetPartition::single_block(5).iota().unwrap(), 1);
        assert!(sp(&[&[1, 3], &[2, 4]]).iota().is_err());
    }

    #[test]
    fn closure_examples() {
        assert_eq!(fig19().closure(), sp(&[&[1, 7, 8], &[2, 5], &[3, 4], &[6]]));
        assert_eq!(SetPartition::empty().closure(), sp(&[&[1]]));
        assert_eq!(sp(&[&[1]]).closure(), sp(&[&[1, 2]]));
        assert_eq!(fig19().closure().iota().unwrap(), 1);
    }

    #[test]
    fn oplus_examples() {
        let p = fig19();
        assert_eq!(SetPartition::empty().oplus(&p), p);
        assert_eq!(sp(&[&[1]]).oplus(&sp(&[&[1]])), sp(&[&[1], &[2]]));
        assert_eq!(sp(&[&[1, 2]]).oplus(&sp(&[&[1, 2]])), sp(&[&[1, 2], &[3, 4]]));
    }

    #[test]
    fn kreweras_examples() {
        assert_eq!(sp(&[&[1, 2], &[3]]).kreweras().unwrap(), sp(&[&[1], &[2, 3]]));
        assert_eq!(SetPartition::single_block(5).kreweras().unwrap(), SetPartition::singletons(5));
        assert_eq!(SetPartition::singletons(4).kreweras().unwrap(), SetPartition::single_block(4));
        assert!(sp(&[&[1, 3], &[2, 4]]).kreweras().is_err());
    }

    #[test]
    fn partition_type_examples() {
        assert_eq!(sp(&[&[1, 2], &[3, 4]]).partition_type().mu, vec![0, 0, 2, 0, 0]);
        assert_eq!(SetPartition::singletons(3).partition_type().mu, vec![0, 3, 0, 0]);
        let t = fig19().partition_type();
        assert_eq!((t.count(1), t.count(2)), (1, 3));
        assert_eq!(t.r, t.mu);
    }

    #[test]
    fn json_round_trip() {
        let s = serde_json::to_string(&fig19()).unwrap();
        assert_eq!(s, "[[1,4],[2,3],[5],[6,7]]");
        let back: SetPartition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fig19());
        assert!(serde_json::from_str::<SetPartition>("[[1,3],[3]]").is_err());
    }

    #[test]
    fn all_stream_is_sorted_and_complete() {
        let v: Vec<_> = enumerate(5, None, PartitionClass::All).unwrap().collect();
        assert_eq!(v.len(), 52);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn size_cap() {
        assert!(matches!(enumerate(15, None, PartitionClass::All), Err(Error::Cap { .. })));
    }

    #[test]
    fn integer_partitions_of_five() {
        assert_eq!(integer_partitions(5).len(), 7);
        assert!(integer_partitions(6).iter().all(|t| t.weight() == 6));
    }
}
