//! Symmetric-group combinatorics: integer partitions as cycle types,
//! permutations in one-line notation, and the counting functions the moment
//! sums are built from (Catalan, Stirling of the first kind, derangements,
//! perfect matchings).
//!
//! Everything that counts is exact (`BigUint`); `p!` overflows 64 bits at
//! `p = 21` and several intermediate products overflow much earlier.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest permutation order handled anywhere in the crate.
pub const MAX_ORDER: usize = 12;

/// A conjugacy class of `S_p`, i.e. a partition of `p` listing cycle lengths
/// in non-increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CycleType {
    parts: Vec<usize>,
}

impl CycleType {
    /// Builds a cycle type from cycle lengths in any order.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidCycleType("empty partition".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidCycleType(format!("{parts:?} has a zero part")));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    /// The identity class `[1^p]`.
    pub fn identity(p: usize) -> Self {
        Self {
            parts: vec![1; p.max(1)],
        }
    }

    /// The perfect-matching class `[2^{p/2}]`; `None` for odd `p`.
    pub fn perfect_matching(p: usize) -> Option<Self> {
        (p >= 2 && p % 2 == 0).then(|| Self { parts: vec![2; p / 2] })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// The permutation order `p` (sum of the parts).
    pub fn p(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of cycles `c[sigma]`.
    pub fn cycle_count(&self) -> usize {
        self.parts.len()
    }

    /// Minimal number of transpositions, `p - c[sigma]`.
    pub fn transposition_distance(&self) -> usize {
        self.p() - self.cycle_count()
    }

    pub fn is_derangement(&self) -> bool {
        self.parts.iter().all(|&a| a >= 2)
    }

    pub fn is_perfect_matching(&self) -> bool {
        self.parts.iter().all(|&a| a == 2)
    }

    /// `m[j]` = number of cycles of length `j` (index 0 unused).
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m = vec![0; self.p() + 1];
        for &a in &self.parts {
            m[a] += 1;
        }
        m
    }

    /// Sign of any permutation in the class.
    pub fn sign(&self) -> i32 {
        if self.transposition_distance() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Packed multiplicity key, 4 bits per cycle length (valid for `p <= 15`).
    pub(crate) fn key(&self) -> u64 {
        self.parts.iter().fold(0u64, |k, &a| k + (1u64 << (4 * (a - 1))))
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|a| a.to_string()).collect();
        f.write_str(&s.join(","))
    }
}

impl FromStr for CycleType {
    type Err = Error;

    /// Parses `"3,1"` (commas and/or whitespace as separators).
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidCycleType(format!("cannot parse part {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }
}

impl TryFrom<Vec<usize>> for CycleType {
    type Error = Error;
    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Self::new(parts)
    }
}

impl From<CycleType> for Vec<usize> {
    fn from(c: CycleType) -> Self {
        c.parts
    }
}

/// A permutation of `{1..p}`, stored zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(p: usize) -> Self {
        Self {
            images: (0..p).collect(),
        }
    }

    /// From one-line notation with images in `1..=p`.
    pub fn from_one_line(images: &[usize]) -> Result<Self> {
        let p = images.len();
        let mut seen = vec![false; p];
        let mut zero_based = Vec::with_capacity(p);
        for &i in images {
            if i == 0 || i > p || seen[i - 1] {
                return Err(Error::InvalidArgument(format!(
                    "{images:?} is not a permutation of 1..={p}"
                )));
            }
            seen[i - 1] = true;
            zero_based.push(i - 1);
        }
        Ok(Self { images: zero_based })
    }

    /// From disjoint cycles written with 1-based points, e.g. `[[1, 2]]` in `S_3`.
    pub fn from_cycles(p: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..p).collect();
        let mut used = vec![false; p];
        for cycle in cycles {
            for (k, &a) in cycle.iter().enumerate() {
                if a == 0 || a > p || used[a - 1] {
                    return Err(Error::InvalidArgument(format!("bad cycle {cycle:?} in S_{p}")));
                }
                used[a - 1] = true;
                images[a - 1] = cycle[(k + 1) % cycle.len()] - 1;
            }
        }
        Ok(Self { images })
    }

    /// A canonical representative of a class: consecutive cycles
    /// `(1 2 .. a_1)(a_1+1 ..)...`.
    pub fn representative(class: &CycleType) -> Self {
        let p = class.p();
        let mut images = vec![0; p];
        let mut start = 0;
        for &a in class.parts() {
            for k in 0..a {
                images[start + k] = start + (k + 1) % a;
            }
            start += a;
        }
        Self { images }
    }

    pub fn order(&self) -> usize {
        self.images.len()
    }

    /// One-line notation, 1-based.
    pub fn one_line(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i + 1).collect()
    }

    /// Image of the 1-based point `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1] + 1
    }

    /// `self ∘ other`, i.e. `other` acts first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.order() != other.order() {
            return Err(Error::DimensionMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        })
    }

    pub fn invert(&self) -> Permutation {
        let mut images = vec![0; self.order()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Permutation { images }
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut parts = cycle_lengths(&self.images);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        if parts.is_empty() {
            parts.push(1);
        }
        CycleType { parts }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }
}

fn cycle_lengths<T: Copy + Into<usize>>(images: &[T]) -> Vec<usize> {
    let p = images.len();
    let mut seen = vec![false; p];
    let mut out = Vec::new();
    for start in 0..p {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = images[i].into();
            len += 1;
        }
        out.push(len);
    }
    out
}

/// Packed multiplicity key of a raw zero-based permutation (`p <= 15`).
#[inline]
pub(crate) fn cycle_key(images: &[u8]) -> u64 {
    let mut seen: u16 = 0;
    let mut key = 0u64;
    for start in 0..images.len() {
        if seen & (1 << start) != 0 {
            continue;
        }
        let mut len = 0u32;
        let mut i = start;
        while seen & (1 << i) == 0 {
            seen |= 1 << i;
            i = images[i] as usize;
            len += 1;
        }
        key += 1u64 << (4 * (len - 1));
    }
    key
}

/// Calls `f` on every permutation of `0..p` (Heap's algorithm), as raw
/// zero-based one-line arrays.
pub fn for_each_permutation<F: FnMut(&[u8])>(p: usize, mut f: F) {
    assert!(p <= MAX_ORDER, "enumeration beyond S_{MAX_ORDER}");
    let mut a: Vec<u8> = (0..p as u8).collect();
    let mut c = vec![0usize; p];
    f(&a);
    let mut i = 1;
    while i < p {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub(crate) fn check_order(p: usize) -> Result<()> {
    if p == 0 || p > MAX_ORDER {
        return Err(Error::OutOfRange {
            what: "p",
            value: p as i64,
            min: 1,
            max: MAX_ORDER as i64,
        });
    }
    Ok(())
}

/// All partitions of `p` in reverse-lexicographic order
/// (`[p]` first, `[1^p]` last).
pub fn partitions(p: usize) -> Result<Vec<CycleType>> {
    check_order(p)?;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(p);
    fn rec(remaining: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<CycleType>) {
        if remaining == 0 {
            out.push(CycleType { parts: current.clone() });
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            current.push(part);
            rec(remaining - part, part, current, out);
            current.pop();
        }
    }
    rec(p, p, &mut current, &mut out);
    Ok(out)
}

/// Maps packed cycle-type keys to positions in [`partitions`].
#[derive(Clone, Debug)]
pub(crate) struct ClassIndex {
    classes: Vec<CycleType>,
    sorted_keys: Vec<(u64, usize)>,
}

impl ClassIndex {
    pub(crate) fn new(p: usize) -> Result<Self> {
        let classes = partitions(p)?;
        let mut sorted_keys: Vec<(u64, usize)> = classes.iter().enumerate().map(|(i, c)| (c.key(), i)).collect();
        sorted_keys.sort_unstable();
        Ok(Self { classes, sorted_keys })
    }

    pub(crate) fn classes(&self) -> &[CycleType] {
        &self.classes
    }

    #[inline]
    pub(crate) fn index_of_key(&self, key: u64) -> usize {
        let pos = self
            .sorted_keys
            .binary_search_by_key(&key, |&(k, _)| k)
            .expect("key of a permutation of the right order");
        self.sorted_keys[pos].1
    }

    pub(crate) fn index_of(&self, class: &CycleType) -> Option<usize> {
        self.sorted_keys
            .binary_search_by_key(&class.key(), |&(k, _)| k)
            .ok()
            .map(|pos| self.sorted_keys[pos].1)
    }
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `n!!`, with `0!! = 1`. Callers pass `p - 1` for `(p-1)!!`.
pub fn double_factorial(n: usize) -> BigUint {
    (1..=n)
        .rev()
        .step_by(2)
        .fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Rising factorial `d (d+1) ... (d+p-1) = (p+d-1)!/(d-1)!`.
pub fn rising_factorial(d: usize, p: usize) -> BigUint {
    (0..p).fold(BigUint::one(), |acc, i| acc * BigUint::from(d + i))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of permutations in the class: `p! / prod_j j^{m_j} m_j!`.
pub fn class_size(class: &CycleType) -> BigUint {
    let m = class.multiplicities();
    let denom = m.iter().enumerate().skip(1).fold(BigUint::one(), |acc, (j, &mj)| {
        acc * BigUint::from(j).pow(mj as u32) * factorial(mj)
    });
    factorial(class.p()) / denom
}

pub fn transposition_distance(class: &CycleType) -> usize {
    class.transposition_distance()
}

/// `n`-th Catalan number `binom(2n, n) / (n + 1)`.
pub fn catalan(n: usize) -> BigUint {
    binomial(2 * n, n) / BigUint::from(n + 1)
}

/// Möbius coefficient of a class: the product of `Cat_{a - 1}` over the cycle
/// lengths `a`. This is the numerator of the leading large-`d` term of the
/// Weingarten function.
pub fn mobius_coefficient(class: &CycleType) -> BigUint {
    class
        .parts()
        .iter()
        .fold(BigUint::one(), |acc, &a| acc * catalan(a - 1))
}

/// Unsigned Stirling number of the first kind: permutations of `p` points with
/// exactly `m` cycles.
pub fn stirling_first_unsigned(p: usize, m: usize) -> Result<BigUint> {
    if m > p {
        return Err(Error::OutOfRange {
            what: "m",
            value: m as i64,
            min: 0,
            max: p as i64,
        });
    }
    // row[k] = c(n, k), updated in place via c(n+1, k) = n c(n, k) + c(n, k-1)
    let mut row = vec![BigUint::zero(); p + 1];
    row[0] = BigUint::one();
    for n in 0..p {
        for k in (1..=n + 1).rev() {
            let prev = std::mem::take(&mut row[k]);
            row[k] = prev * BigUint::from(n) + &row[k - 1];
        }
        row[0] = BigUint::zero();
    }
    Ok(row.swap_remove(m))
}

/// Number of fixed-point-free permutations of `p` points.
pub fn derangement_count(p: usize) -> BigUint {
    // D_n = n D_{n-1} + (-1)^n, D_0 = 1
    let mut d = BigUint::one();
    for n in 1..=p {
        d *= BigUint::from(n);
        if n % 2 == 0 {
            d += 1u32;
        } else {
            d -= 1u32;
        }
    }
    d
}

/// `ceil(p!/e)`. `p!/e` is never an integer for `p >= 1`, and the nearest
/// integer `D_p` lies above it exactly when `p` is even.
pub fn ceil_factorial_over_e(p: usize) -> BigUint {
    if p == 0 {
        return BigUint::one();
    }
    let d = derangement_count(p);
    if p % 2 == 0 {
        d
    } else {
        d + 1u32
    }
}

/// `(p-1)!!` for even `p`, 0 for odd `p`.
pub fn perfect_matching_count(p: usize) -> BigUint {
    if p % 2 == 1 {
        BigUint::zero()
    } else {
        double_factorial(p.saturating_sub(1))
    }
}

/// Derangement classes of `S_p` with their sizes, in partition order.
pub fn derangement_classes(p: usize) -> Result<Vec<(CycleType, BigUint)>> {
    Ok(partitions(p)?
        .into_iter()
        .filter(CycleType::is_derangement)
        .map(|c| {
            let size = class_size(&c);
            (c, size)
        })
        .collect())
}

/// `k -> d_{p,k}`: number of derangements at transposition distance `k`.
pub fn derangements_by_distance(p: usize) -> Result<BTreeMap<usize, BigUint>> {
    let mut out = BTreeMap::new();
    for (class, size) in derangement_classes(p)? {
        *out.entry(class.transposition_distance()).or_insert_with(BigUint::zero) += size;
    }
    Ok(out)
}

pub(crate) fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
