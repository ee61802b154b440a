//! Weingarten functions `C_[sigma]` of the unitary group `U(d)`.
//!
//! Exact values come from the class-collapsed Gram system. For a fixed
//! representative `s` of each class `lambda`,
//!
//! ```text
//! sum_{q in S_p} C_[q] d^{c(q s)} = delta_{lambda, id}
//! ```
//!
//! which has one unknown per conjugacy class. The coefficient matrix is built
//! from the structure counts of the class algebra ([`ClassAlgebra`]), which do
//! not depend on `d`, and is solved in exact rational arithmetic.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perm_comb::{
    catalan, check_order, class_size, cycle_key, mobius_coefficient, rising_factorial, ClassIndex, CycleType,
    Permutation, MAX_ORDER,
};

/// Structure counts of the class algebra of `S_p`:
/// `count(a, b, g) = #{q : class(q) = b, class(q ∘ s_a) = g}` for any fixed
/// `s_a` in class `a`. Indices follow [`crate::perm_comb::partitions`] order.
#[derive(Debug)]
pub struct ClassAlgebra {
    p: usize,
    index: ClassIndex,
    counts: Vec<u64>,
}

impl ClassAlgebra {
    /// Cached construction. Cost is `p! * (number of classes)` cycle
    /// decompositions: instant up to `p = 8`, seconds at `p = 10`, and tens of
    /// minutes at `p = 12`.
    pub fn get(p: usize) -> Result<Arc<ClassAlgebra>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ClassAlgebra>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().unwrap().get(&p) {
            return Ok(hit.clone());
        }
        let built = Arc::new(Self::build(p)?);
        Ok(cache.lock().unwrap().entry(p).or_insert(built).clone())
    }

    fn build(p: usize) -> Result<Self> {
        check_order(p)?;
        let index = ClassIndex::new(p)?;
        let n = index.classes().len();
        let reps: Vec<Vec<u8>> = index
            .classes()
            .iter()
            .map(|c| {
                Permutation::representative(c)
                    .one_line()
                    .into_iter()
                    .map(|i| (i - 1) as u8)
                    .collect()
            })
            .collect();

        // Split S_p by the image of the last point so the enumeration can run
        // in parallel; partial counts are summed, so the result is schedule-free.
        let counts = (0..p)
            .into_par_iter()
            .map(|last| {
                let mut local = vec![0u64; n * n * n];
                let mut q: Vec<u8> = (0..p as u8).filter(|&v| v as usize != last).collect();
                q.push(last as u8);
                let mut r = vec![0u8; p];
                heap_prefix(&mut q, p - 1, &mut |q: &[u8]| {
                    let b = index.index_of_key(cycle_key(q));
                    for (a, rep) in reps.iter().enumerate() {
                        for (ri, &si) in r.iter_mut().zip(rep) {
                            *ri = q[si as usize];
                        }
                        let g = index.index_of_key(cycle_key(&r));
                        local[(a * n + b) * n + g] += 1;
                    }
                });
                local
            })
            .reduce(
                || vec![0u64; n * n * n],
                |mut acc, part| {
                    acc.iter_mut().zip(part).for_each(|(x, y)| *x += y);
                    acc
                },
            );
        Ok(Self { p, index, counts })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn classes(&self) -> &[CycleType] {
        self.index.classes()
    }

    pub fn index_of(&self, class: &CycleType) -> Option<usize> {
        self.index.index_of(class)
    }

    #[inline]
    pub fn count(&self, a: usize, b: usize, g: usize) -> u64 {
        let n = self.classes().len();
        self.counts[(a * n + b) * n + g]
    }
}

/// Heap's algorithm over the first `n` entries of `a`, leaving the rest fixed.
fn heap_prefix<F: FnMut(&[u8])>(a: &mut [u8], n: usize, f: &mut F) {
    let mut c = vec![0usize; n];
    f(a);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Exact Weingarten values for one `(p, d)`, keyed by conjugacy class.
#[derive(Clone, Debug, PartialEq)]
pub struct WeingartenTable {
    p: usize,
    d: usize,
    classes: Vec<CycleType>,
    values: Vec<BigRational>,
}

impl WeingartenTable {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn classes(&self) -> &[CycleType] {
        &self.classes
    }

    /// Values in the same order as [`Self::classes`].
    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn value(&self, class: &CycleType) -> Option<&BigRational> {
        self.classes.iter().position(|c| c == class).map(|i| &self.values[i])
    }

    pub fn value_f64(&self, class: &CycleType) -> Option<f64> {
        self.value(class).map(rational_to_f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CycleType, &BigRational)> {
        self.classes.iter().zip(&self.values)
    }

    /// `sum_lambda class_size(lambda) C_lambda`, summed from the table.
    pub fn class_weighted_sum(&self) -> BigRational {
        self.iter()
            .map(|(c, v)| v * BigRational::from_integer(BigInt::from(class_size(c))))
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator beyond f64 range: scale by bit length first
        let shift = x.numer().bits().max(x.denom().bits()) as i64 - 900;
        let (n, d) = if shift > 0 {
            (x.numer() >> shift as usize, x.denom() >> shift as usize)
        } else {
            (x.numer().clone(), x.denom().clone())
        };
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    })
}

/// Exact Weingarten table for `U(d)` at order `p`. Cached per `(p, d)`.
pub fn weingarten_table(p: usize, d: usize) -> Result<Arc<WeingartenTable>> {
    if p > MAX_ORDER {
        return Err(Error::ResourceCap(format!(
            "Weingarten order p = {p} exceeds the hard cap {MAX_ORDER}"
        )));
    }
    check_order(p)?;
    if d < p {
        return Err(Error::UnsupportedRegime { p, d });
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<WeingartenTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(p, d)) {
        return Ok(hit.clone());
    }
    let algebra = ClassAlgebra::get(p)?;
    let built = Arc::new(solve_gram(&algebra, d)?);
    Ok(cache.lock().unwrap().entry((p, d)).or_insert(built).clone())
}

fn solve_gram(algebra: &ClassAlgebra, d: usize) -> Result<WeingartenTable> {
    let classes = algebra.classes().to_vec();
    let n = classes.len();
    let d_pow: Vec<BigInt> = (0..=algebra.p()).map(|k| BigInt::from(d).pow(k as u32)).collect();
    // A[l][m] = sum_g count(l, m, g) d^{c(g)}
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|m| {
                    let s = (0..n).fold(BigInt::zero(), |acc, g| {
                        let k = algebra.count(l, m, g);
                        if k == 0 {
                            acc
                        } else {
                            acc + BigInt::from(k) * &d_pow[classes[g].cycle_count()]
                        }
                    });
                    BigRational::from_integer(s)
                })
                .collect()
        })
        .collect();
    let identity = n - 1;
    let mut rhs: Vec<BigRational> = (0..n)
        .map(|l| {
            if l == identity {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let values = gauss_solve(&mut a, &mut rhs).ok_or(Error::UnsupportedRegime { p: algebra.p(), d })?;
    Ok(WeingartenTable {
        p: algebra.p(),
        d,
        classes,
        values,
    })
}

/// In-place exact Gaussian elimination; `None` if singular.
fn gauss_solve(a: &mut [Vec<BigRational>], b: &mut [BigRational]) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for k in col..n {
            a[col][k] = &a[col][k] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for k in col..n {
                let delta = &factor * &a[col][k];
                a[r][k] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some(b.to_vec())
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// The tabulated rational functions for `p <= 4`, evaluated at `d`.
pub fn closed_form_small_p(class: &CycleType, d: usize) -> Result<BigRational> {
    let p = class.p();
    if p > 4 {
        return Err(Error::OutOfRange {
            what: "p",
            value: p as i64,
            min: 1,
            max: 4,
        });
    }
    let d = BigInt::from(d);
    let d2 = &d * &d;
    let one = BigInt::one();
    let f = |k: i64| &d2 - BigInt::from(k);
    let den3 = f(4) * f(1);
    let den4 = f(9) * f(4) * f(1);
    let value = match class.parts() {
        [1] => ratio(one, d.clone()),
        [2] => ratio(-one, &d * f(1)),
        [1, 1] => ratio(one, f(1)),
        [3] => ratio(BigInt::from(2), &den3 * &d),
        [2, 1] => ratio(-one, den3),
        [1, 1, 1] => ratio(f(2), &den3 * &d),
        [4] => ratio(BigInt::from(-5), &den4 * &d),
        [3, 1] => ratio(BigInt::from(2) * &d2 - 3, &den4 * &d2),
        [2, 2] => ratio(&d2 + 6, &den4 * &d2),
        [2, 1, 1] => ratio(-f(4), &den4 * &d),
        [1, 1, 1, 1] => ratio(&d2 * &d2 - BigInt::from(8) * &d2 + 6, &den4 * &d2),
        _ => unreachable!("all partitions of p <= 4 are listed"),
    };
    Ok(value)
}

/// Leading large-`d` term `(-1)^{|l|} Moeb(l) / d^{p + |l|}`.
pub fn asymptotic_estimate(class: &CycleType, d: usize) -> f64 {
    let k = class.transposition_distance();
    let m = mobius_coefficient(class).to_f64().unwrap_or(f64::INFINITY);
    let mag = m * (d as f64).powi(-((class.p() + k) as i32));
    if k % 2 == 0 {
        mag
    } else {
        -mag
    }
}

/// Largest `p` with `p <= (d / sqrt(c))^{4/7}`, i.e. `c^2 p^7 <= d^4`.
/// `c = 6` gives the Weingarten-bound range, `c = 12` the MGF cutoff.
pub(crate) fn seventh_root_limit(d: usize, c: u128) -> usize {
    let d4 = (d as u128).pow(4);
    let mut p = 0usize;
    while c * c * ((p + 1) as u128).pow(7) <= d4 {
        p += 1;
    }
    p
}

/// Two-sided envelope on `|C_lambda|` in both published forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmInterval {
    pub lower: f64,
    pub upper: f64,
    /// `(d^2 - 1)^{p/2}` form.
    pub lower_weak: f64,
    pub upper_weak: f64,
}

impl CmInterval {
    pub fn contains(&self, x: f64) -> bool {
        let x = x.abs();
        let slack = 1e-12 * x;
        self.lower - slack <= x && x <= self.upper + slack
    }

    pub fn weak_contains(&self, x: f64) -> bool {
        let x = x.abs();
        let slack = 1e-12 * x;
        self.lower_weak - slack <= x && x <= self.upper_weak + slack
    }
}

pub fn collins_matsumoto_interval(class: &CycleType, d: usize) -> Result<CmInterval> {
    let p = class.p();
    let limit = seventh_root_limit(d, 6);
    if p > limit {
        return Err(Error::Condition(format!(
            "p = {p} exceeds floor((d/sqrt 6)^(4/7)) = {limit} at d = {d}"
        )));
    }
    let k = class.transposition_distance() as i32;
    let pf = p as f64;
    let df = d as f64;
    let d2 = df * df;
    let m = mobius_coefficient(class).to_f64().unwrap_or(f64::INFINITY);
    let lead = m / df.powi(p as i32 + k);
    let upper_factor = 1.0 / (1.0 - 6.0 * pf.powf(3.5) / d2);
    let weak_lead = m / ((d2 - 1.0).powf(pf / 2.0) * df.powi(k));
    Ok(CmInterval {
        lower: lead / (1.0 - (pf - 1.0) / d2),
        upper: lead * upper_factor,
        lower_weak: weak_lead * (1.0 + (pf / 2.0 - 1.0) / d2),
        upper_weak: weak_lead * upper_factor,
    })
}

/// Closed form `(d-1)!/(p+d-1)!` of the class-weighted Weingarten sum.
pub fn weingarten_class_sum(p: usize, d: usize) -> Result<BigRational> {
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "d",
            value: 0,
            min: 1,
            max: i64::MAX,
        });
    }
    Ok(BigRational::new(BigInt::one(), BigInt::from(rising_factorial(d, p))))
}

/// `(-1)^{|l|}` sign expected of `C_lambda`.
pub fn expected_sign(class: &CycleType) -> i32 {
    class.sign()
}

/// Catalan bound used in the moment envelopes; re-exported for convenience.
pub fn catalan_f64(n: usize) -> f64 {
    catalan(n).to_f64().unwrap_or(f64::INFINITY)
}
