//! Analytic envelopes on the distance between the Haar moments of `E` and
//! those of the Gaussian with the same variance, for individual central
//! moments and for the moment generating function.
//!
//! Everything here is a double-precision evaluation of a closed-form
//! envelope; the integer thresholds are computed exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::centered_variance;
use crate::perm_comb::{ceil_factorial_over_e, double_factorial, factorial, rising_factorial, to_f64};
use crate::spectral::{center_hamiltonian, delta_e_max, eta, HamiltonianSpectrum, StateSpectrum};
use crate::weingarten::{catalan_f64, seventh_root_limit};

/// Everything the envelopes need to know about a `(rho, H)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub d: usize,
    pub sigma2: f64,
    /// `eta` of the centered Hamiltonian.
    pub eta: f64,
    pub delta_e_max: f64,
    pub pure: bool,
}

impl BoundContext {
    pub fn new(d: usize, sigma2: f64, eta: f64, delta_e_max: f64, pure: bool) -> Result<Self> {
        if !(sigma2 >= 0.0) || !(delta_e_max >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma2 = {sigma2} and delta_e_max = {delta_e_max} must be nonnegative"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("eta = {eta} outside (0, 1]")));
        }
        Ok(Self {
            d,
            sigma2,
            eta,
            delta_e_max,
            pure,
        })
    }

    pub fn from_spectra(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<Self> {
        let sigma2 = centered_variance(rho, h)?;
        // a flat Hamiltonian has G_p = 0, so any admissible eta gives a zero envelope
        let eta = match eta(&center_hamiltonian(h)) {
            Ok(e) => e,
            Err(Error::UndefinedEta) => 1.0,
            Err(e) => return Err(e),
        };
        Self::new(h.eigenvalues().len(), sigma2, eta, delta_e_max(rho, h)?, rho.is_pure())
    }
}

fn isqrt(d: usize) -> usize {
    let mut r = (d as f64).sqrt() as usize;
    while r * r > d {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= d {
        r += 1;
    }
    r
}

/// `min(floor(sqrt d), floor((d/sqrt 6)^{4/7}))`; 0 means no admissible order.
pub fn validity_p_max(d: usize) -> usize {
    isqrt(d).min(seventh_root_limit(d, 6))
}

/// `N* = min(floor(sqrt d), floor((d/(2 sqrt 3))^{4/7}))`.
pub fn n_star(d: usize) -> usize {
    isqrt(d).min(seventh_root_limit(d, 12))
}

/// Dimension above which `1 - 6 d^{-1/4}` is positive.
pub const DIMENSION_THRESHOLD: usize = 1296;

/// `G_p = (p-1)!! sigma2^{p/2}`.
pub fn scaling_factor_g(p: usize, ctx: &BoundContext) -> f64 {
    to_f64(&double_factorial(p.saturating_sub(1))) * ctx.sigma2.powf(p as f64 / 2.0)
}

fn ceil_ratio(p: usize) -> f64 {
    to_f64(&ceil_factorial_over_e(p)) / to_f64(&double_factorial(p - 1))
}

/// Pure-state envelope: `p(p-2)/(2d) + eta (ceil(p!/e)/(p-1)!! - 1)` for even
/// `p`, `sqrt(eta) ceil(p!/e)/(p-1)!!` for odd `p`. Valid for every `p >= 2`.
pub fn f_pure(d: usize, p: usize, eta: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::OutOfRange {
            what: "p",
            value: p as i64,
            min: 2,
            max: i64::MAX,
        });
    }
    let pf = p as f64;
    if p % 2 == 0 {
        Ok(pf * (pf - 2.0) / (2.0 * d as f64) + eta * (ceil_ratio(p) - 1.0))
    } else {
        Ok(eta.sqrt() * ceil_ratio(p))
    }
}

/// Summands of the general-state envelope, `f = matching + subleading + eta_factor * delta`
/// where `eta_factor` is `eta` for even `p` and `sqrt(eta)` for odd `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FGeneralParts {
    /// `P * 6 p^{7/2}/d^2`, zero for odd `p`.
    pub matching: f64,
    /// `P * p^2 Cat_p / d`, zero for odd `p`.
    pub subleading: f64,
    /// `P * (ceil(p!/e)/(p-1)!! - 1) Cat_p (1 + p^2/d)`.
    pub delta: f64,
    /// `P = (1 - 6 p^{7/2}/d^2)^{-1}`.
    pub prefactor: f64,
}

pub fn f_general_parts(d: usize, p: usize) -> Result<FGeneralParts> {
    let limit = validity_p_max(d);
    if p == 0 || p > limit {
        return Err(Error::Condition(format!(
            "p = {p} is outside 1..={limit}, the admissible range at d = {d}"
        )));
    }
    let (pf, df) = (p as f64, d as f64);
    let x = 6.0 * pf.powf(3.5) / (df * df);
    if x >= 1.0 {
        return Err(Error::Condition(format!(
            "6 p^(7/2)/d^2 = {x} >= 1 at p = {p}, d = {d}: the envelope has a pole"
        )));
    }
    let prefactor = 1.0 / (1.0 - x);
    let cat = catalan_f64(p);
    let delta = prefactor * (ceil_ratio(p) - 1.0) * cat * (1.0 + pf * pf / df);
    let (matching, subleading) = if p % 2 == 0 {
        (prefactor * x, prefactor * pf * pf * cat / df)
    } else {
        (0.0, 0.0)
    };
    Ok(FGeneralParts {
        matching,
        subleading,
        delta,
        prefactor,
    })
}

/// General-state envelope, defined for `p <= validity_p_max(d)`.
pub fn f_general(d: usize, p: usize, eta: f64) -> Result<f64> {
    let parts = f_general_parts(d, p)?;
    let eta_factor = if p % 2 == 0 { eta } else { eta.sqrt() };
    Ok(parts.matching + parts.subleading + eta_factor * parts.delta)
}

/// `G_p f_H(d, p)`, with the pure or general `f` according to the context.
/// `Ok(None)` when no envelope applies at this order: `p < 2` for pure
/// states, `p > validity_p_max(d)` otherwise.
pub fn moment_bound_rhs(p: usize, ctx: &BoundContext) -> Result<Option<f64>> {
    let f = if ctx.pure {
        if p < 2 {
            return Ok(None);
        }
        f_pure(ctx.d, p, ctx.eta)?
    } else {
        if p == 0 || p > validity_p_max(ctx.d) {
            return Ok(None);
        }
        f_general(ctx.d, p, ctx.eta)?
    };
    Ok(Some(scaling_factor_g(p, ctx) * f))
}

/// `|exact - gaussian| <= rhs`, allowing for the rounding of the two moments.
/// Needed where the envelope is tight, e.g. the pure second moment where
/// `f = 0` and both sides are equal in exact arithmetic.
pub fn bound_holds(exact: f64, gaussian: f64, rhs: f64) -> bool {
    let slack = 64.0 * f64::EPSILON * (exact.abs() + gaussian.abs());
    (exact - gaussian).abs() <= rhs + slack
}

/// `D(d, p) = (d-1)! d^{p/2} (d+1)^{p/2} / (p+d-1)!`.
pub fn d_coefficient(d: usize, p: usize) -> f64 {
    let half = BigInt::from(d * (d + 1)).pow((p / 2) as u32);
    let r = BigRational::new(half, BigInt::from(rising_factorial(d, p)));
    let base = crate::weingarten::rational_to_f64(&r);
    if p % 2 == 1 {
        base * ((d * (d + 1)) as f64).sqrt()
    } else {
        base
    }
}

/// Exact `D(d, p)` for even `p`.
pub fn d_coefficient_exact(d: usize, p: usize) -> Option<BigRational> {
    (p % 2 == 0).then(|| {
        BigRational::new(
            BigInt::from(d * (d + 1)).pow((p / 2) as u32),
            BigInt::from(rising_factorial(d, p)),
        )
    })
}

/// Lower envelope on `D(d, p)`: `1 - p(p-2)/(2d)` (even), `1 - (p+1)(p-1)/(2d)` (odd).
pub fn d_coefficient_lower(d: usize, p: usize) -> f64 {
    let (pf, df) = (p as f64, d as f64);
    if p % 2 == 0 {
        1.0 - pf * (pf - 2.0) / (2.0 * df)
    } else {
        1.0 - (pf + 1.0) * (pf - 1.0) / (2.0 * df)
    }
}

/// Admissible `|t|` for the MGF envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TWindow {
    pub n_star: usize,
    /// `min(sqrt(N*)/sqrt(sigma2), N*/delta_e_max)`.
    pub limit: f64,
    /// `1/(4 sqrt(eta sigma2))`; `|t|` must stay strictly below it.
    pub pole: f64,
}

impl TWindow {
    /// The largest usable `|t|` (the pole is excluded).
    pub fn effective(&self) -> f64 {
        self.limit.min(self.pole)
    }

    pub fn admits(&self, t: f64) -> bool {
        t.abs() <= self.limit && t.abs() < self.pole
    }
}

pub fn t_window(ctx: &BoundContext) -> TWindow {
    let n = n_star(ctx.d);
    let nf = n as f64;
    let a = if ctx.sigma2 > 0.0 {
        nf.sqrt() / ctx.sigma2.sqrt()
    } else {
        f64::INFINITY
    };
    let b = if ctx.delta_e_max > 0.0 {
        nf / ctx.delta_e_max
    } else {
        f64::INFINITY
    };
    let es = ctx.eta * ctx.sigma2;
    TWindow {
        n_star: n,
        limit: if n == 0 { 0.0 } else { a.min(b) },
        pole: if es > 0.0 {
            1.0 / (4.0 * es.sqrt())
        } else {
            f64::INFINITY
        },
    }
}

/// Value of the MGF envelope at one `t`, term by term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfBound {
    pub t: f64,
    /// The five summands in order.
    pub terms: [f64; 5],
    /// Sum of the terms, clamped at zero.
    pub total: f64,
}

impl MgfBound {
    /// Term (iii), the part that carries the small-`t` leading order
    /// `(32/3) sqrt(eta/pi) |t sqrt(sigma2)|^3`.
    pub fn cubic_term(&self) -> f64 {
        self.terms[2]
    }
}

/// `e^x - 1 - x` without cancellation at small `x`.
fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        x * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    } else {
        x.exp_m1() - x
    }
}

/// Bound on `|G(t) - exp(t^2 sigma2 / 2)|`, where `G` is the moment generating
/// function of `E - mu`. Term (iii) is evaluated as
/// `(2 sqrt pi)^{-1} [exp(A) - exp(8 s)]` with `s = t^2 sigma2` and
/// `A = -4|t| sqrt(sigma2/eta) - ln(1 - 4|t| sqrt(eta sigma2))/eta`,
/// so that it is nonnegative and vanishes to third order in `t`.
pub fn mgf_bound(t: f64, ctx: &BoundContext) -> Result<MgfBound> {
    let window = t_window(ctx);
    let at = t.abs();
    if at == 0.0 {
        return Ok(MgfBound {
            t,
            terms: [0.0; 5],
            total: 0.0,
        });
    }
    if at > window.limit {
        return Err(Error::Condition(format!(
            "|t| = {at} lies outside the window |t| <= {}",
            window.limit
        )));
    }
    let x = 4.0 * at * (ctx.eta * ctx.sigma2).sqrt();
    if x >= 1.0 {
        return Err(Error::Condition(format!(
            "4|t| sqrt(eta sigma2) = {x} >= 1: term (iii) is singular"
        )));
    }
    let s = t * t * ctx.sigma2;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let n = window.n_star as f64;

    let t1 = expm1_minus_x(2.0 * s);
    let t2 = 32.0 * s / (sqrt_pi * ctx.d as f64) * (16.0 * s).exp_m1();

    // A - 8s = (1/eta) * sum_{k>=3} x^k / k, summed directly to keep precision
    let c = 1.0 / ctx.eta;
    let a_minus_b = if x < 0.5 {
        let mut acc = 0.0f64;
        let mut xk = x * x * x;
        let mut k = 3.0;
        while xk / k > 1e-18 * acc.max(f64::MIN_POSITIVE) {
            acc += xk / k;
            xk *= x;
            k += 1.0;
            if k > 400.0 {
                break;
            }
        }
        c * acc
    } else {
        -c * x - c * (-x).ln_1p() - 8.0 * s
    };
    let t3 = (8.0 * s).exp() * a_minus_b.exp_m1() / (2.0 * sqrt_pi);

    let half_fact = to_f64(&factorial(window.n_star.div_ceil(2)));
    let full_fact = to_f64(&factorial(window.n_star));
    let den4 = 1.0 - s / n;
    let t4 = if den4 > 0.0 {
        s / den4 / half_fact
    } else {
        f64::INFINITY
    };
    let te = at * ctx.delta_e_max;
    let den5 = 1.0 - te / n;
    let t5 = if den5 > 0.0 {
        te / den5 / full_fact
    } else {
        f64::INFINITY
    };

    let terms = [t1, t2, t3, t4, t5];
    let total = terms.iter().sum::<f64>().max(0.0);
    Ok(MgfBound { t, terms, total })
}

/// Leading small-`t` behaviour `(32/3) sqrt(eta/pi) |t sqrt(sigma2)|^3`.
pub fn mgf_leading_order(t: f64, ctx: &BoundContext) -> f64 {
    32.0 / 3.0 * (ctx.eta / std::f64::consts::PI).sqrt() * (t.abs() * ctx.sigma2.sqrt()).powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weingarten::weingarten_class_sum;

    fn ctx(d: usize, sigma2: f64, eta: f64, de: f64) -> BoundContext {
        BoundContext::new(d, sigma2, eta, de, false).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(validity_p_max(49), 5);
        assert_eq!(validity_p_max(4), 1);
        assert_eq!(validity_p_max(1), 0);
        assert_eq!(n_star(49), 4);
        assert_eq!(n_star(4), 1);
        assert_eq!(n_star(7), 1);
        // largest r with c^2 r^7 <= d^4, checked from the defining inequality;
        // d = 162 sits exactly on 144 * 9^7 = 162^4
        let largest = |d: u128, c2: u128| {
            let mut r = 0u128;
            while c2 * (r + 1).pow(7) <= d.pow(4) {
                r += 1;
            }
            r as usize
        };
        for d in 1..2000usize {
            let sq = (1..).take_while(|r| r * r <= d).last().unwrap_or(0);
            assert_eq!(validity_p_max(d), sq.min(largest(d as u128, 36)), "d={d}");
            assert_eq!(n_star(d), sq.min(largest(d as u128, 144)), "d={d}");
        }
        assert_eq!(n_star(162), 9);
        // the 4/7 branch binds below d = 1296, sqrt(d) above
        assert_eq!(validity_p_max(400), seventh_root_limit(400, 6));
        assert_eq!(validity_p_max(100_000), 316);
    }

    #[test]
    fn scaling_factor() {
        let c = ctx(10, 0.02, 0.1, 1.0);
        assert_eq!(scaling_factor_g(2, &c), 0.02);
        assert!((scaling_factor_g(4, &c) - 0.0012).abs() < 1e-17);
        let pure = ctx(7, 9.10 / 56.0, 0.2, 1.0);
        assert!((scaling_factor_g(4, &pure) - 3.0 * (9.10f64 / 56.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn f_pure_values() {
        assert_eq!(f_pure(10, 2, 0.3).unwrap(), 0.0);
        assert!((f_pure(100, 4, 0.01).unwrap() - 0.06).abs() < 1e-15);
        // ceil(6/e) / 2!! = 3/2
        assert!((f_pure(100, 3, 0.04).unwrap() - 0.3).abs() < 1e-15);
        assert!(f_pure(10, 1, 0.3).is_err());
    }

    #[test]
    fn f_general_values() {
        let e = 0.01;
        let p = 4.0f64;
        assert_eq!(validity_p_max(9), 2);
        assert!(matches!(f_general(9, 4, e), Err(Error::Condition(_))));
        let d = 400usize;
        let x4 = 6.0 * p.powf(3.5) / (d * d) as f64;
        let expected = (x4 + 16.0 * 14.0 / d as f64 + e * (3.0 - 1.0) * 14.0 * (1.0 + 16.0 / d as f64)) / (1.0 - x4);
        assert!((f_general(d, 4, e).unwrap() - expected).abs() < 1e-13);
        let parts = f_general_parts(d, 4).unwrap();
        assert!((parts.matching + parts.subleading + e * parts.delta - expected).abs() < 1e-13);
        // p = 2: ceil(2/e) = 1 kills the eta term
        let two = f_general_parts(d, 2).unwrap();
        assert_eq!(two.delta, 0.0);
        // odd p carries sqrt(eta)
        let odd = f_general(d, 3, 0.04).unwrap();
        let p3 = f_general_parts(d, 3).unwrap();
        assert!((odd - 0.2 * p3.delta).abs() < 1e-15);
    }

    #[test]
    fn f_general_large_d_limit() {
        let d = 10_000_000usize;
        let e = 0.05;
        let lim = e * (3.0 - 1.0) * 14.0;
        assert!((f_general(d, 4, e).unwrap() - lim).abs() < 1e-3);
    }

    #[test]
    fn f_general_pole_is_reported() {
        // 36 p^7 = d^4 and p = sqrt(d) at d = 1296, p = 36
        assert_eq!(validity_p_max(DIMENSION_THRESHOLD), 36);
        assert!(matches!(
            f_general(DIMENSION_THRESHOLD, 36, 0.1),
            Err(Error::Condition(_))
        ));
    }

    #[test]
    fn bound_rhs_dispatch() {
        let general = ctx(25, 0.1, 0.2, 1.0);
        assert!(moment_bound_rhs(3, &general).unwrap().is_some());
        assert!(moment_bound_rhs(4, &general).unwrap().is_none());
        let pure = BoundContext::new(25, 0.1, 0.2, 1.0, true).unwrap();
        assert!(moment_bound_rhs(8, &pure).unwrap().is_some());
        assert!(moment_bound_rhs(1, &pure).unwrap().is_none());
    }

    #[test]
    fn d_coefficient_values() {
        assert!((d_coefficient(9, 2) - 1.0).abs() < 1e-15);
        let exact = 362880.0 * 100.0 * 121.0 / 6227020800.0;
        assert!((d_coefficient(10, 4) - exact).abs() < 1e-15);
        assert!((d_coefficient(10, 4) - 0.706).abs() < 1e-3);
        for d in 2..=100usize {
            let p_top = (d as f64).sqrt() as usize;
            for p in 2..=p_top {
                let dc = d_coefficient(d, p);
                assert!(dc > 0.0 && dc <= 1.0 + 1e-15, "d={d} p={p}");
                assert!(dc >= d_coefficient_lower(d, p) - 1e-15, "d={d} p={p}");
                if let Some(x) = d_coefficient_exact(d, p) {
                    let via_sum = weingarten_class_sum(p, d).unwrap()
                        * BigRational::from_integer(BigInt::from(d * (d + 1)).pow((p / 2) as u32));
                    assert_eq!(x, via_sum);
                }
            }
        }
    }

    #[test]
    fn window() {
        let c = ctx(49, 0.04, 0.2, 0.5);
        let w = t_window(&c);
        assert_eq!(w.n_star, 4);
        assert!((w.limit - (2.0f64 / 0.2).min(8.0)).abs() < 1e-12);
        let inf = ctx(49, 0.04, 0.2, 0.0);
        assert!((t_window(&inf).limit - 10.0).abs() < 1e-12);
        let flat = ctx(49, 0.0, 0.2, 0.5);
        assert!((t_window(&flat).limit - 8.0).abs() < 1e-12);
        assert!(t_window(&flat).pole.is_infinite());
    }

    #[test]
    fn mgf_bound_shape() {
        let c = ctx(25, 0.05, 0.1, 0.6);
        assert_eq!(mgf_bound(0.0, &c).unwrap().total, 0.0);
        let w = t_window(&c).effective();
        let mut prev = 0.0;
        for i in 1..200 {
            let t = w * i as f64 / 200.0;
            let b = mgf_bound(t, &c).unwrap();
            assert_eq!(b.total, mgf_bound(-t, &c).unwrap().total);
            assert!(b.total >= prev, "t={t}");
            assert!(b.terms.iter().all(|x| *x >= 0.0));
            prev = b.total;
        }
        assert!(matches!(
            mgf_bound(1.01 * t_window(&c).limit, &c),
            Err(Error::Condition(_))
        ));
    }

    #[test]
    fn mgf_cubic_leading_order() {
        for (eta, sigma2) in [(0.1, 0.05), (0.2317, 0.02), (0.01, 1.0)] {
            let c = ctx(25, sigma2, eta, 0.6);
            let t = 0.01 / sigma2.sqrt();
            let b = mgf_bound(t, &c).unwrap();
            let lead = mgf_leading_order(t, &c);
            assert!(
                (b.cubic_term() / lead - 1.0).abs() < 0.2,
                "{} vs {}",
                b.cubic_term(),
                lead
            );
            let tiny = 1e-5 / sigma2.sqrt();
            let r = mgf_bound(tiny, &c).unwrap().cubic_term() / mgf_leading_order(tiny, &c);
            assert!((r - 1.0).abs() < 1e-3, "{r}");
        }
    }

    #[test]
    fn mgf_pole_is_reported() {
        // eta = 1 moves the pole inside the window
        let c = ctx(10_000, 1.0, 1.0, 0.0);
        let w = t_window(&c);
        assert!(w.pole < w.limit);
        assert!(matches!(mgf_bound(w.pole * 1.0001, &c), Err(Error::Condition(_))));
        assert!(mgf_bound(w.pole * 0.999, &c).unwrap().total.is_finite());
    }

    #[test]
    fn slack_only_covers_rounding() {
        assert!(bound_holds(0.1, 0.1 + 1e-17, 0.0));
        assert!(!bound_holds(0.1, 0.1 + 1e-10, 0.0));
    }
}
