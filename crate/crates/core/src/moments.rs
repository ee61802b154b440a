//! Haar moments of `E = Tr[U rho U^dagger H]`.
//!
//! With `T` the class-algebra counts and `C` the Weingarten values, the double
//! sum over `S_p x S_p` collapses to a class-indexed kernel
//!
//! ```text
//! K[m][n] = sum_k C_k T[m][n][k]      (exact, then rounded once)
//! <E^p>   = sum_{m,n} |m| H[m] rho[n] K[m][n]
//! Sigma^p = sum_{m,n derangement classes} |m| dH[m] drho[n] K[m][n]
//! ```
//!
//! so the only floating-point work left is products of power traces.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_holds, moment_bound_rhs, BoundContext};
use crate::error::{Error, Result};
use crate::perm_comb::{class_size, double_factorial, CycleType, MAX_ORDER};
use crate::spectral::{center_hamiltonian, center_state, HamiltonianSpectrum, Spectrum, StateSpectrum};
use crate::weingarten::{rational_to_f64, weingarten_class_sum, weingarten_table, ClassAlgebra};

/// Default cap on the moment order; up to [`MAX_ORDER`] with an explicit override.
pub const DEFAULT_P_CAP: usize = 10;

struct Kernel {
    classes: Vec<CycleType>,
    sizes: Vec<f64>,
    k: Vec<f64>,
}

impl Kernel {
    fn get(p: usize, d: usize) -> Result<Arc<Kernel>> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Kernel>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().unwrap().get(&(p, d)) {
            return Ok(hit.clone());
        }
        let table = weingarten_table(p, d)?;
        let algebra = ClassAlgebra::get(p)?;
        let n = algebra.classes().len();
        let mut k = vec![0.0; n * n];
        for m in 0..n {
            for nu in 0..n {
                let exact = (0..n).fold(BigRational::zero(), |acc, g| {
                    let c = algebra.count(m, nu, g);
                    if c == 0 {
                        acc
                    } else {
                        acc + &table.values()[g] * BigRational::from_integer(BigInt::from(c))
                    }
                });
                k[m * n + nu] = rational_to_f64(&exact);
            }
        }
        let built = Arc::new(Kernel {
            classes: algebra.classes().to_vec(),
            sizes: algebra
                .classes()
                .iter()
                .map(|c| crate::perm_comb::to_f64(&class_size(c)))
                .collect(),
            k,
        });
        Ok(cache.lock().unwrap().entry((p, d)).or_insert(built).clone())
    }

    /// `sum_{m in left, n in right} |m| a[m] b[n] K[m][n]`, in class order.
    fn contract(
        &self,
        a: &[f64],
        b: &[f64],
        left: impl Fn(&CycleType) -> bool,
        right: impl Fn(&CycleType) -> bool,
    ) -> f64 {
        let n = self.classes.len();
        let mut total = 0.0;
        for m in (0..n).filter(|&m| left(&self.classes[m])) {
            let inner: f64 = (0..n)
                .filter(|&nu| right(&self.classes[nu]))
                .map(|nu| b[nu] * self.k[m * n + nu])
                .sum();
            total += self.sizes[m] * a[m] * inner;
        }
        total
    }

    fn thetas<S: Spectrum>(&self, s: &S) -> Vec<f64> {
        self.classes.iter().map(|c| s.theta_functional(c)).collect()
    }
}

fn check_p(p: usize, cap: usize) -> Result<()> {
    if cap > MAX_ORDER {
        return Err(Error::ResourceCap(format!(
            "cap {cap} exceeds the hard limit {MAX_ORDER}"
        )));
    }
    if p > cap {
        return Err(Error::ResourceCap(format!(
            "moment order p = {p} exceeds the cap {cap}"
        )));
    }
    if p == 0 {
        return Err(Error::OutOfRange {
            what: "p",
            value: 0,
            min: 1,
            max: cap as i64,
        });
    }
    Ok(())
}

fn check_dims(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<usize> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: rho.dim(),
        });
    }
    Ok(h.dim())
}

/// `mu = Tr[H]/d`.
pub fn mean(_rho: &StateSpectrum, h: &HamiltonianSpectrum) -> f64 {
    h.mean()
}

/// `(Tr[H^2] - Tr[H]^2/d)(Tr[rho^2] - 1/d)/(d^2 - 1)`, evaluated literally.
/// For a normalized state this is the exact variance; see
/// [`centered_variance`] for the form that stays exact otherwise.
pub fn variance(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<f64> {
    let d = check_dims(rho, h)? as f64;
    if d < 2.0 {
        return Ok(0.0);
    }
    let th = h.power_trace(2) - h.power_trace(1).powi(2) / d;
    let tr = rho.power_trace(2) - 1.0 / d;
    Ok((th * tr / (d * d - 1.0)).max(0.0))
}

/// `||dH||_2^2 ||drho||_2^2 / (d^2 - 1)`; equals `Sigma^(2)` for any spectra.
pub fn centered_variance(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<f64> {
    let d = check_dims(rho, h)? as f64;
    if d < 2.0 {
        return Ok(0.0);
    }
    let dh = center_hamiltonian(h).hs_norm_sq();
    let dr = center_state(rho).hs_norm_sq();
    Ok(dh * dr / (d * d - 1.0))
}

/// `<E^p>` with the default cap.
pub fn raw_moment(rho: &StateSpectrum, h: &HamiltonianSpectrum, p: usize) -> Result<f64> {
    raw_moment_with_cap(rho, h, p, DEFAULT_P_CAP)
}

pub fn raw_moment_with_cap(rho: &StateSpectrum, h: &HamiltonianSpectrum, p: usize, cap: usize) -> Result<f64> {
    check_p(p, cap)?;
    let d = check_dims(rho, h)?;
    let kernel = Kernel::get(p, d)?;
    Ok(kernel.contract(&kernel.thetas(h), &kernel.thetas(rho), |_| true, |_| true))
}

/// `Sigma^(p) = <(E - mu)^p>` with the default cap.
pub fn central_moment(rho: &StateSpectrum, h: &HamiltonianSpectrum, p: usize) -> Result<f64> {
    central_moment_with_cap(rho, h, p, DEFAULT_P_CAP)
}

/// Both sides restricted to derangement classes of the centered spectra.
pub fn central_moment_with_cap(rho: &StateSpectrum, h: &HamiltonianSpectrum, p: usize, cap: usize) -> Result<f64> {
    check_p(p, cap)?;
    let d = check_dims(rho, h)?;
    let kernel = Kernel::get(p, d)?;
    let dh = kernel.thetas(&center_hamiltonian(h));
    let dr = kernel.thetas(&center_state(rho));
    Ok(kernel.contract(&dh, &dr, CycleType::is_derangement, CycleType::is_derangement))
}

/// The same moment with the state left uncentered: `dH` over derangement
/// classes, `rho` over all classes.
pub fn central_moment_uncentered_state(rho: &StateSpectrum, h: &HamiltonianSpectrum, p: usize) -> Result<f64> {
    check_p(p, DEFAULT_P_CAP)?;
    let d = check_dims(rho, h)?;
    let kernel = Kernel::get(p, d)?;
    let dh = kernel.thetas(&center_hamiltonian(h));
    let r = kernel.thetas(rho);
    Ok(kernel.contract(&dh, &r, CycleType::is_derangement, |_| true))
}

/// `Sigma_G^(p)`: `(p-1)!! sigma2^{p/2}` for even `p`, 0 for odd `p`.
pub fn gaussian_moment(p: usize, sigma2: f64) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    crate::perm_comb::to_f64(&double_factorial(p.saturating_sub(1))) * sigma2.powf(p as f64 / 2.0)
}

/// Pure-state moment `[(d-1)!/(p+d-1)!] * sum_{derangement classes} |m| dH[m]`.
pub fn pure_central_moment(h: &HamiltonianSpectrum, d: usize, p: usize) -> Result<f64> {
    pure_central_moment_with_cap(h, d, p, DEFAULT_P_CAP)
}

pub fn pure_central_moment_with_cap(h: &HamiltonianSpectrum, d: usize, p: usize, cap: usize) -> Result<f64> {
    check_p(p, cap)?;
    if h.dim() != d {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: d,
        });
    }
    if d < p {
        return Err(Error::UnsupportedRegime { p, d });
    }
    let dh = center_hamiltonian(h);
    let geometric = rational_to_f64(&weingarten_class_sum(p, d)?);
    let spectral: f64 = crate::perm_comb::derangement_classes(p)?
        .iter()
        .map(|(c, size)| crate::perm_comb::to_f64(size) * dh.theta_functional(c))
        .sum();
    Ok(geometric * spectral)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: usize,
    pub exact: f64,
    pub gaussian: f64,
    pub abs_diff: f64,
    /// Absent where the envelope's validity condition fails.
    pub bound_rhs: Option<f64>,
    pub bound_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub d: usize,
    pub p_max: usize,
    pub mu: f64,
    pub sigma2: f64,
    pub pure: bool,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    /// True when every row with an envelope satisfies it.
    pub fn all_bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| r.bound_holds != Some(false))
    }
}

/// Central moments `1..=p_max` next to the Gaussian reference and the envelope.
/// A pure state is detected from the spectrum and uses the pure-state envelope.
pub fn moment_report(rho: &StateSpectrum, h: &HamiltonianSpectrum, p_max: usize, cap: usize) -> Result<MomentReport> {
    check_p(p_max, cap)?;
    let d = check_dims(rho, h)?;
    let ctx = BoundContext::from_spectra(rho, h)?;
    let mut rows = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let exact = central_moment_with_cap(rho, h, p, cap)?;
        let gaussian = gaussian_moment(p, ctx.sigma2);
        let abs_diff = (exact - gaussian).abs();
        let bound_rhs = moment_bound_rhs(p, &ctx).ok().flatten();
        rows.push(MomentRow {
            p,
            exact,
            gaussian,
            abs_diff,
            bound_rhs,
            bound_holds: bound_rhs.map(|rhs| bound_holds(exact, gaussian, rhs)),
        });
    }
    Ok(MomentReport {
        d,
        p_max,
        mu: mean(rho, h),
        sigma2: ctx.sigma2,
        pure: ctx.pure,
        rows,
    })
}
