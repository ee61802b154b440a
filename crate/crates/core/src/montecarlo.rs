//! Monte Carlo estimation of the distribution of `E` over Haar unitaries.
//!
//! RNG contract: worker `w` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `w`. The `n` samples are
//! split into contiguous chunks, one per worker, and concatenated in worker
//! order, so a run is bit-reproducible for a fixed `(seed, workers)` pair.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{centered_variance, variance};
use crate::spectral::{center_hamiltonian, energy_range, eta, HamiltonianSpectrum, Spectrum, StateSpectrum};

/// The seven-level example: printed spectra and the quoted summary values.
pub mod fig1 {
    pub const HAMILTONIAN: [f64; 7] = [-1.6, -1.2, -0.6, 0.0, 0.4, 1.3, 1.7];
    /// As printed; sums to 0.979, not 1.
    pub const STATE: [f64; 7] = [0.395, 0.224, 0.151, 0.115, 0.079, 0.0020, 0.013];
    pub const QUOTED_SIGMA2: f64 = 0.02024;
    pub const QUOTED_ETA: f64 = 0.2317;
    pub const SAMPLES: usize = 100_000;
    /// Normalization tolerance needed to accept the printed state.
    pub const STATE_TOLERANCE: f64 = 0.05;
}

/// Generator for worker `worker` of a run seeded with `seed`.
pub fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Dense `d x d` complex matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    d: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry `(i, j)`, zero-based.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.d + i]
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    /// `max |(U^dagger U - 1)_{ij}|`.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.d {
            for b in 0..self.d {
                let dot: Complex64 = self
                    .column(a)
                    .iter()
                    .zip(self.column(b))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Unitary) -> Unitary {
        let d = self.d;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d {
            for k in 0..d {
                let b = other.get(k, j);
                for i in 0..d {
                    data[j * d + i] += self.get(i, k) * b;
                }
            }
        }
        Unitary { d, data }
    }
}

/// Haar unitary from a complex Ginibre matrix by Gram-Schmidt QR.
///
/// Two orthogonalization passes per column keep the factor unitary to machine
/// precision. Gram-Schmidt produces a triangular factor with positive real
/// diagonal, i.e. the phase-normalized QR, which is what makes `Q` Haar.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Unitary {
    let mut data: Vec<Complex64> = (0..d * d)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    for j in 0..d {
        let (done, rest) = data.split_at_mut(j * d);
        let v = &mut rest[..d];
        for _pass in 0..2 {
            for k in 0..j {
                let q = &done[k * d..(k + 1) * d];
                let r: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= r * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Unitary { d, data }
}

/// `E = sum_{ij} eps_i |U_ij|^2 lambda_j`.
pub fn energy_of(u: &Unitary, eps: &[f64], lambda: &[f64]) -> f64 {
    let mut e = 0.0;
    for (j, &l) in lambda.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let col: f64 = u.column(j).iter().zip(eps).map(|(x, &ei)| ei * x.norm_sqr()).sum();
        e += l * col;
    }
    e
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    /// `Tr[H]/d`.
    pub mu: f64,
    /// Exact `Sigma^(2)` of the sampled spectra.
    pub exact_sigma2: f64,
    /// `eta` of the centered Hamiltonian; absent for a flat spectrum.
    pub eta: Option<f64>,
    pub e_min: f64,
    pub e_max: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub seed: u64,
    pub d: usize,
    pub n_samples: usize,
    pub workers: usize,
    pub hamiltonian: Vec<f64>,
    pub state: Vec<f64>,
    pub energies: Vec<f64>,
    pub meta: RunMeta,
}

/// `n` Haar samples of `E`, split over `workers` streams.
pub fn sample_energy(
    rho: &StateSpectrum,
    h: &HamiltonianSpectrum,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<SampleRun> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    let (e_min, e_max) = energy_range(rho, h)?;
    let d = h.dim();
    let start = Instant::now();
    let eps = h.eigenvalues();
    let lambda = rho.populations();
    let chunks: Vec<Vec<f64>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let lo = n * w / workers;
            let hi = n * (w + 1) / workers;
            let mut rng = worker_rng(seed, w);
            (lo..hi)
                .map(|_| energy_of(&haar_unitary(d, &mut rng), eps, lambda))
                .collect()
        })
        .collect();
    let energies: Vec<f64> = chunks.concat();

    let scale = eps.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    if let Some(bad) = energies.iter().find(|&&e| e < e_min - tol || e > e_max + tol) {
        return Err(Error::Condition(format!(
            "sampled energy {bad} escaped the orbit range [{e_min}, {e_max}]"
        )));
    }
    Ok(SampleRun {
        seed,
        d,
        n_samples: n,
        workers,
        hamiltonian: eps.to_vec(),
        state: lambda.to_vec(),
        energies,
        meta: RunMeta {
            mu: h.mean(),
            exact_sigma2: centered_variance(rho, h)?,
            eta: eta(&center_hamiltonian(h)).ok(),
            e_min,
            e_max,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Bootstrap settings. Samples are grouped into at most `max_blocks`
/// contiguous blocks and blocks are resampled with replacement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub max_blocks: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 200,
            max_blocks: 1000,
            seed: 0x5eed_b007,
        }
    }
}

impl Bootstrap {
    fn blocks(&self, n: usize) -> Vec<(usize, usize)> {
        let b = self.max_blocks.min(n).max(1);
        (0..b).map(|i| (n * i / b, n * (i + 1) / b)).collect()
    }

    /// Standard deviation over resamples of `stat(summed block features)`.
    fn se<F>(&self, features: &[Vec<f64>], stat: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let nb = features.len();
        let width = features[0].len();
        let mut rng = worker_rng(self.seed, 0);
        let mut stats: Vec<Vec<f64>> = Vec::with_capacity(self.resamples);
        for _ in 0..self.resamples {
            let mut acc = vec![0.0; width];
            for _ in 0..nb {
                let f = &features[rng.random_range(0..nb)];
                acc.iter_mut().zip(f).for_each(|(a, b)| *a += b);
            }
            stats.push(stat(&acc));
        }
        let k = stats[0].len();
        (0..k)
            .map(|i| {
                let m = stats.iter().map(|s| s[i]).sum::<f64>() / stats.len() as f64;
                let v = stats.iter().map(|s| (s[i] - m).powi(2)).sum::<f64>() / (stats.len() - 1).max(1) as f64;
                v.sqrt()
            })
            .collect()
    }
}

/// Central moments `m_1..m_pmax` from power sums `s_k = sum (x - c)^k`, `s_0 = n`.
fn central_from_power_sums(s: &[f64], p_max: usize) -> Vec<f64> {
    let n = s[0];
    let raw: Vec<f64> = s.iter().map(|x| x / n).collect();
    let m = raw[1];
    (1..=p_max)
        .map(|p| {
            let mut acc = 0.0;
            let mut binom = 1.0;
            for k in 0..=p {
                if k > 0 {
                    binom *= (p - k + 1) as f64 / k as f64;
                }
                acc += binom * raw[k] * (-m).powi((p - k) as i32);
            }
            acc
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoment {
    pub p: usize,
    /// Sample central moment about the sample mean.
    pub value: f64,
    pub se: f64,
}

pub fn empirical_moments(run: &SampleRun, p_max: usize, boot: &Bootstrap) -> Result<Vec<EmpiricalMoment>> {
    if run.energies.is_empty() {
        return Err(Error::InvalidArgument("empty run".into()));
    }
    let n = run.energies.len();
    let center = run.energies.iter().sum::<f64>() / n as f64;
    let features: Vec<Vec<f64>> = boot
        .blocks(n)
        .into_iter()
        .map(|(lo, hi)| {
            let mut s = vec![0.0; p_max + 1];
            for &e in &run.energies[lo..hi] {
                let z = e - center;
                let mut zk = 1.0;
                for sk in s.iter_mut() {
                    *sk += zk;
                    zk *= z;
                }
            }
            s
        })
        .collect();
    let mut total = vec![0.0; p_max + 1];
    for f in &features {
        total.iter_mut().zip(f).for_each(|(a, b)| *a += b);
    }
    let values = central_from_power_sums(&total, p_max);
    let ses = boot.se(&features, |s| central_from_power_sums(s, p_max));
    Ok((1..=p_max)
        .map(|p| EmpiricalMoment {
            p,
            value: values[p - 1],
            se: ses[p - 1],
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub se: f64,
}

/// `<exp(-i t (E - Ebar))>` with `Ebar` the sample mean.
pub fn empirical_cf(run: &SampleRun, t_grid: &[f64]) -> Vec<CfPoint> {
    let n = run.energies.len() as f64;
    let center = run.energies.iter().sum::<f64>() / n;
    t_grid
        .iter()
        .map(|&t| {
            let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
            for &e in &run.energies {
                let (sn, cs) = (t * (e - center)).sin_cos();
                c += cs;
                s += sn;
                c2 += cs * cs;
                s2 += sn * sn;
            }
            let (mc, ms) = (c / n, s / n);
            let var = (c2 / n - mc * mc) + (s2 / n - ms * ms);
            CfPoint {
                t,
                re: mc,
                im: -ms,
                se: (var.max(0.0) / n).sqrt(),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfPoint {
    pub t: f64,
    pub value: f64,
    pub se: f64,
}

/// `<exp(t (E - mu))>` about the exact mean `mu`, with bootstrap errors.
pub fn empirical_mgf(run: &SampleRun, mu: f64, t_grid: &[f64], boot: &Bootstrap) -> Vec<MgfPoint> {
    let n = run.energies.len();
    let k = t_grid.len();
    // column 0 counts samples, column 1 + i sums exp(t_i (E - mu))
    let features: Vec<Vec<f64>> = boot
        .blocks(n)
        .into_iter()
        .map(|(lo, hi)| {
            let mut f = vec![0.0; k + 1];
            f[0] = (hi - lo) as f64;
            for &e in &run.energies[lo..hi] {
                for (fi, &t) in f[1..].iter_mut().zip(t_grid) {
                    *fi += (t * (e - mu)).exp();
                }
            }
            f
        })
        .collect();
    let stat = |s: &[f64]| s[1..].iter().map(|x| x / s[0]).collect::<Vec<f64>>();
    let mut total = vec![0.0; k + 1];
    for f in &features {
        total.iter_mut().zip(f).for_each(|(a, b)| *a += b);
    }
    let values = stat(&total);
    let ses = boot.se(&features, stat);
    t_grid
        .iter()
        .zip(values)
        .zip(ses)
        .map(|((&t, value), se)| MgfPoint { t, value, se })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `sum density_i * width_i`.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(p, w)| p * (w[1] - w[0]))
            .sum()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Density histogram; `bins = None` picks the Freedman-Diaconis width.
pub fn histogram(run: &SampleRun, bins: Option<usize>) -> Result<Histogram> {
    let x = &run.energies;
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty run".into()));
    }
    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let n = x.len();
    // a degenerate pair (pure state or flat H) gives energies equal up to rounding
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1.0) {
        let w = 1e-6 * lo.abs().max(1.0);
        return Ok(Histogram {
            bin_edges: vec![lo - w / 2.0, lo + w / 2.0],
            counts: vec![n as u64],
            density: vec![1.0 / w],
        });
    }
    let nbins = match bins {
        Some(0) => return Err(Error::InvalidArgument("bins must be positive".into())),
        Some(b) => b,
        None => {
            let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
            let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
            if width > 0.0 {
                (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
            } else {
                1
            }
        }
    };
    let width = (hi - lo) / nbins as f64;
    let bin_edges: Vec<f64> = (0..=nbins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; nbins];
    for &e in x {
        let i = (((e - lo) / width) as usize).min(nbins - 1);
        counts[i] += 1;
    }
    let density = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, w)| c as f64 / (n as f64 * (w[1] - w[0])))
        .collect();
    Ok(Histogram {
        bin_edges,
        counts,
        density,
    })
}

/// Normal pdf with mean `mu` and variance `sigma2` on `grid`.
pub fn gaussian_overlay(mu: f64, sigma2: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma2).sqrt();
    grid.iter()
        .map(|x| norm * (-(x - mu).powi(2) / (2.0 * sigma2)).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Meta {
    pub seed: u64,
    pub n_samples: usize,
    pub workers: usize,
    /// Variance formula on the printed spectra.
    pub sigma2_formula: f64,
    pub quoted_sigma2: f64,
    /// `(sigma2_formula - quoted) / quoted`.
    pub sigma2_quoted_rel_delta: f64,
    /// Exact Haar variance of the sampled (unnormalized) spectra.
    pub sigma2_sampled_exact: f64,
    pub eta: f64,
    pub quoted_eta: f64,
    pub eta_quoted_delta: f64,
    pub state_trace: f64,
    /// Set because the printed populations do not sum to one.
    pub state_normalization_flag: bool,
    pub empirical_mean: f64,
    pub empirical_mean_se: f64,
    pub empirical_variance: f64,
    pub empirical_variance_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Bundle {
    pub histogram: Histogram,
    /// Gaussian density at the bin centers, with the formula variance.
    pub overlay: Vec<f64>,
    pub meta: Fig1Meta,
    #[serde(skip)]
    pub run: Option<SampleRun>,
}

/// Samples the seven-level example with the printed spectra verbatim.
pub fn reproduce_fig1(seed: u64, n: usize, workers: usize) -> Result<Fig1Bundle> {
    let h = HamiltonianSpectrum::new(fig1::HAMILTONIAN.to_vec())?;
    let rho = StateSpectrum::with_tolerance(fig1::STATE.to_vec(), fig1::STATE_TOLERANCE)?;
    let run = sample_energy(&rho, &h, n, seed, workers)?;
    let hist = histogram(&run, None)?;
    let sigma2_formula = variance(&rho, &h)?;
    let eta_h = eta(&center_hamiltonian(&h))?;
    let moments = empirical_moments(&run, 2, &Bootstrap::default())?;
    let overlay = gaussian_overlay(h.mean(), sigma2_formula, &hist.centers());
    let state_trace = rho.power_trace(1);
    let n_f = n as f64;
    let emp_mean = run.energies.iter().sum::<f64>() / n_f;
    Ok(Fig1Bundle {
        histogram: hist,
        overlay,
        meta: Fig1Meta {
            seed,
            n_samples: n,
            workers,
            sigma2_formula,
            quoted_sigma2: fig1::QUOTED_SIGMA2,
            sigma2_quoted_rel_delta: (sigma2_formula - fig1::QUOTED_SIGMA2) / fig1::QUOTED_SIGMA2,
            sigma2_sampled_exact: run.meta.exact_sigma2,
            eta: eta_h,
            quoted_eta: fig1::QUOTED_ETA,
            eta_quoted_delta: eta_h - fig1::QUOTED_ETA,
            state_trace,
            state_normalization_flag: (state_trace - 1.0).abs() > 1e-9,
            empirical_mean: emp_mean,
            empirical_mean_se: (moments[1].value / n_f).sqrt(),
            empirical_variance: moments[1].value,
            empirical_variance_se: moments[1].se,
        },
        run: Some(run),
    })
}
