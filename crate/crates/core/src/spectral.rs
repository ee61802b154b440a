//! Spectra of the Hamiltonian and of the state, their traceless parts, and the
//! scalar functionals of spectra the moment formulas are written in.
//!
//! The distribution of `E` depends on `rho` and `H` only through their
//! eigenvalues, so nothing here ever holds a matrix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm_comb::CycleType;

/// Default tolerance on `|sum(populations) - 1|`.
pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-9;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Anything that is a list of real eigenvalues.
pub trait Spectrum {
    fn values(&self) -> &[f64];

    fn dim(&self) -> usize {
        self.values().len()
    }

    /// `Tr[Theta^n]`.
    fn power_trace(&self, n: u32) -> f64 {
        compensated_sum(self.values().iter().map(|&x| x.powi(n as i32)))
    }

    /// Schatten `q`-norm `(sum |theta_i|^q)^{1/q}`.
    fn schatten_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        }
        // scale by the largest magnitude to keep large q from overflowing
        let scale = self.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let s = compensated_sum(self.values().iter().map(|&x| (x.abs() / scale).powf(q)));
        scale * s.powf(1.0 / q)
    }

    /// `Theta[lambda] = prod_i Tr[Theta^{a_i}]` over the cycle lengths of `lambda`.
    fn theta_functional(&self, class: &CycleType) -> f64 {
        class.parts().iter().map(|&a| self.power_trace(a as u32)).product()
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidSpectrum(format!("{what} spectrum is empty")));
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidSpectrum(format!(
            "{what} spectrum has non-finite entry {x}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpectrum {
    eigenvalues: Vec<f64>,
}

impl HamiltonianSpectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        check_finite(&eigenvalues, "Hamiltonian")?;
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `Tr[H]/d`.
    pub fn mean(&self) -> f64 {
        compensated_sum(self.eigenvalues.iter().copied()) / self.dim() as f64
    }

    /// Same spectrum shifted by `e0` (i.e. `H + e0 * 1`).
    pub fn shifted(&self, e0: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|x| x + e0).collect(),
        }
    }
}

impl Spectrum for HamiltonianSpectrum {
    fn values(&self) -> &[f64] {
        &self.eigenvalues
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpectrum {
    populations: Vec<f64>,
}

impl StateSpectrum {
    pub fn new(populations: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(populations, DEFAULT_NORMALIZATION_TOL)
    }

    /// Validates with a custom normalization tolerance. Printed spectra that
    /// do not sum to one are accepted this way and kept verbatim.
    pub fn with_tolerance(populations: Vec<f64>, tol: f64) -> Result<Self> {
        check_finite(&populations, "state")?;
        if let Some(x) = populations.iter().find(|&&x| x < -tol) {
            return Err(Error::InvalidSpectrum(format!("negative population {x}")));
        }
        let total = compensated_sum(populations.iter().copied());
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidSpectrum(format!(
                "populations sum to {total}, not 1 (tolerance {tol})"
            )));
        }
        Ok(Self { populations })
    }

    /// `(1, 0, ..., 0)`.
    pub fn pure(d: usize) -> Self {
        let mut populations = vec![0.0; d.max(1)];
        populations[0] = 1.0;
        Self { populations }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            populations: vec![1.0 / d as f64; d],
        }
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    /// `1 - Tr[rho]`; nonzero only for spectra accepted with a loose tolerance.
    pub fn normalization_defect(&self) -> f64 {
        1.0 - compensated_sum(self.populations.iter().copied())
    }

    pub fn is_pure(&self) -> bool {
        self.populations.iter().filter(|&&x| x != 0.0).count() == 1 && self.populations.iter().any(|&x| x == 1.0)
    }

    pub fn purity(&self) -> f64 {
        self.power_trace(2)
    }
}

impl Spectrum for StateSpectrum {
    fn values(&self) -> &[f64] {
        &self.populations
    }
}

/// A traceless spectrum `Theta - (Tr Theta / d) 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteredSpectrum {
    deviations: Vec<f64>,
}

impl CenteredSpectrum {
    /// Subtracts the mean. Works for any real list.
    pub fn from_values(values: &[f64]) -> Self {
        let d = values.len() as f64;
        let mean = compensated_sum(values.iter().copied()) / d;
        let mut deviations: Vec<f64> = values.iter().map(|x| x - mean).collect();
        // push the rounding residue into the largest entry
        let residue = compensated_sum(deviations.iter().copied());
        if let Some(i) = (0..deviations.len()).max_by(|&a, &b| deviations[a].abs().total_cmp(&deviations[b].abs())) {
            deviations[i] -= residue;
        }
        Self { deviations }
    }

    pub fn deviations(&self) -> &[f64] {
        &self.deviations
    }

    pub fn is_zero(&self) -> bool {
        self.deviations.iter().all(|&x| x == 0.0)
    }

    /// `Tr[Theta^2]`.
    pub fn hs_norm_sq(&self) -> f64 {
        self.power_trace(2)
    }
}

impl Spectrum for CenteredSpectrum {
    fn values(&self) -> &[f64] {
        &self.deviations
    }

    fn power_trace(&self, n: u32) -> f64 {
        if n == 1 {
            // traceless by construction
            return 0.0;
        }
        compensated_sum(self.deviations.iter().map(|&x| x.powi(n as i32)))
    }
}

/// `Delta H = H - mu 1` with `mu = Tr[H]/d`.
pub fn center_hamiltonian(h: &HamiltonianSpectrum) -> CenteredSpectrum {
    CenteredSpectrum::from_values(h.eigenvalues())
}

/// `Delta rho = rho - 1/d`. For a state that does not sum to one this centers
/// about `Tr[rho]/d` instead, which keeps the result traceless.
pub fn center_state(rho: &StateSpectrum) -> CenteredSpectrum {
    CenteredSpectrum::from_values(rho.populations())
}

/// `eta = (Tr|Theta|^3)^2 / (Tr Theta^2)^3`.
pub fn eta(theta: &CenteredSpectrum) -> Result<f64> {
    let scale = theta.deviations.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::UndefinedEta);
    }
    // scale-invariant, so normalize first
    let t3 = compensated_sum(theta.deviations.iter().map(|x| (x.abs() / scale).powi(3)));
    let t2 = compensated_sum(theta.deviations.iter().map(|x| (x / scale).powi(2)));
    Ok(t3 * t3 / (t2 * t2 * t2))
}

/// `eta^{|l| - p/2} (Tr Theta^2)^{p/2}` for a derangement class `l`.
///
/// This dominates `|Theta[l]|` when every cycle of `l` has length 2 or 3. A
/// cycle of length 4 or more breaks it: by Cauchy-Schwarz
/// `eta (Tr Theta^2)^2 <= Tr Theta^4` with equality only when `|theta_i|` is
/// constant on the support. See [`cycle_product_bound`] for a bound that
/// holds for every class.
pub fn proposition1_bound(theta: &CenteredSpectrum, class: &CycleType) -> Result<f64> {
    if !class.is_derangement() {
        return Err(Error::NotDerangement(class.to_string()));
    }
    let p = class.p() as f64;
    let k = class.transposition_distance() as f64;
    let t2 = theta.hs_norm_sq();
    if t2 == 0.0 {
        return Ok(0.0);
    }
    Ok(eta(theta)?.powf(k - p / 2.0) * t2.powf(p / 2.0))
}

/// `eta^{s/6} (Tr Theta^2)^{p/2}`, where `s` sums the cycle lengths `>= 3`
/// of `l`. Follows from `|Tr Theta^a| <= ||Theta||_3^a` for `a >= 3` and
/// `|Tr Theta^2| = ||Theta||_2^2`. Coincides with [`proposition1_bound`]
/// when no cycle is longer than 3.
pub fn cycle_product_bound(theta: &CenteredSpectrum, class: &CycleType) -> Result<f64> {
    if !class.is_derangement() {
        return Err(Error::NotDerangement(class.to_string()));
    }
    let t2 = theta.hs_norm_sq();
    if t2 == 0.0 {
        return Ok(0.0);
    }
    let long: usize = class.parts().iter().filter(|&&a| a >= 3).sum();
    Ok(eta(theta)?.powf(long as f64 / 6.0) * t2.powf(class.p() as f64 / 2.0))
}

fn check_dims(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: rho.dim(),
        });
    }
    Ok(())
}

fn sorted(values: &[f64], descending: bool) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| if descending { b.total_cmp(a) } else { a.total_cmp(b) });
    v
}

/// `(E_min, E_max)` over the unitary orbit: the passive and anti-passive
/// arrangements of the populations on the ascending energies.
pub fn energy_range(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<(f64, f64)> {
    check_dims(rho, h)?;
    let eps = sorted(h.eigenvalues(), false);
    let dot = |lam: Vec<f64>| compensated_sum(lam.iter().zip(&eps).map(|(l, e)| l * e));
    let e_min = dot(sorted(rho.populations(), true));
    let e_max = dot(sorted(rho.populations(), false));
    Ok((e_min, e_max))
}

/// Largest distance of an orbit endpoint from `mu = Tr[H]/d`.
pub fn delta_e_max(rho: &StateSpectrum, h: &HamiltonianSpectrum) -> Result<f64> {
    let (lo, hi) = energy_range(rho, h)?;
    let mu = h.mean();
    Ok((lo - mu).abs().max((hi - mu).abs()))
}

/// `(anti-ergotropy, ergotropy) = (E_init - E_max, E_init - E_min)`.
pub fn ergotropy_range(rho: &StateSpectrum, h: &HamiltonianSpectrum, e_init: f64) -> Result<(f64, f64)> {
    let (lo, hi) = energy_range(rho, h)?;
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if !(e_init >= lo - tol && e_init <= hi + tol) {
        return Err(Error::InvalidInitialEnergy {
            energy: e_init,
            min: lo,
            max: hi,
        });
    }
    Ok((e_init - hi, e_init - lo))
}

/// On-disk spectra: `{"hamiltonian": [...], "state": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectraFile {
    pub hamiltonian: Vec<f64>,
    pub state: Vec<f64>,
}

impl SpectraFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpectrum(format!("bad spectra JSON: {e}")))
    }

    /// Validated pair with the given normalization tolerance.
    pub fn spectra(&self, tol: f64) -> Result<(StateSpectrum, HamiltonianSpectrum)> {
        let h = HamiltonianSpectrum::new(self.hamiltonian.clone())?;
        let rho = StateSpectrum::with_tolerance(self.state.clone(), tol)?;
        check_dims(&rho, &h)?;
        Ok((rho, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::fig1;
    use crate::perm_comb::{derangement_classes, partitions};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn fig1_h() -> HamiltonianSpectrum {
        HamiltonianSpectrum::new(fig1::HAMILTONIAN.to_vec()).unwrap()
    }

    fn fig1_rho() -> StateSpectrum {
        StateSpectrum::with_tolerance(fig1::STATE.to_vec(), 0.05).unwrap()
    }

    #[test]
    fn centering() {
        let dh = center_hamiltonian(&fig1_h());
        for (a, b) in dh.deviations().iter().zip(fig1::HAMILTONIAN) {
            assert!(close(*a, b, 1e-15));
        }
        let c = center_hamiltonian(&HamiltonianSpectrum::new(vec![2.5; 4]).unwrap());
        assert!(c.is_zero());
        let c = center_hamiltonian(&HamiltonianSpectrum::new(vec![0.0, 1.0]).unwrap());
        assert_eq!(c.deviations(), &[-0.5, 0.5]);
        assert!(center_state(&StateSpectrum::maximally_mixed(5))
            .deviations()
            .iter()
            .all(|x| x.abs() < 1e-16));
        assert_eq!(center_state(&StateSpectrum::pure(2)).deviations(), &[0.5, -0.5]);
    }

    #[test]
    fn state_validation() {
        assert!(StateSpectrum::new(vec![0.5, 0.6]).is_err());
        assert!(StateSpectrum::new(vec![1.2, -0.2]).is_err());
        assert!(StateSpectrum::new(fig1::STATE.to_vec()).is_err());
        let rho = fig1_rho();
        assert!(close(rho.normalization_defect(), 0.021, 1e-12));
        assert!(StateSpectrum::pure(3).is_pure());
        assert!(!StateSpectrum::maximally_mixed(3).is_pure());
        assert!(HamiltonianSpectrum::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn norms_and_traces() {
        let two = CenteredSpectrum::from_values(&[1.0, -1.0]);
        assert!(close(two.schatten_norm(2.0), 2f64.sqrt(), 1e-15));
        let dh = center_hamiltonian(&fig1_h());
        assert!(close(dh.schatten_norm(2.0).powi(2), 9.10, 1e-12));
        assert_eq!(dh.power_trace(1), 0.0);
        assert!(close(StateSpectrum::pure(6).power_trace(2), 1.0, 0.0));
        assert!(close(fig1_rho().power_trace(2), 0.248641, 1e-12));
    }

    #[test]
    fn eta_values() {
        let dh = center_hamiltonian(&fig1_h());
        let e = eta(&dh).unwrap();
        assert!(close(e, 0.2317, 1e-4), "{e}");
        assert!(close(e, 13.214f64.powi(2) / 9.10f64.powi(3), 1e-4));
        assert!(close(
            eta(&CenteredSpectrum::from_values(&[1.0, -1.0])).unwrap(),
            0.5,
            1e-15
        ));
        for d in [2usize, 4, 10, 64] {
            let v: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            assert!(close(
                eta(&CenteredSpectrum::from_values(&v)).unwrap(),
                1.0 / d as f64,
                1e-14
            ));
        }
        assert_eq!(
            eta(&CenteredSpectrum::from_values(&[3.0, 3.0])),
            Err(Error::UndefinedEta)
        );
    }

    #[test]
    fn theta_examples() {
        let dh = center_hamiltonian(&fig1_h());
        let v = dh.theta_functional(&"2,2".parse().unwrap());
        assert!(close(v, 82.81, 1e-11));
        let h = fig1_h();
        assert!(close(
            h.theta_functional(&CycleType::identity(3)),
            h.power_trace(1).powi(3),
            1e-15
        ));
        let dr = center_state(&StateSpectrum::maximally_mixed(7));
        for (c, _) in derangement_classes(6).unwrap() {
            assert!(dr.theta_functional(&c).abs() < 1e-30);
        }
    }

    #[test]
    fn ranges() {
        let h = HamiltonianSpectrum::new(vec![0.0, 1.0]).unwrap();
        let rho = StateSpectrum::new(vec![0.7, 0.3]).unwrap();
        let (lo, hi) = energy_range(&rho, &h).unwrap();
        assert!(close(lo, 0.3, 1e-15) && close(hi, 0.7, 1e-15));
        assert!(close(delta_e_max(&rho, &h).unwrap(), 0.2, 1e-15));
        let (a, e) = ergotropy_range(&rho, &h, 0.5).unwrap();
        assert!(close(a, -0.2, 1e-15) && close(e, 0.2, 1e-15));
        let (a, e) = ergotropy_range(&rho, &h, lo).unwrap();
        assert!(close(a, lo - hi, 1e-15) && e == 0.0);
        assert!(matches!(
            ergotropy_range(&rho, &h, 0.9),
            Err(Error::InvalidInitialEnergy { .. })
        ));

        let mixed = StateSpectrum::maximally_mixed(2);
        let (lo, hi) = energy_range(&mixed, &h).unwrap();
        assert!(close(lo, 0.5, 1e-15) && close(hi, 0.5, 1e-15));
        assert_eq!(delta_e_max(&mixed, &h).unwrap(), 0.0);

        let h3 = HamiltonianSpectrum::new(vec![2.0, -1.0, 0.5]).unwrap();
        let pure = StateSpectrum::pure(3);
        assert_eq!(energy_range(&pure, &h3).unwrap(), (-1.0, 2.0));
        assert_eq!(ergotropy_range(&pure, &h3, 2.0).unwrap(), (0.0, 3.0));
        assert!(matches!(energy_range(&pure, &h), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fig1_delta_e_max() {
        let (rho, h) = (fig1_rho(), fig1_h());
        let mut e = fig1::HAMILTONIAN.to_vec();
        e.sort_by(f64::total_cmp);
        let mut l = fig1::STATE.to_vec();
        l.sort_by(f64::total_cmp);
        let hi: f64 = l.iter().zip(&e).map(|(a, b)| a * b).sum();
        let lo: f64 = l.iter().rev().zip(&e).map(|(a, b)| a * b).sum();
        assert!(close(delta_e_max(&rho, &h).unwrap(), lo.abs().max(hi.abs()), 1e-14));
    }

    #[test]
    fn derangement_bound_examples() {
        let theta = CenteredSpectrum::from_values(&[0.3, -1.2, 0.5, 0.4]);
        let pm: CycleType = "2,2".parse().unwrap();
        assert!(close(
            proposition1_bound(&theta, &pm).unwrap(),
            theta.theta_functional(&pm).abs(),
            1e-14
        ));
        assert!(matches!(
            proposition1_bound(&theta, &"2,1".parse().unwrap()),
            Err(Error::NotDerangement(_))
        ));
    }

    #[test]
    fn four_cycle_breaks_literal_exponent() {
        // (1, 1, -2): Tr^4 = 18, (Tr^2)^2 = 36, eta = 100/216
        let theta = CenteredSpectrum::from_values(&[1.0, 1.0, -2.0]);
        let four: CycleType = "4".parse().unwrap();
        assert!(close(eta(&theta).unwrap(), 100.0 / 216.0, 1e-14));
        let lhs = theta.theta_functional(&four);
        assert!(close(lhs, 18.0, 1e-13));
        assert!(proposition1_bound(&theta, &four).unwrap() < lhs);
        assert!(cycle_product_bound(&theta, &four).unwrap() >= lhs);
        // equality case of Cauchy-Schwarz: |theta| constant
        let flat = CenteredSpectrum::from_values(&[1.0, -1.0, 1.0, -1.0]);
        assert!(close(
            proposition1_bound(&flat, &four).unwrap(),
            flat.theta_functional(&four),
            1e-13
        ));
    }

    #[test]
    fn spectra_file_parsing() {
        let f = SpectraFile::parse(r#"{"hamiltonian":[0,1],"state":[1,0]}"#).unwrap();
        let (rho, h) = f.spectra(DEFAULT_NORMALIZATION_TOL).unwrap();
        assert_eq!(h.dim(), 2);
        assert!(rho.is_pure());
        assert!(SpectraFile::parse(r#"{"hamiltonian":[0,1]}"#).is_err());
        let bad = SpectraFile::parse(r#"{"hamiltonian":[0,1,2],"state":[1,0]}"#).unwrap();
        assert!(matches!(bad.spectra(1e-9), Err(Error::DimensionMismatch { .. })));
    }

    fn spectrum(max_d: usize) -> impl Strategy<Value = Vec<f64>> {
        (2..=max_d).prop_flat_map(|d| prop::collection::vec(-5.0f64..5.0, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn eta_in_range(v in spectrum(64)) {
            let c = CenteredSpectrum::from_values(&v);
            prop_assume!(c.hs_norm_sq() > 1e-12);
            let d = v.len() as f64;
            let e = eta(&c).unwrap();
            prop_assert!(e >= d.powi(-6) * (1.0 - 1e-12) && e <= 1.0 + 1e-12, "eta = {}", e);
        }

        #[test]
        fn schatten_monotone(v in spectrum(40)) {
            let c = HamiltonianSpectrum::new(v).unwrap();
            let qs = [1.0, 2.0, 3.0, 4.0, 6.0];
            for w in qs.windows(2) {
                prop_assert!(c.schatten_norm(w[1]) <= c.schatten_norm(w[0]) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn centered_has_zero_trace(v in spectrum(200)) {
            let c = CenteredSpectrum::from_values(&v);
            let s: f64 = c.deviations().iter().sum();
            let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!(s.abs() <= 1e-12 * scale);
        }

        #[test]
        fn part_one_selection_rule(v in spectrum(12), p in 2usize..7) {
            let c = CenteredSpectrum::from_values(&v);
            for class in partitions(p).unwrap() {
                if class.parts().contains(&1) {
                    prop_assert_eq!(c.theta_functional(&class), 0.0);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn derangement_functionals_bounded(v in spectrum(24)) {
            let c = CenteredSpectrum::from_values(&v);
            prop_assume!(c.hs_norm_sq() > 1e-9);
            for p in 2..=8 {
                for (class, _) in derangement_classes(p).unwrap() {
                    let lhs = c.theta_functional(&class).abs();
                    let rhs = cycle_product_bound(&c, &class).unwrap();
                    prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{}: {} > {}", class, lhs, rhs);
                    if class.parts().iter().all(|&a| a <= 3) {
                        let lit = proposition1_bound(&c, &class).unwrap();
                        prop_assert!((lit - rhs).abs() <= 1e-12 * rhs);
                    }
                }
            }
        }

        #[test]
        fn energy_range_brackets_mean(v in spectrum(16), seed in 0u64..1000) {
            let d = v.len();
            let mut w: Vec<f64> = (0..d).map(|i| ((i as u64 * 2654435761 + seed) % 97 + 1) as f64).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            let rho = StateSpectrum::new(w).unwrap();
            let h = HamiltonianSpectrum::new(v).unwrap();
            let (lo, hi) = energy_range(&rho, &h).unwrap();
            let diag: f64 = rho.populations().iter().zip(h.eigenvalues()).map(|(a, b)| a * b).sum();
            prop_assert!(lo <= hi + 1e-12);
            prop_assert!(lo <= diag + 1e-12 && diag <= hi + 1e-12);
            prop_assert!(lo <= h.mean() + 1e-12 && h.mean() <= hi + 1e-12);
        }
    }
}
