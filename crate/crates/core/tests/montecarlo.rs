mod common;

use common::*;
use orbit_energy::moments::central_moment;
use orbit_energy::montecarlo::{empirical_moments, haar_unitary, histogram, sample_energy, worker_rng, Bootstrap};
use orbit_energy::{HamiltonianSpectrum, StateSpectrum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, d: usize) -> (StateSpectrum, HamiltonianSpectrum) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        StateSpectrum::new(random_state(&mut rng, d)).unwrap(),
        HamiltonianSpectrum::new(random_hamiltonian(&mut rng, d)).unwrap(),
    )
}

#[test]
fn runs_are_reproducible() {
    let (rho, h) = instance(1, 6);
    let a = sample_energy(&rho, &h, 3000, 77, 3).unwrap();
    let b = sample_energy(&rho, &h, 3000, 77, 3).unwrap();
    assert_eq!(a.energies, b.energies);
    let c = sample_energy(&rho, &h, 3000, 78, 3).unwrap();
    assert_ne!(a.energies, c.energies);
    // worker 0 owns the first chunk whatever the split
    let one = sample_energy(&rho, &h, 1000, 77, 1).unwrap();
    let three = sample_energy(&rho, &h, 3000, 77, 3).unwrap();
    assert_eq!(one.energies, three.energies[..1000]);
}

#[test]
fn energies_stay_in_orbit_range() {
    let (rho, h) = instance(2, 9);
    let run = sample_energy(&rho, &h, 5000, 5, 2).unwrap();
    let tol = 1e-12;
    assert!(run
        .energies
        .iter()
        .all(|&e| e >= run.meta.e_min - tol && e <= run.meta.e_max + tol));
    let hist = histogram(&run, None).unwrap();
    assert!((hist.integral() - 1.0).abs() < 1e-9);
}

/// `|U_11|^2` of a Haar unitary is Beta(1, d-1): mean `1/d`, second moment `2/(d(d+1))`.
fn check_first_entry<F: Fn(&orbit_energy::montecarlo::Unitary) -> f64>(d: usize, seed: u64, f: F) {
    let n = 40_000;
    let mut rng = worker_rng(seed, 0);
    let xs: Vec<f64> = (0..n).map(|_| f(&haar_unitary(d, &mut rng))).collect();
    let df = d as f64;
    for (k, want) in [(1, 1.0 / df), (2, 2.0 / (df * (df + 1.0)))] {
        let vals: Vec<f64> = xs.iter().map(|x| x.powi(k)).collect();
        let m = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((m - want).abs() < 4.0 * sd / (n as f64).sqrt(), "k={k}: {m} vs {want}");
    }
}

#[test]
fn invariant_under_fixed_multiplication() {
    let d = 5;
    let v = haar_unitary(d, &mut worker_rng(999, 0));
    check_first_entry(d, 1, |u| u.get(0, 0).norm_sqr());
    check_first_entry(d, 2, |u| u.matmul(&v).get(0, 0).norm_sqr());
    check_first_entry(d, 3, |u| v.matmul(u).get(0, 0).norm_sqr());
}

#[test]
fn sample_moments_match_exact_moments() {
    for (seed, d) in [(10u64, 4usize), (11, 6), (12, 8)] {
        let (rho, h) = instance(seed, d);
        let run = sample_energy(&rho, &h, 60_000, seed, 2).unwrap();
        let n = run.energies.len() as f64;
        let mean = run.energies.iter().sum::<f64>() / n;
        let emp = empirical_moments(&run, 4, &Bootstrap::default()).unwrap();
        let mean_se = (emp[1].value / n).sqrt();
        assert!((mean - h.mean()).abs() < 4.0 * mean_se, "d={d} mean");
        for m in &emp[1..] {
            let exact = central_moment(&rho, &h, m.p).unwrap();
            assert!(
                (m.value - exact).abs() < 4.0 * m.se,
                "d={d} p={}: {} vs {exact} (se {})",
                m.p,
                m.value,
                m.se
            );
        }
    }
}

#[test]
fn bootstrap_error_shrinks_with_n() {
    let (rho, h) = instance(3, 5);
    let small = sample_energy(&rho, &h, 4_000, 1, 1).unwrap();
    let large = sample_energy(&rho, &h, 64_000, 1, 1).unwrap();
    let se = |r| empirical_moments(r, 2, &Bootstrap::default()).unwrap()[1].se;
    let ratio = se(&small) / se(&large);
    assert!(ratio > 2.5 && ratio < 6.5, "ratio {ratio}");
}
