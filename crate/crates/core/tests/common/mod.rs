//! Test-side oracles that share no code with the library: raw permutation
//! enumeration, a dense floating-point inverse of the full `p! x p!` Gram
//! matrix and the double sum over `S_p x S_p`.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// All permutations of `0..p` in one-line notation, by insertion.
pub fn all_perms(p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for q in all_perms(p - 1) {
        for pos in 0..=q.len() {
            let mut r = q.clone();
            r.insert(pos, p - 1);
            out.push(r);
        }
    }
    out
}

pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut lens = Vec::new();
    for s in 0..perm.len() {
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len > 0 {
            lens.push(len);
        }
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    lens
}

/// `(a b)(i) = a(b(i))`.
pub fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

pub fn inverse(a: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; a.len()];
    for (i, &j) in a.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// `prod over cycles of sum_i x_i^len`.
pub fn trace_product(x: &[f64], lens: &[usize]) -> f64 {
    lens.iter()
        .map(|&l| x.iter().map(|v| v.powi(l as i32)).sum::<f64>())
        .product()
}

/// Dense inverse by Gauss-Jordan with partial pivoting.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Weingarten matrix `W = G^{-1}`, `G[s][t] = d^{cycles(s^{-1} t)}`, on `all_perms(p)`.
pub fn weingarten_matrix(p: usize, d: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let perms = all_perms(p);
    let g: Vec<Vec<f64>> = perms
        .iter()
        .map(|s| {
            let si = inverse(s);
            perms
                .iter()
                .map(|t| (d as f64).powi(cycle_lengths(&compose(&si, t)).len() as i32))
                .collect()
        })
        .collect();
    let w = invert(g);
    (perms, w)
}

/// `<(E - <E>)^p>` as `sum_{s,t} W[s][t] p_s(rho) p_t(H - Tr H / d)`.
pub fn brute_central_moment(rho: &[f64], h: &[f64], p: usize) -> f64 {
    let d = h.len();
    let mu = h.iter().sum::<f64>() / d as f64;
    let dh: Vec<f64> = h.iter().map(|e| e - mu).collect();
    let (perms, w) = weingarten_matrix(p, d);
    let pr: Vec<f64> = perms.iter().map(|s| trace_product(rho, &cycle_lengths(s))).collect();
    let ph: Vec<f64> = perms.iter().map(|t| trace_product(&dh, &cycle_lengths(t))).collect();
    let mut acc = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, wij) in row.iter().enumerate() {
            acc += wij * pr[i] * ph[j];
        }
    }
    acc
}

pub fn random_hamiltonian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Uniform on the probability simplex.
pub fn random_state(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn pure_state(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
