//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical code.
#![allow(dead_code)]

use mfree_core::calibration::{CalibrationSet, SingleQubitCal};
use mfree_core::{BitString, CountsDistribution};
use rand::Rng;

pub fn random_cal(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> CalibrationSet {
    let singles = (0..n)
        .map(|_| SingleQubitCal::from_flip_rates(rng.random_range(lo..=hi), rng.random_range(lo..=hi)))
        .collect();
    CalibrationSet::tensored(singles).unwrap()
}

pub fn random_string(n: usize, rng: &mut impl Rng) -> String {
    (0..n).map(|_| if rng.random::<bool>() { '1' } else { '0' }).collect()
}

/// Bit of qubit `k` read from the text form, where the last character is qubit 0.
pub fn char_bit(s: &str, k: usize) -> usize {
    let b = s.as_bytes();
    (b[b.len() - 1 - k] - b'0') as usize
}

pub fn text_distance(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).filter(|(x, y)| x != y).count()
}

pub fn index_string(n: usize, i: usize) -> String {
    (0..n).rev().map(|k| if (i >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Product over qubits of S_k[measured][prepared], walking the text form.
pub fn naive_tensored(cal: &CalibrationSet, row: &str, col: &str) -> f64 {
    (0..cal.num_qubits())
        .map(|k| cal.single(k).p[char_bit(row, k)][char_bit(col, k)])
        .product()
}

/// Full `2^n x 2^n` matrix as nested rows, built by repeated Kronecker products
/// with qubit n-1 as the most significant factor.
pub fn naive_kron(cal: &CalibrationSet) -> Vec<Vec<f64>> {
    let mut m = vec![vec![1.0]];
    for k in (0..cal.num_qubits()).rev() {
        let s = cal.single(k).p;
        let d = m.len();
        let mut next = vec![vec![0.0; 2 * d]; 2 * d];
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        next[i * 2 + a][j * 2 + b] = v * s[a][b];
                    }
                }
            }
        }
        m = next;
    }
    m
}

/// Gaussian elimination with partial pivoting on a dense row-major copy.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        x.swap(c, p);
        let pivot = m[c][c];
        assert!(pivot != 0.0, "singular");
        for r in c + 1..n {
            let f = m[r][c] / pivot;
            if f != 0.0 {
                let (top, bottom) = m.split_at_mut(r);
                for (dst, src) in bottom[0][c..].iter_mut().zip(&top[c][c..]) {
                    *dst -= f * src;
                }
                x[r] -= f * x[c];
            }
        }
    }
    for c in (0..n).rev() {
        let mut s = x[c];
        for j in c + 1..n {
            s -= m[c][j] * x[j];
        }
        x[c] = s / m[c][c];
    }
    x
}

/// Explicit inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let pivot = m[c][c];
        assert!(pivot != 0.0, "singular");
        m[c].iter_mut().for_each(|v| *v /= pivot);
        let pivot_row = m[c].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[c];
            if r != c && f != 0.0 {
                for (dst, src) in row.iter_mut().zip(&pivot_row) {
                    *dst -= f * src;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Max absolute column sum of the explicit inverse.
pub fn inverse_one_norm(a: &[Vec<f64>]) -> f64 {
    let inv = gauss_inverse(a);
    (0..a.len())
        .map(|j| inv.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Reduced matrix over `basis` computed straight from the text forms:
/// full-matrix entries within `distance`, columns rescaled to sum to one.
pub fn naive_reduced(cal: &CalibrationSet, basis: &[String], distance: usize) -> Vec<Vec<f64>> {
    let m = basis.len();
    let mut a = vec![vec![0.0; m]; m];
    for (c, col) in basis.iter().enumerate() {
        let mut norm = 0.0;
        for (r, row) in basis.iter().enumerate() {
            if text_distance(row, col) <= distance {
                a[r][c] = naive_tensored(cal, row, col);
                norm += a[r][c];
            }
        }
        for row in a.iter_mut() {
            row[c] /= norm;
        }
    }
    a
}

/// Euclidean projection onto the probability simplex by trying every support
/// subset and keeping the closest feasible candidate.
pub fn brute_force_projection(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as f64;
        let total: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
        let shift = (1.0 - total) / size;
        let cand: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { w[i] + shift } else { 0.0 })
            .collect();
        if cand.iter().any(|&v| v < -1e-15) {
            continue;
        }
        let dist: f64 = cand.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, cand));
        }
    }
    best.unwrap().1
}

/// Counts with every one of the `2^n` strings observed at least once.
pub fn full_support_counts(n: usize, rng: &mut impl Rng) -> CountsDistribution {
    let entries = (0..1u64 << n).map(|i| (BitString::from_u64(n, i).unwrap(), rng.random_range(1..=200u64)));
    CountsDistribution::new(n, entries).unwrap()
}

/// Random weights summing to one with some negative entries.
pub fn random_quasi_weights(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-0.4..1.0)).collect();
    let shift = (1.0 - w.iter().sum::<f64>()) / n as f64;
    w.iter_mut().for_each(|v| *v += shift);
    w
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_stddev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
