//! Mitigation overhead `M = ||Ã⁻¹||₁²` from a Hager-Higham one-norm estimate.

use serde::Serialize;

use crate::amatrix::ReducedAssignmentMatrix;
use crate::error::Result;
use crate::solver::{
    solve_direct, solve_direct_transpose, solve_iterative, solve_iterative_transpose, uses_direct, SolveOptions,
};

/// Cap on main-loop sweeps.
pub const MAX_SWEEPS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverheadReport {
    /// Lower bound on `||Ã⁻¹||₁`.
    pub norm_estimate: f64,
    /// `norm_estimate²`
    pub overhead: f64,
    /// Solves with `Ã`, including the final alternating-sign probe.
    pub hh_iterations: usize,
    /// Total solves with `Ã` and `Ãᵀ`.
    pub solves: usize,
}

impl OverheadReport {
    pub fn from_norm(norm_estimate: f64) -> Self {
        Self {
            norm_estimate,
            overhead: norm_estimate * norm_estimate,
            hh_iterations: 0,
            solves: 0,
        }
    }

    /// Upper bound on the standard deviation of a mitigated expectation value.
    pub fn sigma_bound(&self, shots: u64) -> f64 {
        sigma_bound(self, shots)
    }
}

/// `sqrt(M / shots)`
pub fn sigma_bound(report: &OverheadReport, shots: u64) -> f64 {
    assert!(shots >= 1, "shots must be at least 1");
    (report.overhead / shots as f64).sqrt()
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn signs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x >= 0.0 { 1.0 } else { -1.0 }).collect()
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Estimates `||B||₁` for `B = A⁻¹` given solves with `A` and `Aᵀ`.
///
/// Starts from the uniform vector, alternates between the two solves while the
/// estimate grows and the sign pattern changes, and finishes with the
/// alternating-sign probe. Deterministic for a given pair of solvers.
pub fn hager_higham<S, T>(n: usize, mut solve: S, mut solve_t: T) -> Result<OverheadReport>
where
    S: FnMut(&[f64]) -> Result<Vec<f64>>,
    T: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    assert!(n >= 1);
    let mut a_solves = 0;
    let mut t_solves = 0;

    let mut x = vec![1.0 / n as f64; n];
    let y = solve(&x)?;
    a_solves += 1;
    let mut est = one_norm(&y);
    if n == 1 {
        let mut r = OverheadReport::from_norm(est);
        r.hh_iterations = 1;
        r.solves = 1;
        return Ok(r);
    }
    let mut sign = signs(&y);
    let z = solve_t(&sign)?;
    t_solves += 1;
    let mut j = argmax_abs(&z);

    let mut sweep = 1;
    while sweep < MAX_SWEEPS {
        sweep += 1;
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        let y = solve(&x)?;
        a_solves += 1;
        let previous = est;
        est = est.max(one_norm(&y));
        let next_sign = signs(&y);
        if next_sign == sign || est <= previous {
            break;
        }
        sign = next_sign;
        if sweep == MAX_SWEEPS {
            break;
        }
        let z = solve_t(&sign)?;
        t_solves += 1;
        let last = j;
        j = argmax_abs(&z);
        if z[last].abs() == z[j].abs() {
            break;
        }
    }

    // (-1)^i (1 + i/(n-1)) guards against estimates stuck on a poor local maximum
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let mag = 1.0 + i as f64 / (n - 1) as f64;
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let y = solve(&alt)?;
    a_solves += 1;
    est = est.max(2.0 * one_norm(&y) / (3.0 * n as f64));

    let mut r = OverheadReport::from_norm(est);
    r.hh_iterations = a_solves;
    r.solves = a_solves + t_solves;
    Ok(r)
}

/// Estimates `||Ã⁻¹||₁`. The direct path reuses the matrix's cached LU
/// factorization; the iterative path solves with `Ã` and `Ãᵀ` under `opts`.
pub fn estimate_inv_one_norm(a: &ReducedAssignmentMatrix, opts: &SolveOptions) -> Result<OverheadReport> {
    if uses_direct(a, opts) {
        hager_higham(
            a.dim(),
            |b| solve_direct(a, b).map(|(x, _)| x),
            |b| solve_direct_transpose(a, b).map(|(x, _)| x),
        )
    } else {
        hager_higham(
            a.dim(),
            |b| solve_iterative(a, b, opts).map(|(x, _)| x),
            |b| solve_iterative_transpose(a, b, opts).map(|(x, _)| x),
        )
    }
}
