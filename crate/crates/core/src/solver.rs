//! Solving the reduced system `Ã x = p_noisy`, directly or with
//! Jacobi-preconditioned Krylov iteration.

use std::fmt;

use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut, Dyn, PermutationSequence};
use rayon::prelude::*;
use serde::Serialize;

use crate::amatrix::{build_reduced, ReducedAssignmentMatrix, Storage, StorageKind, DENSE_LIMIT};
use crate::bitstring::{CountsDistribution, QuasiDistribution, QUASI_SUM_TOL};
use crate::calibration::CalibrationSet;
use crate::error::{Error, Result};
use crate::krylov::{bicgstab, gmres, KrylovOptions, KrylovOutcome, LinearOperator};
use crate::overhead::{estimate_inv_one_norm, OverheadReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Direct when the basis fits [`DENSE_LIMIT`], iterative otherwise.
    #[default]
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Gmres,
    Bicgstab,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    /// Absolute tolerance on the preconditioned residual 2-norm.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub algorithm: Algorithm,
    /// Apply the Jacobi preconditioner (on by default).
    pub precondition: bool,
    pub storage: StorageKind,
    /// Bound on `|sum(x) - sum(b)|` required before an iterative solve counts
    /// as converged.
    pub sum_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            tol: 1e-5,
            max_iter: 1024,
            restart: 30,
            algorithm: Algorithm::Gmres,
            precondition: true,
            storage: StorageKind::Auto,
            sum_tol: QUASI_SUM_TOL,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidArgument("max_iter and restart must be at least 1".into()));
        }
        if !(self.sum_tol > 0.0) {
            return Err(Error::InvalidArgument("sum tolerance must be positive".into()));
        }
        Ok(())
    }

    fn krylov(&self, sum_check: bool) -> KrylovOptions {
        KrylovOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            restart: self.restart,
            sum_tol: sum_check.then_some(self.sum_tol),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodUsed {
    Direct,
    Gmres,
    Bicgstab,
}

impl fmt::Display for MethodUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodUsed::Direct => "direct",
            MethodUsed::Gmres => "gmres",
            MethodUsed::Bicgstab => "bicgstab",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: MethodUsed,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub dim: usize,
    pub converged: bool,
    /// Solver-owned scratch in bytes, excluding the matrix itself.
    pub workspace_bytes: usize,
}

/// Diagnostics carried by a failed iterative solve.
#[derive(Clone, Debug)]
pub struct NotConverged {
    pub method: MethodUsed,
    /// Best iterate found.
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub dim: usize,
}

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} did not converge on a {}-dimensional system after {} iterations (residual {:e})",
            self.method, self.dim, self.iterations, self.residual
        )
    }
}

/// Cached LU factors `P A = L U`.
pub(crate) struct DenseLu {
    p: PermutationSequence<Dyn>,
    l: DMatrix<f64>,
    u: DMatrix<f64>,
}

impl fmt::Debug for DenseLu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseLu({}x{})", self.l.nrows(), self.l.ncols())
    }
}

impl DenseLu {
    fn factor(m: &DMatrix<f64>) -> Option<Self> {
        let (p, l, u) = m.clone().lu().unpack();
        if u.diagonal().iter().any(|d| *d == 0.0 || !d.is_finite()) {
            return None;
        }
        Some(Self { p, l, u })
    }

    fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let mut v = DVector::from_column_slice(b);
        self.p.permute_rows(&mut v);
        if !self.l.solve_lower_triangular_mut(&mut v) || !self.u.solve_upper_triangular_mut(&mut v) {
            return None;
        }
        Some(v.as_slice().to_vec())
    }

    fn solve_transpose(&self, b: &[f64]) -> Option<Vec<f64>> {
        let mut v = DVector::from_column_slice(b);
        if !self.u.tr_solve_upper_triangular_mut(&mut v) || !self.l.tr_solve_lower_triangular_mut(&mut v) {
            return None;
        }
        self.p.inv_permute_rows(&mut v);
        Some(v.as_slice().to_vec())
    }
}

impl ReducedAssignmentMatrix {
    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `Ã x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `Ãᵀ x`
    pub fn rmatvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut y = vec![0.0; self.dim()];
        self.rmatvec_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        match self.storage() {
            Storage::Dense(m) => {
                let n = self.dim();
                DVectorViewMut::from_slice(y, n).gemv(1.0, m, &DVectorView::from_slice(x, n), 0.0);
            }
            Storage::Csc(m) => m.matvec_into(x, y),
            Storage::Implicit => {
                let basis = self.basis();
                let d = self.distance() as u32;
                let oracle = self.oracle();
                let norms = self.col_norms();
                y.par_iter_mut().enumerate().for_each(|(r, yr)| {
                    let row = &basis[r];
                    let mut acc = 0.0;
                    for ((col, &xc), n) in basis.iter().zip(x).zip(norms) {
                        if xc != 0.0 && row.distance_unchecked(col) <= d {
                            acc += oracle.element_unchecked(row, col) / n * xc;
                        }
                    }
                    *yr = acc;
                });
            }
        }
    }

    pub(crate) fn rmatvec_into(&self, x: &[f64], y: &mut [f64]) {
        match self.storage() {
            Storage::Dense(m) => {
                let n = self.dim();
                DVectorViewMut::from_slice(y, n).gemv_tr(1.0, m, &DVectorView::from_slice(x, n), 0.0);
            }
            Storage::Csc(m) => m.rmatvec_into(x, y),
            Storage::Implicit => {
                let basis = self.basis();
                let d = self.distance() as u32;
                let oracle = self.oracle();
                let norms = self.col_norms();
                y.par_iter_mut().enumerate().for_each(|(c, yc)| {
                    let col = &basis[c];
                    let n = norms[c];
                    let mut acc = 0.0;
                    for (row, &xr) in basis.iter().zip(x) {
                        if xr != 0.0 && row.distance_unchecked(col) <= d {
                            acc += oracle.element_unchecked(row, col) / n * xr;
                        }
                    }
                    *yc = acc;
                });
            }
        }
    }

    fn factorization(&self) -> Result<&DenseLu> {
        let Storage::Dense(m) = self.storage() else {
            return Err(Error::RequiresDense);
        };
        self.lu
            .get_or_init(|| DenseLu::factor(m))
            .as_ref()
            .ok_or(Error::Singular {
                dim: self.dim(),
                distance: self.distance(),
            })
    }

    /// True once a direct solve has factored the matrix.
    pub fn has_cached_factorization(&self) -> bool {
        matches!(self.lu.get(), Some(Some(_)))
    }

    fn inverse_diagonal(&self) -> Result<Vec<f64>> {
        self.diagonal()
            .iter()
            .zip(self.basis())
            .map(|(&d, s)| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "diagonal entry for {s} is {d}; Jacobi preconditioner undefined"
                    )))
                }
            })
            .collect()
    }
}

impl LinearOperator for ReducedAssignmentMatrix {
    fn dim(&self) -> usize {
        self.basis().len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y)
    }
}

/// `Ãᵀ` as an operator.
pub struct Transposed<'a>(pub &'a ReducedAssignmentMatrix);

impl LinearOperator for Transposed<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.rmatvec_into(x, y)
    }
}

fn residual_norm(a: &ReducedAssignmentMatrix, x: &[f64], b: &[f64], transpose: bool) -> f64 {
    let mut y = vec![0.0; a.dim()];
    if transpose {
        a.rmatvec_into(x, &mut y);
    } else {
        a.matvec_into(x, &mut y);
    }
    y.iter().zip(b).map(|(yi, bi)| (yi - bi).powi(2)).sum::<f64>().sqrt()
}

fn direct(a: &ReducedAssignmentMatrix, b: &[f64], transpose: bool) -> Result<(Vec<f64>, SolveReport)> {
    a.check_len(b)?;
    let lu = a.factorization()?;
    let x = if transpose { lu.solve_transpose(b) } else { lu.solve(b) };
    let x = x.ok_or(Error::Singular {
        dim: a.dim(),
        distance: a.distance(),
    })?;
    let report = SolveReport {
        method: MethodUsed::Direct,
        iterations: 0,
        final_residual_norm: residual_norm(a, &x, b, transpose),
        dim: a.dim(),
        converged: true,
        workspace_bytes: 2 * a.dim() * a.dim() * 8,
    };
    Ok((x, report))
}

/// Solves with the cached LU factorization, computing it on first use.
pub fn solve_direct(a: &ReducedAssignmentMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    direct(a, b, false)
}

/// Solves `Ãᵀ x = b` with the same cached factorization.
pub fn solve_direct_transpose(a: &ReducedAssignmentMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    direct(a, b, true)
}

fn iterative(
    a: &ReducedAssignmentMatrix,
    b: &[f64],
    opts: &SolveOptions,
    transpose: bool,
) -> Result<(Vec<f64>, SolveReport)> {
    opts.validate()?;
    a.check_len(b)?;
    let inv_diag = a.inverse_diagonal()?;
    let pre = opts.precondition.then_some(inv_diag.as_slice());
    // column sums are one, so sum(x) = sum(b) only holds for the forward system
    let kopts = opts.krylov(!transpose);
    let x0 = b.to_vec();
    let outcome: KrylovOutcome = match (opts.algorithm, transpose) {
        (Algorithm::Gmres, false) => gmres(a, pre, b, x0, &kopts),
        (Algorithm::Gmres, true) => gmres(&Transposed(a), pre, b, x0, &kopts),
        (Algorithm::Bicgstab, false) => bicgstab(a, pre, b, x0, &kopts),
        (Algorithm::Bicgstab, true) => bicgstab(&Transposed(a), pre, b, x0, &kopts),
    };
    let method = match opts.algorithm {
        Algorithm::Gmres => MethodUsed::Gmres,
        Algorithm::Bicgstab => MethodUsed::Bicgstab,
    };
    if !outcome.converged {
        return Err(Error::NotConverged(Box::new(NotConverged {
            method,
            x: outcome.x,
            residual: outcome.residual,
            iterations: outcome.iterations,
            dim: a.dim(),
        })));
    }
    // scaled copy of x made by each implicit product
    let matvec_scratch = if a.storage_kind() == StorageKind::Implicit { a.dim() } else { 0 };
    let report = SolveReport {
        method,
        iterations: outcome.iterations,
        final_residual_norm: outcome.residual,
        dim: a.dim(),
        converged: true,
        workspace_bytes: (outcome.workspace_values + inv_diag.len() + matvec_scratch) * 8,
    };
    Ok((outcome.x, report))
}

/// Solves `P⁻¹Ã x = P⁻¹b` with `P` the diagonal of `Ã`, starting from `x = b`.
pub fn solve_iterative(a: &ReducedAssignmentMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    iterative(a, b, opts, false)
}

pub fn solve_iterative_transpose(
    a: &ReducedAssignmentMatrix,
    b: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    iterative(a, b, opts, true)
}

/// Whether `opts` selects the direct path for this matrix.
pub fn uses_direct(a: &ReducedAssignmentMatrix, opts: &SolveOptions) -> bool {
    match opts.method {
        Method::Direct => true,
        Method::Iterative => false,
        Method::Auto => a.storage_kind() == StorageKind::Dense && a.dim() <= DENSE_LIMIT,
    }
}

/// Dispatches on `opts.method`.
pub fn solve(a: &ReducedAssignmentMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    if uses_direct(a, opts) {
        solve_direct(a, b)
    } else {
        solve_iterative(a, b, opts)
    }
}

/// Quasi-probabilities plus diagnostics for one mitigation run.
#[derive(Clone, Debug)]
pub struct MitigationResult {
    pub quasi: QuasiDistribution,
    pub report: SolveReport,
    pub overhead: Option<OverheadReport>,
}

/// Builds the reduced matrix for `noisy` with storage chosen from `opts`.
pub fn reduced_system(
    cal: &CalibrationSet,
    noisy: &CountsDistribution,
    distance: usize,
    opts: &SolveOptions,
) -> Result<ReducedAssignmentMatrix> {
    opts.validate()?;
    cal.validate()?;
    if noisy.width() != cal.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: cal.num_qubits(),
            found: noisy.width(),
        });
    }
    let storage = match (opts.method, opts.storage) {
        (Method::Direct, StorageKind::Auto) => StorageKind::Dense,
        (Method::Iterative | Method::Auto, s) => s.resolve(noisy.len()),
        (_, s) => s,
    };
    build_reduced(cal, noisy, distance, storage)
}

fn run(
    cal: &CalibrationSet,
    noisy: &CountsDistribution,
    distance: usize,
    opts: &SolveOptions,
    with_overhead: bool,
) -> Result<MitigationResult> {
    let a = reduced_system(cal, noisy, distance, opts)?;
    let b: Vec<f64> = noisy.normalize().into_values().collect();
    let (x, report) = solve(&a, &b, opts)?;
    let quasi = QuasiDistribution::new(noisy.width(), a.basis().iter().cloned().zip(x))?;
    let overhead = if with_overhead {
        Some(estimate_inv_one_norm(&a, opts)?)
    } else {
        None
    };
    Ok(MitigationResult {
        quasi,
        report,
        overhead,
    })
}

/// Mitigates readout errors in `noisy`, returning quasi-probabilities over
/// the observed bit-strings.
pub fn mitigate(
    cal: &CalibrationSet,
    noisy: &CountsDistribution,
    distance: usize,
    opts: &SolveOptions,
) -> Result<(QuasiDistribution, SolveReport)> {
    let r = run(cal, noisy, distance, opts, false)?;
    Ok((r.quasi, r.report))
}

/// As [`mitigate`], also estimating the mitigation overhead.
pub fn mitigate_with_overhead(
    cal: &CalibrationSet,
    noisy: &CountsDistribution,
    distance: usize,
    opts: &SolveOptions,
) -> Result<MitigationResult> {
    run(cal, noisy, distance, opts, true)
}
