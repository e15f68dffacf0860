//! Assignment-matrix entries and the reduced, column-renormalized matrix over
//! the observed bit-strings.

mod csc;
mod memory;
mod oracle;

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bitstring::{BitString, CountsDistribution};
use crate::calibration::CalibrationSet;
use crate::error::{Error, Result};
use crate::solver::DenseLu;

pub use csc::CscMatrix;
pub use memory::{estimate_csc_memory, CscMemoryEstimate, PIB};
pub use oracle::{correlated_element, tensored_element, ElementOracle, ErrorModel};

pub const DEFAULT_DISTANCE: usize = 3;
/// Largest basis materialized densely when storage is chosen automatically.
pub const DENSE_LIMIT: usize = 4096;
pub const BRUTE_FORCE_LIMIT: usize = 14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StorageKind {
    /// Dense up to [`DENSE_LIMIT`] basis states, implicit beyond.
    #[default]
    Auto,
    Dense,
    Csc,
    Implicit,
}

impl StorageKind {
    pub fn resolve(self, dim: usize) -> StorageKind {
        match self {
            StorageKind::Auto if dim <= DENSE_LIMIT => StorageKind::Dense,
            StorageKind::Auto => StorageKind::Implicit,
            other => other,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(DMatrix<f64>),
    Csc(CscMatrix),
    /// Entries are recomputed from the oracle on every access.
    Implicit,
}

/// The assignment matrix restricted to an observed basis, with entries beyond
/// Hamming distance `D` dropped and each column renormalized to sum to one.
#[derive(Debug)]
pub struct ReducedAssignmentMatrix {
    basis: Vec<BitString>,
    distance: usize,
    col_norms: Vec<f64>,
    diagonal: Vec<f64>,
    storage: Storage,
    oracle: ElementOracle,
    pub(crate) lu: OnceLock<Option<DenseLu>>,
}

/// Eq.-5 denominators: for each column, the sum of oracle entries over basis
/// rows within distance `D`.
pub fn column_norms(oracle: &ElementOracle, basis: &[BitString], distance: usize) -> Result<Vec<f64>> {
    check_basis(oracle, basis)?;
    Ok(column_norms_unchecked(oracle, basis, distance))
}

fn column_norms_unchecked(oracle: &ElementOracle, basis: &[BitString], distance: usize) -> Vec<f64> {
    let d = distance as u32;
    basis
        .par_iter()
        .map(|col| {
            basis
                .iter()
                .filter(|row| row.distance_unchecked(col) <= d)
                .map(|row| oracle.element_unchecked(row, col))
                .sum()
        })
        .collect()
}

fn check_basis(oracle: &ElementOracle, basis: &[BitString]) -> Result<()> {
    let n = oracle.num_qubits();
    if basis.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if let Some(bad) = basis.iter().find(|b| b.width() != n) {
        return Err(Error::WidthMismatch {
            expected: n,
            found: bad.width(),
        });
    }
    Ok(())
}

/// A single reduced entry. `basis` must be sorted and `col_norms` aligned with it.
pub fn reduced_element(
    oracle: &ElementOracle,
    basis: &[BitString],
    col_norms: &[f64],
    row: &BitString,
    col: &BitString,
    distance: usize,
) -> Result<f64> {
    if col_norms.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: col_norms.len(),
        });
    }
    basis
        .binary_search(row)
        .map_err(|_| Error::NotInBasis(row.to_string()))?;
    let c = basis
        .binary_search(col)
        .map_err(|_| Error::NotInBasis(col.to_string()))?;
    if row.distance_unchecked(col) > distance as u32 {
        return Ok(0.0);
    }
    let norm = col_norms[c];
    if norm <= 0.0 {
        return Err(Error::ZeroColumnNorm(col.to_string()));
    }
    Ok(oracle.element(row, col)? / norm)
}

/// Builds the reduced matrix over the bit-strings observed in `noisy`.
pub fn build_reduced(
    cal: &CalibrationSet,
    noisy: &CountsDistribution,
    distance: usize,
    storage: StorageKind,
) -> Result<ReducedAssignmentMatrix> {
    ReducedAssignmentMatrix::from_basis(
        ElementOracle::new(cal.clone()),
        noisy.keys().cloned().collect(),
        distance,
        storage,
    )
}

impl ReducedAssignmentMatrix {
    /// Builds over an arbitrary basis; duplicates are removed and the basis sorted.
    pub fn from_basis(
        oracle: ElementOracle,
        mut basis: Vec<BitString>,
        distance: usize,
        storage: StorageKind,
    ) -> Result<Self> {
        basis.sort_unstable();
        basis.dedup();
        check_basis(&oracle, &basis)?;
        let col_norms = column_norms_unchecked(&oracle, &basis, distance);
        if let Some(c) = col_norms.iter().position(|&n| !(n > 0.0)) {
            return Err(Error::ZeroColumnNorm(basis[c].to_string()));
        }
        let diagonal: Vec<f64> = basis
            .iter()
            .zip(&col_norms)
            .map(|(b, &n)| oracle.element_unchecked(b, b) / n)
            .collect();
        let dim = basis.len();
        let d = distance as u32;

        let storage = match storage.resolve(dim) {
            StorageKind::Dense => {
                let mut m = DMatrix::<f64>::zeros(dim, dim);
                m.as_mut_slice()
                    .par_chunks_mut(dim)
                    .enumerate()
                    .for_each(|(c, column)| {
                        let col = &basis[c];
                        for (r, row) in basis.iter().enumerate() {
                            if row.distance_unchecked(col) <= d {
                                column[r] = oracle.element_unchecked(row, col) / col_norms[c];
                            }
                        }
                    });
                Storage::Dense(m)
            }
            StorageKind::Csc => {
                let columns = (0..dim)
                    .into_par_iter()
                    .map(|c| {
                        let col = &basis[c];
                        basis
                            .iter()
                            .enumerate()
                            .filter(|(_, row)| row.distance_unchecked(col) <= d)
                            .map(|(r, row)| (r, oracle.element_unchecked(row, col) / col_norms[c]))
                            .collect()
                    })
                    .collect();
                Storage::Csc(CscMatrix::from_columns(dim, columns))
            }
            StorageKind::Implicit | StorageKind::Auto => Storage::Implicit,
        };

        Ok(Self {
            basis,
            distance,
            col_norms,
            diagonal,
            storage,
            oracle,
            lu: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BitString] {
        &self.basis
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    /// Diagonal entries, always strictly positive.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn storage_kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense(_) => StorageKind::Dense,
            Storage::Csc(_) => StorageKind::Csc,
            Storage::Implicit => StorageKind::Implicit,
        }
    }

    pub fn oracle(&self) -> &ElementOracle {
        &self.oracle
    }

    pub fn index_of(&self, s: &BitString) -> Option<usize> {
        self.basis.binary_search(s).ok()
    }

    /// Entry `(row, col)` by basis index.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(row, col)],
            Storage::Csc(m) => m.get(row, col),
            Storage::Implicit => self.implicit_entry(row, col),
        }
    }

    #[inline]
    pub(crate) fn implicit_entry(&self, row: usize, col: usize) -> f64 {
        let (r, c) = (&self.basis[row], &self.basis[col]);
        if r.distance_unchecked(c) > self.distance as u32 {
            0.0
        } else {
            self.oracle.element_unchecked(r, c) / self.col_norms[col]
        }
    }

    /// Materializes a dense copy regardless of storage.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            _ => DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.get(r, c)),
        }
    }

    /// Bytes held by the stored entries (zero for implicit storage).
    pub fn storage_bytes(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.len() * 8,
            Storage::Csc(m) => m.nnz() * 16 + m.col_ptrs().len() * 8,
            Storage::Implicit => 0,
        }
    }
}

/// The complete `2^N x 2^N` assignment matrix, for verification only.
/// Row/column index is the bit-string's integer value.
pub fn build_full_matrix(cal: &CalibrationSet) -> Result<DMatrix<f64>> {
    build_full_matrix_with_limit(cal, BRUTE_FORCE_LIMIT)
}

pub fn build_full_matrix_with_limit(cal: &CalibrationSet, limit: usize) -> Result<DMatrix<f64>> {
    let n = cal.num_qubits();
    if n > limit {
        return Err(Error::BruteForceLimit { qubits: n, limit });
    }
    let single = |k: usize| DMatrix::from_fn(2, 2, |i, j| cal.single(k).get(i, j));
    match cal.pairs() {
        None => {
            // S_{N-1} ⊗ ... ⊗ S_0
            let mut m = single(n - 1);
            for k in (0..n - 1).rev() {
                m = m.kronecker(&single(k));
            }
            Ok(m)
        }
        Some(pairs) => {
            let dim = 1usize << n;
            let npairs = pairs.len() as f64;
            let bit = |x: usize, k: usize| (x >> k) & 1;
            Ok(DMatrix::from_fn(dim, dim, |row, col| {
                let mut total = 0.0;
                for p in pairs {
                    let a = 2 * bit(row, p.k) + bit(row, p.l);
                    let b = 2 * bit(col, p.k) + bit(col, p.l);
                    let mut term = p.get(a, b);
                    for m in (0..n).filter(|&m| m != p.k && m != p.l) {
                        term *= cal.single(m).get(bit(row, m), bit(col, m));
                    }
                    total += term;
                }
                total / npairs
            }))
        }
    }
}
