use std::sync::Arc;

use smallvec::SmallVec;

use crate::bitstring::BitString;
use crate::calibration::{pair_index, CalibrationSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorModel {
    /// Independent per-qubit errors: a product of 2x2 entries.
    Tensored,
    /// Uniform mixture over qubit pairs of a 4x4 pair channel times singles on the rest.
    Correlated,
}

/// Computes individual assignment-matrix entries from calibration data,
/// without forming the matrix.
#[derive(Clone, Debug)]
pub struct ElementOracle {
    cal: Arc<CalibrationSet>,
    model: ErrorModel,
}

impl ElementOracle {
    /// Picks the correlated model when pair matrices are present.
    pub fn new(cal: impl Into<Arc<CalibrationSet>>) -> Self {
        let cal = cal.into();
        let model = if cal.is_correlated() {
            ErrorModel::Correlated
        } else {
            ErrorModel::Tensored
        };
        Self { cal, model }
    }

    pub fn with_model(cal: impl Into<Arc<CalibrationSet>>, model: ErrorModel) -> Result<Self> {
        let cal = cal.into();
        if model == ErrorModel::Correlated && !cal.is_correlated() {
            return Err(Error::NotCorrelated);
        }
        Ok(Self { cal, model })
    }

    pub fn model(&self) -> ErrorModel {
        self.model
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.cal
    }

    pub fn num_qubits(&self) -> usize {
        self.cal.num_qubits()
    }

    /// Probability that prepared `col` is read out as `row`.
    pub fn element(&self, row: &BitString, col: &BitString) -> Result<f64> {
        check_widths(&self.cal, row, col)?;
        Ok(self.element_unchecked(row, col))
    }

    #[inline]
    pub(crate) fn element_unchecked(&self, row: &BitString, col: &BitString) -> f64 {
        match self.model {
            ErrorModel::Tensored => tensored_unchecked(&self.cal, row, col),
            ErrorModel::Correlated => correlated_unchecked(&self.cal, row, col),
        }
    }
}

fn check_widths(cal: &CalibrationSet, row: &BitString, col: &BitString) -> Result<()> {
    let n = cal.num_qubits();
    for s in [row, col] {
        if s.width() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                found: s.width(),
            });
        }
    }
    Ok(())
}

/// Tensored entry: the product over qubits of `S_k[row_k][col_k]`.
pub fn tensored_element(cal: &CalibrationSet, row: &BitString, col: &BitString) -> Result<f64> {
    check_widths(cal, row, col)?;
    Ok(tensored_unchecked(cal, row, col))
}

/// Pairwise-correlated entry, averaging over all `N(N-1)/2` pairs.
pub fn correlated_element(cal: &CalibrationSet, row: &BitString, col: &BitString) -> Result<f64> {
    if !cal.is_correlated() {
        return Err(Error::NotCorrelated);
    }
    check_widths(cal, row, col)?;
    Ok(correlated_unchecked(cal, row, col))
}

#[inline]
fn tensored_unchecked(cal: &CalibrationSet, row: &BitString, col: &BitString) -> f64 {
    let singles = cal.singles();
    let mut prod = 1.0;
    for (w, (&rw, &cw)) in row.words().iter().zip(col.words()).enumerate() {
        let base = w * 64;
        let end = (base + 64).min(singles.len());
        for (i, s) in singles[base..end].iter().enumerate() {
            prod *= s.get(((rw >> i) & 1) as usize, ((cw >> i) & 1) as usize);
        }
    }
    prod
}

fn correlated_unchecked(cal: &CalibrationSet, row: &BitString, col: &BitString) -> f64 {
    let n = cal.num_qubits();
    let pairs = cal.pairs().expect("correlated model carries pairs");
    let singles = cal.singles();

    let factors: SmallVec<[f64; 64]> = (0..n)
        .map(|m| singles[m].get(row.bit(m), col.bit(m)))
        .collect();
    // prefix[i] = f_0 ... f_{i-1}, suffix[i] = f_i ... f_{n-1}
    let mut prefix: SmallVec<[f64; 128]> = SmallVec::from_elem(1.0, n + 1);
    let mut suffix: SmallVec<[f64; 128]> = SmallVec::from_elem(1.0, n + 1);
    for i in 0..n {
        prefix[i + 1] = prefix[i] * factors[i];
    }
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * factors[i];
    }

    let mut total = 0.0;
    for l in 0..n {
        let (ql, pl) = (row.bit(l), col.bit(l));
        // product of factors strictly between l and k
        let mut between = 1.0;
        for k in l + 1..n {
            let a = 2 * row.bit(k) + ql;
            let b = 2 * col.bit(k) + pl;
            total += pairs[pair_index(k, l)].get(a, b) * prefix[l] * between * suffix[k + 1];
            between *= factors[k];
        }
    }
    total / (n * (n - 1) / 2) as f64
}
