use serde::Serialize;

use crate::error::{Error, Result};

/// Bytes needed to hold the full `2^N`-column assignment matrix in CSC form,
/// truncated to Hamming distance `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CscMemoryEstimate {
    pub num_qubits: u32,
    pub distance: u32,
    /// Stored entries per column, `sum_{j<=D} C(N, j)`.
    pub entries_per_column: u128,
    pub columns: u128,
    pub value_bytes: u128,
    pub row_index_bytes: u128,
    pub col_ptr_bytes: u128,
    pub total_bytes: u128,
}

pub const PIB: f64 = (1u64 << 50) as f64;

impl CscMemoryEstimate {
    pub fn total_pib(&self) -> f64 {
        self.total_bytes as f64 / PIB
    }

    pub fn value_pib(&self) -> f64 {
        self.value_bytes as f64 / PIB
    }

    pub fn row_index_pib(&self) -> f64 {
        self.row_index_bytes as f64 / PIB
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

pub fn estimate_csc_memory(
    num_qubits: u32,
    distance: u32,
    value_bytes: u32,
    index_bytes: u32,
) -> Result<CscMemoryEstimate> {
    if distance > num_qubits {
        return Err(Error::InvalidArgument(format!(
            "distance {distance} exceeds qubit count {num_qubits}"
        )));
    }
    const OVERFLOW: Error = Error::Overflow("CSC memory estimate exceeds 128 bits");
    let n = num_qubits as u128;
    let mut per_column: u128 = 0;
    for j in 0..=distance as u128 {
        per_column = per_column
            .checked_add(binomial(n, j).ok_or(OVERFLOW)?)
            .ok_or(OVERFLOW)?;
    }
    let columns = 1u128.checked_shl(num_qubits).filter(|_| num_qubits < 128).ok_or(OVERFLOW)?;
    let nnz = per_column.checked_mul(columns).ok_or(OVERFLOW)?;
    let values = nnz.checked_mul(value_bytes as u128).ok_or(OVERFLOW)?;
    let rows = nnz.checked_mul(index_bytes as u128).ok_or(OVERFLOW)?;
    let ptrs = (columns + 1).checked_mul(index_bytes as u128).ok_or(OVERFLOW)?;
    let total = values
        .checked_add(rows)
        .and_then(|t| t.checked_add(ptrs))
        .ok_or(OVERFLOW)?;
    Ok(CscMemoryEstimate {
        num_qubits,
        distance,
        entries_per_column: per_column,
        columns,
        value_bytes: values,
        row_index_bytes: rows,
        col_ptr_bytes: ptrs,
        total_bytes: total,
    })
}
