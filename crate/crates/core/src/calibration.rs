//! Readout error model inputs: per-qubit 2x2 and optional pairwise 4x4
//! column-stochastic matrices.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CalibrationError;

/// Column sums further than this from one are rejected.
pub const STOCHASTIC_ERROR_TOL: f64 = 1e-6;
/// Column sums within this of one pass silently.
pub const STOCHASTIC_CLEAN_TOL: f64 = 1e-9;

/// Single-qubit calibration matrix. `p[i][j]` is the probability of
/// preparing `j` and measuring `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleQubitCal {
    pub p: [[f64; 2]; 2],
}

impl SingleQubitCal {
    pub fn new(p: [[f64; 2]; 2]) -> Self {
        Self { p }
    }

    pub fn identity() -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]])
    }

    /// From the flip probabilities P(1|0) and P(0|1).
    pub fn from_flip_rates(p1_given_0: f64, p0_given_1: f64) -> Self {
        Self::new([[1.0 - p1_given_0, p0_given_1], [p1_given_0, 1.0 - p0_given_1]])
    }

    #[inline]
    pub fn get(&self, measured: usize, prepared: usize) -> f64 {
        self.p[measured][prepared]
    }

    /// Strict row-wise diagonal dominance.
    pub fn is_diagonally_dominant(&self) -> bool {
        self.p[0][0].abs() > self.p[0][1].abs() && self.p[1][1].abs() > self.p[1][0].abs()
    }
}

/// Pairwise calibration for qubits `k > l`. `c[a][b]` with `a = 2*q_k + q_l`
/// measured and `b = 2*q'_k + q'_l` prepared.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseCal {
    pub k: usize,
    pub l: usize,
    pub c: [[f64; 4]; 4],
}

impl PairwiseCal {
    pub fn new(k: usize, l: usize, c: [[f64; 4]; 4]) -> Self {
        Self { k, l, c }
    }

    /// Uncorrelated pair channel `S_k ⊗ S_l`.
    pub fn kron(k: usize, l: usize, sk: &SingleQubitCal, sl: &SingleQubitCal) -> Self {
        let mut c = [[0.0; 4]; 4];
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = sk.get(a >> 1, b >> 1) * sl.get(a & 1, b & 1);
            }
        }
        Self::new(k, l, c)
    }

    #[inline]
    pub fn get(&self, measured: usize, prepared: usize) -> f64 {
        self.c[measured][prepared]
    }
}

/// Index of pair `(k, l)`, `k > l`, in the packed pair list.
#[inline]
pub fn pair_index(k: usize, l: usize) -> usize {
    debug_assert!(k > l);
    k * (k - 1) / 2 + l
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibrationWarning {
    NotDiagonallyDominant { qubit: usize },
    ColumnSumDrift { location: String, sum: f64 },
}

impl fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotDiagonallyDominant { qubit } => {
                write!(f, "qubit {qubit}: calibration matrix is not strictly diagonally dominant")
            }
            Self::ColumnSumDrift { location, sum } => {
                write!(f, "{location}: column sums to {sum}")
            }
        }
    }
}

/// The full error model for `N` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSet {
    singles: Vec<SingleQubitCal>,
    // Ordered by `pair_index`; present only in correlated mode.
    pairs: Option<Vec<PairwiseCal>>,
}

impl CalibrationSet {
    /// Tensored model from one matrix per qubit, qubit 0 first.
    pub fn tensored(singles: Vec<SingleQubitCal>) -> Result<Self, CalibrationError> {
        if singles.is_empty() {
            return Err(CalibrationError::Schema("at least one qubit is required".into()));
        }
        Ok(Self {
            singles,
            pairs: None,
        })
    }

    /// Pairwise-correlated model. Every pair `k > l` must appear exactly once.
    pub fn correlated(
        singles: Vec<SingleQubitCal>,
        pairs: Vec<PairwiseCal>,
    ) -> Result<Self, CalibrationError> {
        let n = singles.len();
        if n < 2 {
            return Err(CalibrationError::Schema(
                "correlated mode requires at least two qubits".into(),
            ));
        }
        let expected = n * (n - 1) / 2;
        let mut slots: Vec<Option<PairwiseCal>> = vec![None; expected];
        for pair in pairs {
            if pair.k <= pair.l || pair.k >= n {
                return Err(CalibrationError::Schema(format!(
                    "pair ({}, {}) must satisfy {} > k > l >= 0",
                    pair.k, pair.l, n
                )));
            }
            let slot = &mut slots[pair_index(pair.k, pair.l)];
            if slot.is_some() {
                return Err(CalibrationError::Schema(format!(
                    "pair ({}, {}) appears more than once",
                    pair.k, pair.l
                )));
            }
            *slot = Some(pair);
        }
        let mut ordered = Vec::with_capacity(expected);
        for k in 1..n {
            for l in 0..k {
                match slots[pair_index(k, l)] {
                    Some(p) => ordered.push(p),
                    None => {
                        return Err(CalibrationError::Schema(format!("missing pair ({k}, {l})")))
                    }
                }
            }
        }
        Ok(Self {
            singles,
            pairs: Some(ordered),
        })
    }

    /// Correlated model whose pair matrices are `S_k ⊗ S_l`.
    pub fn correlated_from_singles(singles: Vec<SingleQubitCal>) -> Result<Self, CalibrationError> {
        let mut pairs = Vec::new();
        for k in 1..singles.len() {
            for l in 0..k {
                pairs.push(PairwiseCal::kron(k, l, &singles[k], &singles[l]));
            }
        }
        Self::correlated(singles, pairs)
    }

    pub fn identity(num_qubits: usize) -> Result<Self, CalibrationError> {
        Self::tensored(vec![SingleQubitCal::identity(); num_qubits])
    }

    pub fn num_qubits(&self) -> usize {
        self.singles.len()
    }

    pub fn singles(&self) -> &[SingleQubitCal] {
        &self.singles
    }

    pub fn single(&self, k: usize) -> &SingleQubitCal {
        &self.singles[k]
    }

    /// Pair matrices ordered by `(k, l)` with `k` ascending then `l` ascending.
    pub fn pairs(&self) -> Option<&[PairwiseCal]> {
        self.pairs.as_deref()
    }

    pub fn pair(&self, k: usize, l: usize) -> Option<&PairwiseCal> {
        self.pairs.as_ref().map(|p| &p[pair_index(k, l)])
    }

    pub fn is_correlated(&self) -> bool {
        self.pairs.is_some()
    }

    /// Checks stochasticity. Hard violations are errors; near misses and
    /// missing diagonal dominance are returned as warnings.
    pub fn validate(&self) -> Result<Vec<CalibrationWarning>, CalibrationError> {
        let mut warnings = Vec::new();
        for (q, s) in self.singles.iter().enumerate() {
            let rows: Vec<&[f64]> = s.p.iter().map(|r| r.as_slice()).collect();
            check_stochastic(&rows, &format!("qubit {q}"), &mut warnings)?;
            if !s.is_diagonally_dominant() {
                warnings.push(CalibrationWarning::NotDiagonallyDominant { qubit: q });
            }
        }
        for pair in self.pairs.iter().flatten() {
            let rows: Vec<&[f64]> = pair.c.iter().map(|r| r.as_slice()).collect();
            check_stochastic(&rows, &format!("pair ({}, {})", pair.k, pair.l), &mut warnings)?;
        }
        Ok(warnings)
    }

    pub fn to_json(&self) -> String {
        let doc = CalibrationDoc {
            num_qubits: self.num_qubits(),
            singles: self.singles.iter().map(|s| s.p).collect(),
            pairs: self.pairs.as_ref().map(|ps| {
                ps.iter()
                    .map(|p| PairDoc {
                        k: p.k,
                        l: p.l,
                        c: p.c,
                    })
                    .collect()
            }),
        };
        serde_json::to_string_pretty(&doc).expect("calibration serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CalibrationError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

fn check_stochastic(
    rows: &[&[f64]],
    location: &str,
    warnings: &mut Vec<CalibrationWarning>,
) -> Result<(), CalibrationError> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(CalibrationError::Validation(format!(
                    "{location}: entry [{i}][{j}] = {v} outside [0, 1]"
                )));
            }
        }
    }
    for j in 0..n {
        let sum: f64 = rows.iter().map(|r| r[j]).sum();
        let drift = (sum - 1.0).abs();
        if drift > STOCHASTIC_ERROR_TOL {
            return Err(CalibrationError::Validation(format!(
                "{location}: column {j} sums to {sum}"
            )));
        }
        if drift > STOCHASTIC_CLEAN_TOL {
            warnings.push(CalibrationWarning::ColumnSumDrift {
                location: format!("{location} column {j}"),
                sum,
            });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDoc {
    num_qubits: usize,
    singles: Vec<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<PairDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    k: usize,
    l: usize,
    c: [[f64; 4]; 4],
}

/// Parses and validates a calibration JSON document.
pub fn load_calibration(reader: impl Read) -> Result<CalibrationSet, CalibrationError> {
    let value: serde_json::Value = serde_json::from_reader(reader).map_err(|e| {
        if e.is_io() {
            CalibrationError::Io(e.into())
        } else {
            CalibrationError::Parse(e.to_string())
        }
    })?;
    let doc: CalibrationDoc = serde_json::from_value(value).map_err(|e| CalibrationError::Schema(e.to_string()))?;
    if doc.num_qubits == 0 {
        return Err(CalibrationError::Schema("num_qubits must be at least 1".into()));
    }
    if doc.singles.len() != doc.num_qubits {
        return Err(CalibrationError::Schema(format!(
            "num_qubits is {} but {} single-qubit matrices were given",
            doc.num_qubits,
            doc.singles.len()
        )));
    }
    let singles = doc.singles.into_iter().map(SingleQubitCal::new).collect();
    let cal = match doc.pairs {
        None => CalibrationSet::tensored(singles)?,
        Some(pairs) => CalibrationSet::correlated(
            singles,
            pairs
                .into_iter()
                .map(|p| PairwiseCal::new(p.k, p.l, p.c))
                .collect(),
        )?,
    };
    cal.validate()?;
    Ok(cal)
}

pub fn load_calibration_file(path: impl AsRef<Path>) -> Result<CalibrationSet, CalibrationError> {
    let file = std::fs::File::open(path)?;
    load_calibration(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(singles: Vec<[[f64; 2]; 2]>) -> CalibrationSet {
        CalibrationSet::tensored(singles.into_iter().map(SingleQubitCal::new).collect()).unwrap()
    }

    #[test]
    fn identity_has_no_warnings() {
        assert!(CalibrationSet::identity(4).unwrap().validate().unwrap().is_empty());
    }

    #[test]
    fn valid_matrix_passes() {
        let cal = set(vec![[[0.9, 0.2], [0.1, 0.8]]]);
        assert!(cal.validate().unwrap().is_empty());
    }

    #[test]
    fn column_sum_violation_is_error() {
        let cal = set(vec![[[0.9, 0.2], [0.2, 0.8]]]);
        let err = cal.validate().unwrap_err();
        assert!(matches!(err, CalibrationError::Validation(ref m) if m.contains("column 0")));
    }

    #[test]
    fn entry_out_of_range_is_error() {
        let cal = set(vec![[[1.1, 0.0], [-0.1, 1.0]]]);
        assert!(matches!(cal.validate(), Err(CalibrationError::Validation(_))));
    }

    #[test]
    fn non_dominant_matrix_warns() {
        let cal = set(vec![[[0.0, 1.0], [1.0, 0.0]], [[0.9, 0.1], [0.1, 0.9]]]);
        let w = cal.validate().unwrap();
        assert_eq!(w, vec![CalibrationWarning::NotDiagonallyDominant { qubit: 0 }]);
    }

    #[test]
    fn small_drift_warns() {
        let cal = set(vec![[[0.9 + 1e-8, 0.2], [0.1, 0.8]]]);
        let w = cal.validate().unwrap();
        assert!(matches!(w.as_slice(), [CalibrationWarning::ColumnSumDrift { .. }]));
    }

    #[test]
    fn loads_tensored_document() {
        let doc = r#"{"num_qubits": 2, "singles": [[[0.98, 0.03], [0.02, 0.97]], [[0.95, 0.05], [0.05, 0.95]]]}"#;
        let cal = load_calibration(doc.as_bytes()).unwrap();
        assert_eq!(cal.num_qubits(), 2);
        assert!(cal.pairs().is_none());
        assert_eq!(cal.single(0).get(1, 0), 0.02);
    }

    #[test]
    fn missing_pair_is_schema_error() {
        let id4 = "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]";
        let doc = format!(
            r#"{{"num_qubits": 3, "singles": [[[1,0],[0,1]],[[1,0],[0,1]],[[1,0],[0,1]]],
                "pairs": [{{"k":1,"l":0,"c":{id4}}}, {{"k":2,"l":1,"c":{id4}}}]}}"#
        );
        let err = load_calibration(doc.as_bytes()).unwrap_err();
        assert!(matches!(err, CalibrationError::Schema(ref m) if m.contains("(2, 0)")), "{err}");
    }

    #[test]
    fn width_mismatch_is_schema_error() {
        let doc = r#"{"num_qubits": 3, "singles": [[[1,0],[0,1]]]}"#;
        assert!(matches!(
            load_calibration(doc.as_bytes()),
            Err(CalibrationError::Schema(_))
        ));
    }

    #[test]
    fn error_classes_are_distinguished() {
        assert!(matches!(
            load_calibration("{not json".as_bytes()),
            Err(CalibrationError::Parse(_))
        ));
        assert!(matches!(
            load_calibration(r#"{"num_qubits": 1, "singles": [[[1,0,0],[0,1]]]}"#.as_bytes()),
            Err(CalibrationError::Schema(_))
        ));
        assert!(matches!(
            load_calibration(r#"{"num_qubits": 1, "singles": [[[0.9,0.2],[0.2,0.8]]]}"#.as_bytes()),
            Err(CalibrationError::Validation(_))
        ));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let singles = vec![
            SingleQubitCal::from_flip_rates(0.0123456789012345, 0.031415926535897934),
            SingleQubitCal::from_flip_rates(1.0 / 3.0, 0.1 + 0.2 - 0.3),
            SingleQubitCal::from_flip_rates(0.02, 0.07),
        ];
        for cal in [
            CalibrationSet::tensored(singles.clone()).unwrap(),
            CalibrationSet::correlated_from_singles(singles).unwrap(),
        ] {
            let back = load_calibration(cal.to_json().as_bytes()).unwrap();
            assert_eq!(back, cal);
            for (a, b) in back.singles().iter().zip(cal.singles()) {
                for i in 0..2 {
                    for j in 0..2 {
                        assert_eq!(a.p[i][j].to_bits(), b.p[i][j].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn kron_pair_is_stochastic() {
        let sk = SingleQubitCal::from_flip_rates(0.02, 0.05);
        let sl = SingleQubitCal::from_flip_rates(0.01, 0.03);
        let p = PairwiseCal::kron(1, 0, &sk, &sl);
        for b in 0..4 {
            let s: f64 = (0..4).map(|a| p.get(a, b)).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        // a = 2*q_k + q_l: measured k=1,l=0 from prepared k=0,l=0
        assert_eq!(p.get(2, 0), sk.get(1, 0) * sl.get(0, 0));
    }
}
