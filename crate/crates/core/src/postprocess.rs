//! Expectation values of diagonal operators and projection of
//! quasi-distributions onto the probability simplex.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::bitstring::{BitString, QuasiDistribution};
use crate::error::{Error, Result};
use crate::overhead::{sigma_bound, OverheadReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    /// Identity: contributes 1.
    I,
    /// +1 on 0, -1 on 1.
    Z,
    /// Projector onto 0.
    Zero,
    /// Projector onto 1.
    One,
}

impl Factor {
    #[inline]
    fn value(self, bit: usize) -> f64 {
        match (self, bit) {
            (Factor::I, _) => 1.0,
            (Factor::Z, 0) | (Factor::Zero, 0) | (Factor::One, 1) => 1.0,
            (Factor::Z, _) => -1.0,
            _ => 0.0,
        }
    }

    /// Average of the factor over both bit values.
    fn mean(self) -> f64 {
        match self {
            Factor::I => 1.0,
            Factor::Z => 0.0,
            Factor::Zero | Factor::One => 0.5,
        }
    }

    fn symbol(self) -> char {
        match self {
            Factor::I => 'I',
            Factor::Z => 'Z',
            Factor::Zero => '0',
            Factor::One => '1',
        }
    }
}

type EigenFn = Arc<dyn Fn(&BitString) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// Factors indexed by qubit, qubit 0 first.
    Factors(Vec<Factor>),
    Custom(EigenFn),
}

/// An observable diagonal in the computational basis with eigenvalues in [-1, 1].
#[derive(Clone)]
pub struct DiagonalOperator {
    width: usize,
    kind: Kind,
}

impl DiagonalOperator {
    /// Parses a string over `{I, Z, 0, 1}`; the leftmost character acts on qubit N-1.
    pub fn parse(spec: &str) -> Result<Self> {
        spec.parse()
    }

    /// All-Z parity on `width` qubits.
    pub fn parity(width: usize) -> Self {
        Self {
            width,
            kind: Kind::Factors(vec![Factor::Z; width]),
        }
    }

    /// Arbitrary eigenvalue function. Values outside [-1, 1] are rejected when evaluated.
    pub fn from_fn(width: usize, f: impl Fn(&BitString) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            width,
            kind: Kind::Custom(Arc::new(f)),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn factors(&self) -> Option<&[Factor]> {
        match &self.kind {
            Kind::Factors(f) => Some(f),
            Kind::Custom(_) => None,
        }
    }

    pub fn eigenvalue(&self, s: &BitString) -> Result<f64> {
        if s.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                found: s.width(),
            });
        }
        match &self.kind {
            Kind::Factors(f) => Ok(f.iter().enumerate().map(|(k, fac)| fac.value(s.bit(k))).product()),
            Kind::Custom(f) => {
                let v = f(s);
                if (-1.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(Error::EigenvalueOutOfRange(v))
                }
            }
        }
    }

    /// Mean eigenvalue over all `2^N` bit-strings, for factor operators.
    pub fn uniform_mean(&self) -> Option<f64> {
        self.factors().map(|f| f.iter().map(|x| x.mean()).product())
    }
}

impl FromStr for DiagonalOperator {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        if spec.is_empty() {
            return Err(Error::InvalidOperator {
                spec: spec.into(),
                reason: "empty".into(),
            });
        }
        let factors = spec
            .chars()
            .rev()
            .map(|c| match c {
                'I' => Ok(Factor::I),
                'Z' => Ok(Factor::Z),
                '0' => Ok(Factor::Zero),
                '1' => Ok(Factor::One),
                other => Err(Error::InvalidOperator {
                    spec: spec.into(),
                    reason: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width: factors.len(),
            kind: Kind::Factors(factors),
        })
    }
}

impl fmt::Debug for DiagonalOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Factors(fs) => {
                let s: String = fs.iter().rev().map(|x| x.symbol()).collect();
                write!(f, "DiagonalOperator({s})")
            }
            Kind::Custom(_) => write!(f, "DiagonalOperator(<fn>, width {})", self.width),
        }
    }
}

/// `sum_s eigenvalue(s) * weight(s)` over the support of `quasi`.
pub fn expval(quasi: &QuasiDistribution, op: &DiagonalOperator) -> Result<f64> {
    if quasi.width() != op.width() {
        return Err(Error::WidthMismatch {
            expected: op.width(),
            found: quasi.width(),
        });
    }
    quasi.iter().map(|(s, w)| Ok(op.eigenvalue(s)? * w)).sum()
}

/// Expectation value paired with the `sqrt(M / shots)` standard-deviation bound.
pub fn expval_with_stddev(
    quasi: &QuasiDistribution,
    op: &DiagonalOperator,
    overhead: &OverheadReport,
    shots: u64,
) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    Ok((expval(quasi, op)?, sigma_bound(overhead, shots)))
}

/// Closest probability distribution in L2 on the same support.
///
/// Walks the weights from most negative upward, zeroing each one that would
/// stay negative after the accumulated deficit is spread evenly over the
/// entries not yet zeroed. Among equal weights the lexicographically-last
/// bit-string is zeroed first.
pub fn nearest_probability(quasi: &QuasiDistribution) -> QuasiDistribution {
    if quasi.is_probability() {
        return quasi.clone();
    }
    let entries: Vec<(&BitString, f64)> = quasi.iter().collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    // ascending weight; ties broken by descending bit-string
    order.sort_by(|&a, &b| {
        entries[a]
            .1
            .total_cmp(&entries[b].1)
            .then_with(|| entries[b].0.cmp(entries[a].0))
    });

    let mut remaining = entries.len();
    let mut remaining_sum: f64 = entries.iter().map(|e| e.1).sum();
    let mut zeroed = 0;
    for &i in &order {
        let shift = (1.0 - remaining_sum) / remaining as f64;
        if entries[i].1 + shift >= 0.0 || remaining == 1 {
            break;
        }
        remaining_sum -= entries[i].1;
        remaining -= 1;
        zeroed += 1;
    }
    let shift = (1.0 - remaining_sum) / remaining as f64;
    let mut out: Vec<(BitString, f64)> = entries.iter().map(|(s, w)| ((*s).clone(), w + shift)).collect();
    for &i in &order[..zeroed] {
        out[i].1 = 0.0;
    }
    QuasiDistribution::new(quasi.width(), out).expect("projection sums to one")
}
