//! Packed bit-strings and the count/probability containers indexed by them.
//!
//! Qubit `k` is stored at bit `k % 64` of word `k / 64`, so qubit 0 is the
//! least-significant bit. The text form writes qubit `N-1` first.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` accepted when building a [`QuasiDistribution`].
pub const QUASI_SUM_TOL: f64 = 1e-6;

type Words = SmallVec<[u64; 1]>;

/// A fixed-width measurement outcome.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    width: usize,
    words: Words,
}

fn word_count(width: usize) -> usize {
    width.div_ceil(64)
}

impl BitString {
    /// All-zeros string of the given width.
    pub fn zeros(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::ZeroWidth);
        }
        Ok(Self {
            width,
            words: smallvec::smallvec![0; word_count(width)],
        })
    }

    /// All-ones string of the given width.
    pub fn ones(width: usize) -> Result<Self> {
        let mut s = Self::zeros(width)?;
        s.words.iter_mut().for_each(|w| *w = u64::MAX);
        s.mask_tail();
        Ok(s)
    }

    /// Builds a string from an integer value; bits above `width` must be zero.
    pub fn from_u64(width: usize, value: u64) -> Result<Self> {
        let mut s = Self::zeros(width)?;
        if width < 64 && value >> width != 0 {
            return Err(Error::InvalidArgument(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        s.words[0] = value;
        Ok(s)
    }

    /// Builds a string from packed words, least-significant word first.
    /// Bits beyond `width` are cleared.
    pub fn from_words(width: usize, words: &[u64]) -> Result<Self> {
        let mut s = Self::zeros(width)?;
        if words.len() != s.words.len() {
            return Err(Error::InvalidArgument(format!(
                "{} words supplied for width {width}, expected {}",
                words.len(),
                s.words.len()
            )));
        }
        s.words.copy_from_slice(words);
        s.mask_tail();
        Ok(s)
    }

    fn mask_tail(&mut self) {
        let rem = self.width % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Packed words, least-significant first.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Integer value when the width fits a machine word.
    pub fn as_u64(&self) -> Option<u64> {
        (self.width <= 64).then(|| self.words[0])
    }

    /// State of qubit `k` as 0 or 1.
    #[inline]
    pub fn bit(&self, k: usize) -> usize {
        debug_assert!(k < self.width);
        ((self.words[k >> 6] >> (k & 63)) & 1) as usize
    }

    #[inline]
    pub fn set_bit(&mut self, k: usize, value: bool) {
        assert!(k < self.width, "qubit {k} out of range for width {}", self.width);
        let mask = 1u64 << (k & 63);
        if value {
            self.words[k >> 6] |= mask;
        } else {
            self.words[k >> 6] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Hamming distance without the width check. Callers guarantee equal widths.
    #[inline]
    pub fn distance_unchecked(&self, other: &Self) -> u32 {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Bitwise complement within the width.
    pub fn complement(&self) -> Self {
        let mut s = self.clone();
        s.words.iter_mut().for_each(|w| *w = !*w);
        s.mask_tail();
        s
    }
}

/// Number of positions at which `a` and `b` differ.
pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<u32> {
    if a.width != b.width {
        return Err(Error::WidthMismatch {
            expected: a.width,
            found: b.width,
        });
    }
    Ok(a.distance_unchecked(b))
}

// Equal widths order like their text forms: compare from the most-significant word.
impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .cmp(&other.width)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.width)
            .rev()
            .map(|k| if self.bit(k) == 1 { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = BitString::zeros(s.len())?;
        for (i, ch) in s.bytes().rev().enumerate() {
            match ch {
                b'0' => {}
                b'1' => out.words[i >> 6] |= 1u64 << (i & 63),
                _ => return Err(Error::InvalidBitString(s.to_string())),
            }
        }
        Ok(out)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Histogram of raw shots over a fixed width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsDistribution {
    width: usize,
    entries: BTreeMap<BitString, u64>,
    shots: u64,
}

impl CountsDistribution {
    /// Builds a histogram. Repeated keys are merged by addition.
    pub fn new(width: usize, entries: impl IntoIterator<Item = (BitString, u64)>) -> Result<Self> {
        if width == 0 {
            return Err(Error::ZeroWidth);
        }
        let mut map = BTreeMap::new();
        let mut shots: u64 = 0;
        for (key, count) in entries {
            if key.width() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    found: key.width(),
                });
            }
            if count == 0 {
                return Err(Error::ZeroCount(key.to_string()));
            }
            shots = shots
                .checked_add(count)
                .ok_or(Error::Overflow("total shot count"))?;
            *map.entry(key).or_insert(0) += count;
        }
        if map.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        Ok(Self {
            width,
            entries: map,
            shots,
        })
    }

    /// Builds a histogram from text keys; the width is taken from the first key.
    pub fn from_text<S: AsRef<str>>(entries: impl IntoIterator<Item = (S, u64)>) -> Result<Self> {
        let parsed = entries
            .into_iter()
            .map(|(k, v)| Ok((k.as_ref().parse::<BitString>()?, v)))
            .collect::<Result<Vec<_>>>()?;
        let width = parsed.first().ok_or(Error::EmptyDistribution)?.0.width();
        Self::new(width, parsed)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Number of distinct observed bit-strings.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &BitString) -> Option<u64> {
        self.entries.get(key).copied()
    }

    /// Entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&BitString, u64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &BitString> {
        self.entries.keys()
    }

    /// Divides every count by the total shot count.
    pub fn normalize(&self) -> BTreeMap<BitString, f64> {
        let shots = self.shots as f64;
        self.entries
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64 / shots))
            .collect()
    }

    /// Expectation value of a diagonal operator over the raw frequencies.
    pub fn expval_raw(&self, eigenvalue: impl Fn(&BitString) -> f64) -> f64 {
        let shots = self.shots as f64;
        self.entries
            .iter()
            .map(|(k, &v)| eigenvalue(k) * v as f64 / shots)
            .sum()
    }
}

/// Signed weights over bit-strings summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiDistribution {
    width: usize,
    entries: BTreeMap<BitString, f64>,
}

impl QuasiDistribution {
    /// Builds a quasi-distribution, checking widths and that the weights sum
    /// to one within [`QUASI_SUM_TOL`].
    pub fn new(width: usize, entries: impl IntoIterator<Item = (BitString, f64)>) -> Result<Self> {
        if width == 0 {
            return Err(Error::ZeroWidth);
        }
        let mut map = BTreeMap::new();
        for (key, w) in entries {
            if key.width() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    found: key.width(),
                });
            }
            if !w.is_finite() {
                return Err(Error::InvalidDistribution(format!("weight of {key} is {w}")));
            }
            *map.entry(key).or_insert(0.0) += w;
        }
        if map.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let sum: f64 = map.values().sum();
        if (sum - 1.0).abs() > QUASI_SUM_TOL {
            return Err(Error::NotNormalized {
                sum,
                tol: QUASI_SUM_TOL,
            });
        }
        Ok(Self {
            width,
            entries: map,
        })
    }

    /// Parses text keys; the width is taken from the first key.
    pub fn from_text<S: AsRef<str>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let parsed = entries
            .into_iter()
            .map(|(k, v)| Ok((k.as_ref().parse::<BitString>()?, v)))
            .collect::<Result<Vec<_>>>()?;
        let width = parsed.first().ok_or(Error::EmptyDistribution)?.0.width();
        Self::new(width, parsed)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &BitString) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    /// True when no weight is negative.
    pub fn is_probability(&self) -> bool {
        self.entries.values().all(|&w| w >= 0.0)
    }

    pub fn as_map(&self) -> &BTreeMap<BitString, f64> {
        &self.entries
    }

    pub fn into_map(self) -> BTreeMap<BitString, f64> {
        self.entries
    }
}
