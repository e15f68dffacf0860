//! Synthetic readout-noise sampling and ideal-distribution factories.
//!
//! The sampler applies the error channel shot by shot, so it never touches
//! `2^N` storage. Shots are split into fixed-size chunks, each drawn from its
//! own ChaCha8 stream of the seed, which keeps results identical regardless
//! of how many worker threads run.

use std::collections::{BTreeMap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::amatrix::ErrorModel;
use crate::bitstring::{BitString, CountsDistribution};
use crate::calibration::{CalibrationSet, PairwiseCal, SingleQubitCal};
use crate::error::{Error, Result};
use crate::postprocess::DiagonalOperator;

const CHUNK_SHOTS: u64 = 1 << 16;
const IDEAL_SUM_TOL: f64 = 1e-12;

/// Exact probabilities in the absence of readout error: explicit entries plus
/// an optional weight spread uniformly over all `2^N` strings.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealDistribution {
    width: usize,
    entries: BTreeMap<BitString, f64>,
    uniform: f64,
}

impl IdealDistribution {
    pub fn new(width: usize, entries: impl IntoIterator<Item = (BitString, f64)>) -> Result<Self> {
        Self::mixture(width, entries, 0.0)
    }

    /// Explicit entries summing to `1 - uniform`, plus `uniform` spread over every string.
    pub fn mixture(width: usize, entries: impl IntoIterator<Item = (BitString, f64)>, uniform: f64) -> Result<Self> {
        if width == 0 {
            return Err(Error::ZeroWidth);
        }
        if !(0.0..=1.0).contains(&uniform) {
            return Err(Error::InvalidDistribution(format!("uniform weight {uniform} outside [0, 1]")));
        }
        let mut map = BTreeMap::new();
        for (k, p) in entries {
            if k.width() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    found: k.width(),
                });
            }
            if !(p >= 0.0) {
                return Err(Error::InvalidDistribution(format!("probability of {k} is {p}")));
            }
            if p > 0.0 {
                *map.entry(k).or_insert(0.0) += p;
            }
        }
        let sum: f64 = map.values().sum::<f64>() + uniform;
        if (sum - 1.0).abs() > IDEAL_SUM_TOL {
            return Err(Error::NotNormalized {
                sum,
                tol: IDEAL_SUM_TOL,
            });
        }
        Ok(Self {
            width,
            entries: map,
            uniform,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Explicit entries, excluding the uniform component.
    pub fn entries(&self) -> &BTreeMap<BitString, f64> {
        &self.entries
    }

    pub fn uniform_weight(&self) -> f64 {
        self.uniform
    }

    pub fn probability(&self, s: &BitString) -> f64 {
        let explicit = self.entries.get(s).copied().unwrap_or(0.0);
        explicit + self.uniform * 0.5f64.powi(self.width as i32)
    }

    /// Exact expectation value of `op`.
    pub fn expval(&self, op: &DiagonalOperator) -> Result<f64> {
        let mut total = 0.0;
        for (s, p) in &self.entries {
            total += op.eigenvalue(s)? * p;
        }
        if self.uniform > 0.0 {
            let mean = match op.uniform_mean() {
                Some(m) => m,
                None if self.width <= 20 => {
                    let mut acc = 0.0;
                    for v in 0..1u64 << self.width {
                        acc += op.eigenvalue(&BitString::from_u64(self.width, v)?)?;
                    }
                    acc / (1u64 << self.width) as f64
                }
                None => {
                    return Err(Error::InvalidArgument(
                        "custom operators over a uniform component need width <= 20".into(),
                    ))
                }
            };
            total += self.uniform * mean;
        }
        Ok(total)
    }

    /// Probability vector indexed by integer value, for small widths.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.width > 24 {
            return Err(Error::InvalidArgument(format!("width {} too large to densify", self.width)));
        }
        let base = self.uniform * 0.5f64.powi(self.width as i32);
        let mut v = vec![base; 1 << self.width];
        for (s, p) in &self.entries {
            v[s.as_u64().unwrap() as usize] += p;
        }
        Ok(v)
    }

    /// Random distribution over `support` distinct strings with exponential weights.
    pub fn random(width: usize, support: usize, seed: u64) -> Result<Self> {
        if width < 64 && (support as u128) > (1u128 << width) {
            return Err(Error::InvalidArgument(format!("{support} distinct strings do not fit in {width} bits")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keys = BTreeMap::new();
        while keys.len() < support {
            let s = random_string(width, &mut rng);
            let w = -(1.0 - rng.random::<f64>()).ln();
            keys.entry(s).or_insert(w);
        }
        let total: f64 = keys.values().sum();
        Self::new(width, keys.into_iter().map(|(k, w)| (k, w / total)))
    }
}

/// GHZ outcome distribution: half all-zeros, half all-ones. With
/// `gate_noise = g`, weight `g` is moved onto the uniform distribution.
pub fn ghz_ideal(num_qubits: usize, gate_noise: Option<f64>) -> Result<IdealDistribution> {
    let g = gate_noise.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::InvalidArgument(format!("gate noise {g} outside [0, 1]")));
    }
    let half = (1.0 - g) / 2.0;
    IdealDistribution::mixture(
        num_qubits,
        [(BitString::zeros(num_qubits)?, half), (BitString::ones(num_qubits)?, half)],
        g,
    )
}

/// Error channel plus the seed used to sample it.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    pub cal: CalibrationSet,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(cal: CalibrationSet, seed: u64) -> Self {
        Self { cal, seed }
    }

    pub fn mode(&self) -> ErrorModel {
        if self.cal.is_correlated() {
            ErrorModel::Correlated
        } else {
            ErrorModel::Tensored
        }
    }
}

fn random_string(width: usize, rng: &mut impl Rng) -> BitString {
    let words: Vec<u64> = (0..width.div_ceil(64)).map(|_| rng.random()).collect();
    BitString::from_words(width, &words).expect("word count matches width")
}

fn flip_singles(
    singles: &[SingleQubitCal],
    prepared: &BitString,
    out: &mut BitString,
    skip: Option<(usize, usize)>,
    rng: &mut impl Rng,
) {
    for (k, s) in singles.iter().enumerate() {
        if skip.is_some_and(|(a, b)| k == a || k == b) {
            continue;
        }
        let p1 = s.get(1, prepared.bit(k));
        out.set_bit(k, rng.random::<f64>() < p1);
    }
}

fn sample_pair(pair: &PairwiseCal, prepared: usize, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for a in 0..4 {
        acc += pair.get(a, prepared);
        if u < acc {
            return a;
        }
    }
    // rounding left u above the column total; take the last nonzero row
    (0..4).rev().find(|&a| pair.get(a, prepared) > 0.0).unwrap_or(prepared)
}

/// Draws `shots` noisy outcomes: an ideal string per shot, then the readout channel.
pub fn sample_noisy(ideal: &IdealDistribution, noise: &NoiseSpec, shots: u64) -> Result<CountsDistribution> {
    let n = noise.cal.num_qubits();
    if ideal.width() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            found: ideal.width(),
        });
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    noise.cal.validate()?;
    let support: Vec<&BitString> = ideal.entries.keys().collect();
    let picker = if support.is_empty() {
        None
    } else {
        Some(WeightedIndex::new(ideal.entries.values().copied()).map_err(|e| Error::InvalidDistribution(e.to_string()))?)
    };
    let uniform = ideal.uniform;
    let singles = noise.cal.singles();
    let pairs = noise.cal.pairs();

    let chunks = shots.div_ceil(CHUNK_SHOTS);
    let partials: Vec<HashMap<BitString, u64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(chunk);
            let count = CHUNK_SHOTS.min(shots - chunk * CHUNK_SHOTS);
            let mut hist = HashMap::new();
            let mut out = BitString::zeros(n).expect("width checked");
            for _ in 0..count {
                let prepared = match &picker {
                    Some(p) if uniform == 0.0 || rng.random::<f64>() >= uniform => support[p.sample(&mut rng)].clone(),
                    _ => random_string(n, &mut rng),
                };
                match pairs {
                    None => flip_singles(singles, &prepared, &mut out, None, &mut rng),
                    Some(pairs) => {
                        let pair = &pairs[rng.random_range(0..pairs.len())];
                        let b = 2 * prepared.bit(pair.k) + prepared.bit(pair.l);
                        let a = sample_pair(pair, b, &mut rng);
                        out.set_bit(pair.k, a >> 1 == 1);
                        out.set_bit(pair.l, a & 1 == 1);
                        flip_singles(singles, &prepared, &mut out, Some((pair.k, pair.l)), &mut rng);
                    }
                }
                *hist.entry(out.clone()).or_insert(0) += 1;
            }
            hist
        })
        .collect();

    let mut merged: BTreeMap<BitString, u64> = BTreeMap::new();
    for part in partials {
        for (k, v) in part {
            *merged.entry(k).or_insert(0) += v;
        }
    }
    CountsDistribution::new(n, merged)
}

/// Per-qubit flip rates drawn uniformly from `[min_error, max_error]`.
pub fn synthetic_calibration(num_qubits: usize, min_error: f64, max_error: f64, seed: u64) -> Result<CalibrationSet> {
    if !(0.0..=1.0).contains(&min_error) || !(min_error..=1.0).contains(&max_error) {
        return Err(Error::InvalidArgument(format!(
            "error range [{min_error}, {max_error}] must lie within [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || min_error + (max_error - min_error) * rng.random::<f64>();
    let singles = (0..num_qubits)
        .map(|_| {
            let (a, b) = (draw(), draw());
            SingleQubitCal::from_flip_rates(a, b)
        })
        .collect();
    Ok(CalibrationSet::tensored(singles)?)
}

/// Correlated model built on `base`: each pair channel is
/// `(1 - strength) * S_k ⊗ S_l + strength * (joint flip of both qubits)`.
pub fn synthetic_correlated(base: &CalibrationSet, strength: f64) -> Result<CalibrationSet> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidArgument(format!("strength {strength} outside [0, 1]")));
    }
    let singles = base.singles().to_vec();
    let mut pairs = Vec::new();
    for k in 1..singles.len() {
        for l in 0..k {
            let mut p = PairwiseCal::kron(k, l, &singles[k], &singles[l]);
            for b in 0..4 {
                for a in 0..4 {
                    p.c[a][b] *= 1.0 - strength;
                }
                p.c[b ^ 3][b] += strength;
            }
            pairs.push(p);
        }
    }
    Ok(CalibrationSet::correlated(singles, pairs)?)
}
