//! Fixtures shared by the benchmarks.

use mfree_core::sim::{sample_noisy, synthetic_calibration, IdealDistribution, NoiseSpec};
use mfree_core::{CalibrationSet, CountsDistribution};

/// A calibration and noisy counts for `n` qubits with roughly `support`
/// ideal strings before readout noise spreads them out.
pub struct Fixture {
    pub cal: CalibrationSet,
    pub counts: CountsDistribution,
}

pub fn fixture(n: usize, support: usize, shots: u64, seed: u64) -> Fixture {
    let cal = synthetic_calibration(n, 0.01, 0.05, seed).expect("calibration");
    let ideal = IdealDistribution::random(n, support, seed).expect("ideal distribution");
    let counts = sample_noisy(&ideal, &NoiseSpec::new(cal.clone(), seed), shots).expect("sampling");
    Fixture { cal, counts }
}

/// Normalized counts in basis order, the right-hand side of the solve.
pub fn rhs(counts: &CountsDistribution) -> Vec<f64> {
    counts.normalize().into_values().collect()
}
