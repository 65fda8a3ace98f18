//! Benchmark fixtures shared by the criterion targets.

use fockgrad::checks::GateSpec;
use fockgrad::{Squeezing, TwoModeSpec, C64};

/// Cutoff sweep used for the rank-2 scaling benches.
pub const RANK2_CUTOFFS: [usize; 4] = [20, 40, 80, 160];
/// Smaller sweep for rank-4 gates; dense storage grows as N^4.
pub const RANK4_CUTOFFS: [usize; 3] = [10, 20, 40];

/// One representative parameter point per gate family, with moderate squeezing so
/// tensors stay well inside the unit ball at every benched cutoff.
pub fn representative_gates() -> Vec<GateSpec> {
    vec![
        GateSpec::Displacement { gamma: C64::new(0.6, -0.3) },
        GateSpec::Squeezer { r: 0.4, delta: 0.7 },
        GateSpec::SingleMode { gamma: C64::new(0.3, 0.2), phi: 0.5, r: 0.3, delta: -0.4 },
        GateSpec::Kerr { kappa: 0.05 },
        GateSpec::Cubic { eta: 0.4, hbar: fockgrad::checks::default_hbar() },
    ]
}

pub fn rank4_gates() -> Vec<GateSpec> {
    vec![
        GateSpec::Beamsplitter { theta: 0.7, varphi: 0.3 },
        GateSpec::TwoModeSqueezer { r: 0.3, delta: 0.2 },
        GateSpec::TwoModeGaussian { spec: two_mode_spec() },
    ]
}

/// A generic two-mode Gaussian with every coordinate away from zero.
pub fn two_mode_spec() -> TwoModeSpec {
    TwoModeSpec {
        gamma: [C64::new(0.2, -0.1), C64::new(-0.15, 0.25)],
        phi: [0.3, -0.6],
        theta_w: 0.4,
        varphi_w: 1.1,
        zeta: [Squeezing::new(0.2, 0.5).unwrap(), Squeezing::new(0.15, -0.8).unwrap()],
        theta_v: 0.9,
        varphi_v: -0.3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fockgrad::BuildOptions;

    #[test]
    fn fixtures_build_at_the_smallest_cutoffs() {
        for g in representative_gates() {
            g.build(RANK2_CUTOFFS[0], &BuildOptions::default()).unwrap();
        }
        for g in rank4_gates() {
            g.build(RANK4_CUTOFFS[0], &BuildOptions::default()).unwrap();
        }
    }
}
