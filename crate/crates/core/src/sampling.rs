//! Haar-uniform pure states, induced-measure density matrices and uniform
//! channel-parameter draws with reproducible, splittable seeding.
//!
//! Every sample is drawn from a counter-derived ChaCha stream keyed by
//! (seed, purpose, index), so any cell of a sampling grid can be
//! regenerated independently and grids can be filled in parallel without
//! shared RNG state.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{AmplitudeDampingFamily, PhaseDampingFamily};
use crate::error::{Error, Result};
use crate::state::{DensityMatrix, PureState};

/// Stream purposes; part of the key so that e.g. state and map streams with
/// the same index never collide.
pub const STREAM_STATES: u64 = 0x5354;
pub const STREAM_MAPS: u64 = 0x4d41;
pub const STREAM_DIAMETER: u64 = 0x4449;
pub const STREAM_SEARCH: u64 = 0x5345;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha stream for (seed, tags...). Same inputs,
/// same stream, on every platform.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x6a09_e667_f3bc_c908;
    for &t in tags {
        state ^= splitmix64(&mut state) ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Sampling configuration shared by the measure pipeline and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    /// Master seed; all streams are derived from it.
    pub seed: u64,
    /// Number of probe states per time point.
    pub n_states: usize,
    /// Number of candidate maps.
    pub n_maps: usize,
    /// Margin (as a fraction of λ) kept between drawn γ₀ and both ends of
    /// the divisible interval (0, λ/2).
    #[serde(default = "default_gamma0_margin")]
    pub gamma0_margin_frac: f64,
    /// Lower endpoint for Ohmicity draws; keeps Γ(s) away from its s → 0
    /// blowup.
    #[serde(default = "default_s_min")]
    pub s_min: f64,
}

fn default_gamma0_margin() -> f64 {
    1e-3
}

fn default_s_min() -> f64 {
    0.05
}

impl SampleConfig {
    pub fn new(seed: u64, n_states: usize, n_maps: usize) -> Self {
        Self {
            seed,
            n_states,
            n_maps,
            gamma0_margin_frac: default_gamma0_margin(),
            s_min: default_s_min(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_maps == 0 {
            return Err(Error::InvalidConfig(
                "sample counts must be at least 1".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.gamma0_margin_frac) {
            return Err(Error::InvalidConfig(format!(
                "gamma0 margin fraction {} outside [0, 0.5)",
                self.gamma0_margin_frac
            )));
        }
        if !(0.0..2.0).contains(&self.s_min) {
            return Err(Error::InvalidConfig(format!(
                "s_min {} outside (0, 2)",
                self.s_min
            )));
        }
        Ok(())
    }
}

/// Haar-uniform pure state: a normalized vector of iid complex Gaussians.
pub fn haar_pure_state<R: Rng>(dim: usize, rng: &mut R) -> PureState {
    loop {
        let mut v = DVector::<Complex64>::zeros(dim);
        for i in 0..dim {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            v[i] = Complex64::new(a, b);
        }
        let norm = v.norm();
        if norm > 1e-12 {
            if let Ok(state) = PureState::new(vec![dim], &v / Complex64::new(norm, 0.0)) {
                return state;
            }
        }
    }
}

/// Density matrix drawn from the measure induced by partial-tracing a
/// Haar-uniform pure state on a dim × ancilla_dim space. With
/// ancilla_dim = 1 the draws are pure.
pub fn induced_density_matrix<R: Rng>(
    dim: usize,
    ancilla_dim: usize,
    rng: &mut R,
) -> DensityMatrix {
    if ancilla_dim == 1 {
        return haar_pure_state(dim, rng).projector();
    }
    let joint = haar_pure_state(dim * ancilla_dim, rng);
    let joint = PureState::new(vec![dim, ancilla_dim], joint.amplitudes().clone())
        .expect("dimensions agree by construction");
    joint
        .projector()
        .partial_trace(&[0])
        .expect("bipartite state")
}

/// Divisible amplitude-damping draw at fixed λ:
/// γ₀ ~ Uniform(margin·λ, (1/2 − margin)·λ), so λ > 2γ₀ holds strictly.
pub fn draw_divisible_ad<R: Rng>(
    lambda: f64,
    margin_frac: f64,
    rng: &mut R,
) -> Result<AmplitudeDampingFamily> {
    if lambda <= 0.0 {
        return Err(Error::OutOfRange(format!("lambda = {lambda} must be > 0")));
    }
    let lo = margin_frac * lambda;
    let hi = (0.5 - margin_frac) * lambda;
    if hi <= lo {
        return Err(Error::InvalidConfig(format!(
            "degenerate gamma0 range [{lo}, {hi}]"
        )));
    }
    let gamma0 = rng.gen_range(lo..hi);
    AmplitudeDampingFamily::new(gamma0, lambda)
}

/// Divisible phase-damping draw: s ~ Uniform(s_min, 2) at unit cutoff.
pub fn draw_divisible_pd<R: Rng>(
    s_min: f64,
    omega_c: f64,
    rng: &mut R,
) -> Result<PhaseDampingFamily> {
    if !(0.0..2.0).contains(&s_min) {
        return Err(Error::OutOfRange(format!("s_min = {s_min} outside (0, 2)")));
    }
    let s = rng.gen_range(s_min..2.0);
    PhaseDampingFamily::new(s, omega_c)
}

/// The probe-state set of a run: `n_states` induced-measure qubit draws,
/// one derived stream per index.
pub fn probe_states(config: &SampleConfig) -> Vec<DensityMatrix> {
    (0..config.n_states)
        .map(|i| {
            let mut rng = stream(config.seed, &[STREAM_STATES, i as u64]);
            induced_density_matrix(2, 2, &mut rng)
        })
        .collect()
}

/// `n_maps` divisible amplitude-damping draws at fixed λ.
pub fn candidate_ad_families(
    lambda: f64,
    config: &SampleConfig,
) -> Result<Vec<AmplitudeDampingFamily>> {
    (0..config.n_maps)
        .map(|j| {
            let mut rng = stream(config.seed, &[STREAM_MAPS, j as u64]);
            draw_divisible_ad(lambda, config.gamma0_margin_frac, &mut rng)
        })
        .collect()
}

/// `n_maps` divisible phase-damping draws at the given cutoff.
pub fn candidate_pd_families(
    omega_c: f64,
    config: &SampleConfig,
) -> Result<Vec<PhaseDampingFamily>> {
    (0..config.n_maps)
        .map(|j| {
            let mut rng = stream(config.seed, &[STREAM_MAPS, j as u64]);
            draw_divisible_pd(config.s_min, omega_c, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_states_are_normalized_and_deterministic() {
        let mut rng = stream(7, &[1]);
        for _ in 0..50 {
            let psi = haar_pure_state(2, &mut rng);
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
        }
        let a = haar_pure_state(4, &mut stream(42, &[9]));
        let b = haar_pure_state(4, &mut stream(42, &[9]));
        let c = haar_pure_state(4, &mut stream(43, &[9]));
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert_ne!(a.amplitudes(), c.amplitudes());
    }

    #[test]
    fn induced_draws_are_valid_states() {
        let mut rng = stream(3, &[2]);
        for _ in 0..200 {
            let rho = induced_density_matrix(2, 2, &mut rng);
            let mat = rho.matrix().clone();
            assert!(DensityMatrix::new(vec![2], mat).is_ok());
        }
    }

    #[test]
    fn induced_with_trivial_ancilla_is_pure() {
        let mut rng = stream(3, &[5]);
        for _ in 0..50 {
            let rho = induced_density_matrix(2, 1, &mut rng);
            assert!((rho.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ad_draws_respect_divisibility_condition() {
        let mut rng = stream(11, &[0]);
        for _ in 0..500 {
            let fam = draw_divisible_ad(4.0, 1e-3, &mut rng).unwrap();
            assert!(fam.lambda() > 2.0 * fam.gamma0());
            assert!(fam.gamma0() > 0.0 && fam.gamma0() < 2.0);
        }
    }

    #[test]
    fn pd_draws_stay_in_interval() {
        let mut rng = stream(11, &[1]);
        for _ in 0..500 {
            let fam = draw_divisible_pd(0.05, 1.0, &mut rng).unwrap();
            assert!(fam.s() >= 0.05 && fam.s() < 2.0);
        }
    }

    #[test]
    fn per_index_streams_are_reproducible() {
        let cfg = SampleConfig::new(99, 8, 8);
        let a = probe_states(&cfg);
        let b = probe_states(&cfg);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.matrix(), y.matrix());
        }
    }

    #[test]
    fn config_validation() {
        assert!(SampleConfig::new(1, 0, 5).validate().is_err());
        let mut cfg = SampleConfig::new(1, 5, 5);
        assert!(cfg.validate().is_ok());
        cfg.s_min = 2.5;
        assert!(cfg.validate().is_err());
    }
}
