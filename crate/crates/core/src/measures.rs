//! The distance-based non-Markovianity estimators. Each one measures how
//! far a probe family sits from a candidate set of divisible (or
//! collision-certified) maps at a given time:
//!
//! - max-distance: min over candidates of the state-maximized output
//!   distance,
//! - min-distance: min over candidates and states,
//! - the Choi-state variant: min over candidates of the distance between
//!   the maps' Choi states, no state optimization.
//!
//! The candidate × state evaluation grid is embarrassingly parallel; the
//! reduction order (max over states, then min over candidates, lowest
//! index winning ties) is fixed so results are deterministic regardless of
//! thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{is_divisible, uniform_grid, ChannelFamily, DIVISIBILITY_GRID};
use crate::error::{Error, Result};
use crate::sampling::SampleConfig;
use crate::sampling::{candidate_ad_families, candidate_pd_families};
use crate::state::{relative_entropy, trace_distance, DensityMatrix};

/// Which extremum over probe states defines the map distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Max,
    Min,
    Cjks,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Max => write!(f, "max"),
            Mode::Min => write!(f, "min"),
            Mode::Cjks => write!(f, "cjks"),
        }
    }
}

/// State-distance backend. Trace distance is the default; relative entropy
/// is available behind this flag but infinity-flagged values are excluded
/// from candidate minimization, and no triangle-inequality bound is
/// asserted for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBackend {
    Trace,
    RelativeEntropy,
}

impl DistanceBackend {
    pub fn distance(&self, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
        match self {
            DistanceBackend::Trace => trace_distance(a, b),
            DistanceBackend::RelativeEntropy => relative_entropy(a, b),
        }
    }
}

/// A certified set of Markovian-like candidate families.
///
/// Parametric members are certified by the divisibility classifier on a
/// grid covering the requested horizon; tabulated members carry the ε
/// their construction guarantees.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    families: Vec<ChannelFamily>,
    epsilon: f64,
    config: Option<SampleConfig>,
}

impl CandidateSet {
    /// Certifies and wraps an explicit family list at tolerance level ε.
    pub fn from_families(
        families: Vec<ChannelFamily>,
        epsilon: f64,
        certification_horizon: f64,
    ) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::InvalidConfig("empty candidate set".into()));
        }
        let grid = uniform_grid(certification_horizon, DIVISIBILITY_GRID);
        for fam in &families {
            match fam {
                ChannelFamily::Tabulated(t) => {
                    if t.certified_epsilon() > epsilon + 1e-12 {
                        return Err(Error::InvalidConfig(format!(
                            "tabulated candidate certified at ε = {} exceeds set level ε = {}",
                            t.certified_epsilon(),
                            epsilon
                        )));
                    }
                }
                _ => {
                    let verdict = is_divisible(fam, &grid)?;
                    if !verdict.divisible {
                        return Err(Error::InvalidConfig(format!(
                            "candidate {} is not divisible (violation at t = {:?})",
                            fam.label(),
                            verdict.first_violation
                        )));
                    }
                }
            }
        }
        Ok(Self {
            families,
            epsilon,
            config: None,
        })
    }

    /// Samples divisible amplitude-damping candidates at fixed λ. Draw
    /// construction already enforces λ > 2γ₀, so certification cannot fail
    /// on the sampled members.
    pub fn divisible_ad(
        lambda: f64,
        config: &SampleConfig,
        certification_horizon: f64,
    ) -> Result<Self> {
        config.validate()?;
        let families = candidate_ad_families(lambda, config)?
            .into_iter()
            .map(ChannelFamily::from)
            .collect();
        let mut set = Self::from_families(families, 0.0, certification_horizon)?;
        set.config = Some(config.clone());
        Ok(set)
    }

    /// Samples divisible phase-damping candidates (s < 2) at the probe's
    /// cutoff frequency.
    pub fn divisible_pd(
        omega_c: f64,
        config: &SampleConfig,
        certification_horizon: f64,
    ) -> Result<Self> {
        config.validate()?;
        let families = candidate_pd_families(omega_c, config)?
            .into_iter()
            .map(ChannelFamily::from)
            .collect();
        let mut set = Self::from_families(families, 0.0, certification_horizon)?;
        set.config = Some(config.clone());
        Ok(set)
    }

    pub fn families(&self) -> &[ChannelFamily] {
        &self.families
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn config(&self) -> Option<&SampleConfig> {
        self.config.as_ref()
    }
}

/// One evaluated point of a measure curve.
#[derive(Debug, Clone)]
pub struct MeasureResult {
    pub time: f64,
    /// Measure value in the backend's units; range [0, 2] for the trace
    /// backend.
    pub value: f64,
    /// Index of the minimizing candidate family (lowest index on ties).
    pub candidate_index: usize,
    /// Printable parameters of the minimizing candidate.
    pub candidate_label: String,
    /// Extremal probe state: the maximizer for max mode, the minimizer for
    /// min mode, absent for the Choi-state variant.
    pub extremal_state: Option<DensityMatrix>,
    pub mode: Mode,
    pub epsilon: f64,
}

fn per_candidate_extremum(
    probe_outputs: &[DensityMatrix],
    candidate: &ChannelFamily,
    t: f64,
    states: &[DensityMatrix],
    backend: DistanceBackend,
    mode: Mode,
) -> Result<(f64, usize)> {
    let snapshot = candidate.snapshot(t)?;
    let mut best: Option<(f64, usize)> = None;
    for (i, (probe_out, state)) in probe_outputs.iter().zip(states).enumerate() {
        let out = snapshot.apply(state)?;
        let d = backend.distance(probe_out, &out)?;
        let better = match (mode, &best) {
            (_, None) => true,
            (Mode::Max, Some((b, _))) => d > *b,
            (Mode::Min, Some((b, _))) => d < *b,
            (Mode::Cjks, _) => unreachable!("cjks takes no state extremum"),
        };
        if better {
            best = Some((d, i));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty probe state set".into()))
}

fn minimize_over_candidates(
    probe: &ChannelFamily,
    t: f64,
    candidates: &CandidateSet,
    states: &[DensityMatrix],
    backend: DistanceBackend,
    mode: Mode,
) -> Result<MeasureResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("empty candidate set".into()));
    }
    if states.is_empty() {
        return Err(Error::InvalidConfig("empty probe state set".into()));
    }
    let probe_snapshot = probe.snapshot(t)?;
    let probe_outputs: Vec<DensityMatrix> = states
        .iter()
        .map(|s| probe_snapshot.apply(s))
        .collect::<Result<_>>()?;

    let per_candidate: Vec<(f64, usize)> = candidates
        .families()
        .par_iter()
        .map(|cand| per_candidate_extremum(&probe_outputs, cand, t, states, backend, mode))
        .collect::<Result<_>>()?;

    // sequential argmin with lowest-index tie-breaking; infinity-flagged
    // relative-entropy values are excluded from the minimization
    let mut winner: Option<(usize, f64, usize)> = None;
    for (j, &(d, i)) in per_candidate.iter().enumerate() {
        if d.is_infinite() {
            continue;
        }
        if winner.map_or(true, |(_, best, _)| d < best) {
            winner = Some((j, d, i));
        }
    }
    let (j, value, i) = winner.ok_or_else(|| {
        Error::InvalidConfig("every candidate evaluated to the infinity flag".into())
    })?;
    Ok(MeasureResult {
        time: t,
        value,
        candidate_index: j,
        candidate_label: candidates.families()[j].label(),
        extremal_state: Some(states[i].clone()),
        mode,
        epsilon: candidates.epsilon(),
    })
}

/// Max-distance measure at one time point: min over candidates of the
/// state-maximized distance between probe and candidate outputs.
pub fn max_distance_measure(
    probe: &ChannelFamily,
    t: f64,
    candidates: &CandidateSet,
    states: &[DensityMatrix],
    backend: DistanceBackend,
) -> Result<MeasureResult> {
    minimize_over_candidates(probe, t, candidates, states, backend, Mode::Max)
}

/// Min-distance measure: min over candidates and states. Never exceeds the
/// max-distance measure on the same inputs.
pub fn min_distance_measure(
    probe: &ChannelFamily,
    t: f64,
    candidates: &CandidateSet,
    states: &[DensityMatrix],
    backend: DistanceBackend,
) -> Result<MeasureResult> {
    minimize_over_candidates(probe, t, candidates, states, backend, Mode::Min)
}

/// Choi-state measure: min over candidates of the distance between
/// (I ⊗ Λ)(|Ψ⁺⟩⟨Ψ⁺|) for probe and candidate. No state optimization.
pub fn cjks_measure(
    probe: &ChannelFamily,
    t: f64,
    candidates: &CandidateSet,
    backend: DistanceBackend,
) -> Result<MeasureResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("empty candidate set".into()));
    }
    let probe_choi = probe.snapshot(t)?.choi_state();
    let distances: Vec<f64> = candidates
        .families()
        .par_iter()
        .map(|cand| {
            let choi = cand.snapshot(t)?.choi_state();
            backend.distance(&probe_choi, &choi)
        })
        .collect::<Result<_>>()?;
    let mut winner: Option<(usize, f64)> = None;
    for (j, &d) in distances.iter().enumerate() {
        if d.is_infinite() {
            continue;
        }
        if winner.map_or(true, |(_, best)| d < best) {
            winner = Some((j, d));
        }
    }
    let (j, value) = winner.ok_or_else(|| {
        Error::InvalidConfig("every candidate evaluated to the infinity flag".into())
    })?;
    Ok(MeasureResult {
        time: t,
        value,
        candidate_index: j,
        candidate_label: candidates.families()[j].label(),
        extremal_state: None,
        mode: Mode::Cjks,
        epsilon: candidates.epsilon(),
    })
}

/// Evaluates one measure over a whole time grid, re-using the candidate
/// families across time points (snapshots are taken per t). Time points
/// are independent and evaluated in parallel.
pub fn measure_curve(
    probe: &ChannelFamily,
    t_grid: &[f64],
    candidates: &CandidateSet,
    states: &[DensityMatrix],
    mode: Mode,
    backend: DistanceBackend,
) -> Result<Vec<MeasureResult>> {
    t_grid
        .par_iter()
        .map(|&t| match mode {
            Mode::Max => max_distance_measure(probe, t, candidates, states, backend),
            Mode::Min => min_distance_measure(probe, t, candidates, states, backend),
            Mode::Cjks => cjks_measure(probe, t, candidates, backend),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{AmplitudeDampingFamily, PhaseDampingFamily};
    use crate::sampling::{probe_states, SampleConfig};

    fn small_ad_setup() -> (ChannelFamily, CandidateSet, Vec<DensityMatrix>) {
        let probe = ChannelFamily::from(AmplitudeDampingFamily::new(1.0, 4.0).unwrap());
        let cfg = SampleConfig::new(5, 12, 10);
        let mut fams: Vec<ChannelFamily> = crate::sampling::candidate_ad_families(4.0, &cfg)
            .unwrap()
            .into_iter()
            .map(ChannelFamily::from)
            .collect();
        fams.push(probe.clone());
        let set = CandidateSet::from_families(fams, 0.0, 3.0).unwrap();
        let states = probe_states(&cfg);
        (probe, set, states)
    }

    #[test]
    fn divisible_probe_in_own_candidate_set_scores_zero() {
        let (probe, set, states) = small_ad_setup();
        for &t in &[0.1, 0.5, 1.5, 3.0] {
            let max = max_distance_measure(&probe, t, &set, &states, DistanceBackend::Trace)
                .unwrap();
            let min = min_distance_measure(&probe, t, &set, &states, DistanceBackend::Trace)
                .unwrap();
            let cjks = cjks_measure(&probe, t, &set, DistanceBackend::Trace).unwrap();
            assert!(max.value < 1e-9, "max = {} at t = {t}", max.value);
            assert!(min.value < 1e-9);
            assert!(cjks.value < 1e-9);
        }
    }

    #[test]
    fn min_never_exceeds_max() {
        let probe = ChannelFamily::from(AmplitudeDampingFamily::new(4.0, 4.0).unwrap());
        let cfg = SampleConfig::new(21, 15, 12);
        let set = CandidateSet::divisible_ad(4.0, &cfg, 3.0).unwrap();
        let states = probe_states(&cfg);
        for &t in &[0.2, 0.6, 1.0, 1.4] {
            let max =
                max_distance_measure(&probe, t, &set, &states, DistanceBackend::Trace).unwrap();
            let min =
                min_distance_measure(&probe, t, &set, &states, DistanceBackend::Trace).unwrap();
            assert!(min.value <= max.value + 1e-12);
            assert!(max.value <= 2.0 + 1e-9);
            assert!(min.value >= -1e-9);
        }
    }

    #[test]
    fn monotone_under_set_refinement() {
        let probe = ChannelFamily::from(AmplitudeDampingFamily::new(4.0, 4.0).unwrap());
        let cfg_small = SampleConfig::new(33, 10, 6);
        let cfg_large = SampleConfig::new(33, 20, 14);
        // same stream indices: the small sets are strict prefixes of the large
        let set_small = CandidateSet::divisible_ad(4.0, &cfg_small, 2.0).unwrap();
        let set_large = CandidateSet::divisible_ad(4.0, &cfg_large, 2.0).unwrap();
        let states_small = probe_states(&cfg_small);
        let states_large = probe_states(&cfg_large);
        let t = 0.9;

        // more candidates never increase the measure
        let small =
            max_distance_measure(&probe, t, &set_small, &states_small, DistanceBackend::Trace)
                .unwrap();
        let more_cands =
            max_distance_measure(&probe, t, &set_large, &states_small, DistanceBackend::Trace)
                .unwrap();
        assert!(more_cands.value <= small.value + 1e-12);

        // more states never decrease the max-distance measure
        let more_states =
            max_distance_measure(&probe, t, &set_small, &states_large, DistanceBackend::Trace)
                .unwrap();
        assert!(more_states.value >= small.value - 1e-12);
    }

    #[test]
    fn cjks_zero_at_origin_for_any_candidates() {
        let probe = ChannelFamily::from(AmplitudeDampingFamily::new(10.0, 4.0).unwrap());
        let cfg = SampleConfig::new(2, 4, 8);
        let set = CandidateSet::divisible_ad(4.0, &cfg, 2.0).unwrap();
        let r = cjks_measure(&probe, 0.0, &set, DistanceBackend::Trace).unwrap();
        assert!(r.value < 1e-12);
    }

    #[test]
    fn empty_candidate_set_is_rejected() {
        assert!(CandidateSet::from_families(vec![], 0.0, 1.0).is_err());
    }

    #[test]
    fn nondivisible_candidate_is_rejected() {
        let bad = ChannelFamily::from(AmplitudeDampingFamily::new(4.0, 4.0).unwrap());
        assert!(CandidateSet::from_families(vec![bad], 0.0, 3.0).is_err());
        let bad_pd = ChannelFamily::from(PhaseDampingFamily::new(2.5, 1.0).unwrap());
        assert!(CandidateSet::from_families(vec![bad_pd], 0.0, 8.0).is_err());
    }

    #[test]
    fn tie_break_prefers_lowest_candidate_index() {
        // two identical candidates: index 0 must win
        let fam = ChannelFamily::from(AmplitudeDampingFamily::new(1.0, 4.0).unwrap());
        let set =
            CandidateSet::from_families(vec![fam.clone(), fam.clone()], 0.0, 2.0).unwrap();
        let probe = ChannelFamily::from(AmplitudeDampingFamily::new(1.9, 4.0).unwrap());
        let states = probe_states(&SampleConfig::new(8, 6, 1));
        let r =
            max_distance_measure(&probe, 0.7, &set, &states, DistanceBackend::Trace).unwrap();
        assert_eq!(r.candidate_index, 0);
    }

    #[test]
    fn relative_entropy_backend_runs() {
        let (probe, set, states) = small_ad_setup();
        let r = max_distance_measure(&probe, 0.5, &set, &states, DistanceBackend::RelativeEntropy)
            .unwrap();
        assert!(r.value < 1e-8); // probe is in its own candidate set
    }
}
