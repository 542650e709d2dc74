//! Multi-layer quench sequences `U(θ_M) ··· U(θ_1) |ψ0⟩` and the statistics
//! built on their output distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::propagator::{FloquetLayer, PropagatorConfig, StateVector, UnitaryMatrix};
use crate::seed::SeedTree;
use crate::spectral::{
    histogram_kld, porter_thomas_reference, scaled_probability_histogram, KlDirection, KLD_EPSILON,
};
use crate::spin_model::{sample_disorder, ChainParams, DisorderVector};
use crate::{Error, Result};

/// Ordered disorder layers applied first-to-last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchSchedule {
    pub layers: Vec<DisorderVector>,
}

impl QuenchSchedule {
    pub fn new(layers: Vec<DisorderVector>) -> Self {
        Self { layers }
    }

    /// `m` layers drawn sequentially from `rng`.
    pub fn random<R: Rng + ?Sized>(params: &ChainParams, m: usize, rng: &mut R) -> Self {
        Self {
            layers: (0..m).map(|_| sample_disorder(params, rng)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn validate(&self, params: &ChainParams) -> Result<()> {
        self.layers.iter().try_for_each(|l| l.check_length(params))
    }
}

/// Where a trace's randomness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub stream: u64,
}

impl From<&SeedTree> for SeedRecord {
    fn from(tree: &SeedTree) -> Self {
        Self {
            master: tree.master(),
            stream: tree.stream_id(),
        }
    }
}

/// Output distributions `p(z; Θ_m)` for `m = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub distributions: Vec<Vec<f64>>,
    pub seed_manifest: Option<SeedRecord>,
}

impl EvolutionTrace {
    pub fn layers(&self) -> usize {
        self.distributions.len().saturating_sub(1)
    }

    pub fn last(&self) -> &[f64] {
        self.distributions.last().expect("trace always holds the initial distribution")
    }
}

/// All spins up: basis index 0.
pub fn initial_state(params: &ChainParams) -> StateVector {
    StateVector::basis(params.dim(), 0)
}

/// Evolves the initial state through `schedule`, recording the outcome
/// distribution after every layer.
pub fn run_quench_sequence(
    params: &ChainParams,
    schedule: &QuenchSchedule,
    config: &PropagatorConfig,
) -> Result<EvolutionTrace> {
    schedule.validate(params)?;
    let mut state = initial_state(params);
    let mut distributions = Vec::with_capacity(schedule.len() + 1);
    distributions.push(state.probabilities());
    for theta in &schedule.layers {
        state = FloquetLayer::new(params, theta, config)?.apply(&state)?;
        distributions.push(state.probabilities());
    }
    Ok(EvolutionTrace {
        distributions,
        seed_manifest: None,
    })
}

/// Final state of a schedule, without recording intermediate distributions.
pub fn evolve_schedule(
    params: &ChainParams,
    schedule: &QuenchSchedule,
    config: &PropagatorConfig,
) -> Result<StateVector> {
    schedule.validate(params)?;
    let mut state = initial_state(params);
    for theta in &schedule.layers {
        state = FloquetLayer::new(params, theta, config)?.apply(&state)?;
    }
    Ok(state)
}

/// Left-multiplies `u` by the propagators of `layers`, in order. Lets long
/// composite builds be checkpointed and resumed.
pub fn extend_composite(
    u: &mut UnitaryMatrix,
    params: &ChainParams,
    layers: &[DisorderVector],
    config: &PropagatorConfig,
) -> Result<()> {
    if u.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: u.dim(),
        });
    }
    for theta in layers {
        FloquetLayer::new(params, theta, config)?.apply_to_matrix(&mut u.0);
    }
    Ok(())
}

/// Dense `U(θ_M) ··· U(θ_1)`.
pub fn composite_propagator(
    params: &ChainParams,
    schedule: &QuenchSchedule,
    config: &PropagatorConfig,
) -> Result<UnitaryMatrix> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter {
            name: "M",
            reason: "composite propagator needs at least one layer".into(),
        });
    }
    schedule.validate(params)?;
    let mut u = UnitaryMatrix::identity(params.dim());
    extend_composite(&mut u, params, &schedule.layers, config)?;
    Ok(u)
}

/// KLD of the binned `N p(z)` histogram from Porter-Thomas.
pub fn porter_thomas_kld(p: &[f64]) -> f64 {
    histogram_kld(
        &scaled_probability_histogram(p).distribution(),
        &porter_thomas_reference(),
    )
    .expect("bins share the standard grid")
}

/// `(m, KLD from Porter-Thomas)` for every recorded layer.
pub fn porter_thomas_kld_curve(trace: &EvolutionTrace) -> Vec<(usize, f64)> {
    trace
        .distributions
        .iter()
        .enumerate()
        .map(|(m, p)| (m, porter_thomas_kld(p)))
        .collect()
}

/// Fraction of outcomes with `p(z) > δ/N`.
pub fn anticoncentration_fraction(p: &[f64], delta: f64) -> f64 {
    let threshold = delta / p.len() as f64;
    p.iter().filter(|&&x| x > threshold).count() as f64 / p.len() as f64
}

/// Mean `D(p_{m+δm} ‖ p_m)` over `m ∈ [window_start, window_start + window_len)`
/// for `δm = 0..=dm_max` (direction as given).
pub fn temporal_memory_of_trace(
    trace: &EvolutionTrace,
    window_start: usize,
    window_len: usize,
    dm_max: usize,
    direction: KlDirection,
) -> Result<Vec<(usize, f64)>> {
    let end = window_start + window_len;
    if window_len == 0 || end - 1 + dm_max > trace.layers() {
        return Err(Error::InvalidWindow {
            start: window_start,
            end: end + dm_max,
            len: trace.layers(),
        });
    }
    (0..=dm_max)
        .map(|dm| {
            let total = (window_start..end).try_fold(0.0, |acc, m| {
                let later = &trace.distributions[m + dm];
                let earlier = &trace.distributions[m];
                direction
                    .divergence(later, earlier, KLD_EPSILON)
                    .map(|d| acc + d)
            })?;
            Ok((dm, total / window_len as f64))
        })
        .collect()
}

/// Runs a random schedule long enough to cover the window plus `dm_max`
/// and returns its temporal-memory curve in the default direction.
pub fn temporal_memory<R: Rng + ?Sized>(
    params: &ChainParams,
    config: &PropagatorConfig,
    window_start: usize,
    window_len: usize,
    dm_max: usize,
    rng: &mut R,
) -> Result<Vec<(usize, f64)>> {
    if window_len == 0 {
        return Err(Error::InvalidWindow {
            start: window_start,
            end: window_start,
            len: 0,
        });
    }
    let layers = window_start + window_len - 1 + dm_max;
    let schedule = QuenchSchedule::random(params, layers, rng);
    let trace = run_quench_sequence(params, &schedule, config)?;
    temporal_memory_of_trace(&trace, window_start, window_len, dm_max, KlDirection::Forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::build_period_propagator;
    use crate::spin_model::{build_static_hamiltonian, Phase};
    use crate::C64;
    use proptest::{prop_assert_eq, proptest};

    #[test]
    fn initial_state_is_all_up() {
        let p = ChainParams::reference(2, 0.0, 1.0);
        let psi = initial_state(&p);
        assert_eq!(psi.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(psi.norm(), 1.0);
        assert_eq!(psi.probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_schedule_keeps_initial_distribution() {
        let p = ChainParams::reference(3, 2.5, 1.0);
        let trace = run_quench_sequence(&p, &QuenchSchedule::new(vec![]), &PropagatorConfig::default()).unwrap();
        assert_eq!(trace.distributions.len(), 1);
        assert_eq!(trace.distributions[0][0], 1.0);
        let curve = porter_thomas_kld_curve(&trace);
        assert!(curve[0].1 > 1.0);
        assert!(composite_propagator(&p, &QuenchSchedule::new(vec![]), &PropagatorConfig::default()).is_err());
    }

    #[test]
    fn two_identical_static_layers_match_eigendecomposition() {
        let p = ChainParams::reference(3, 0.0, 1.0);
        let theta: DisorderVector = vec![0.3, 0.7, 0.1].into();
        let schedule = QuenchSchedule::new(vec![theta.clone(), theta.clone()]);
        let state = evolve_schedule(&p, &schedule, &PropagatorConfig::default()).unwrap();
        let h0 = build_static_hamiltonian(&p, &theta).unwrap();
        let (values, vectors) = h0.eigen().unwrap();
        let t = 2.0 * p.period();
        // oracle: ψ = Σ_k v_k e^{-i E_k 2T} ⟨v_k|0⟩
        let expected: Vec<C64> = (0..8)
            .map(|z| {
                (0..8)
                    .map(|k| vectors[(z, k)] * vectors[(0, k)].conj() * C64::from_polar(1.0, -values[k] * t))
                    .sum()
            })
            .collect();
        let expected = StateVector::from_amplitudes(expected).unwrap();
        assert!(state.distance(&expected) < 1e-12);
    }

    #[test]
    fn composite_matches_sequential_and_single_layer() {
        let p = Phase::ThermalDriven.params(4);
        let mut rng = SeedTree::new(1).rng();
        let schedule = QuenchSchedule::random(&p, 5, &mut rng);
        let cfg = PropagatorConfig::default();
        let u = composite_propagator(&p, &schedule, &cfg).unwrap();
        assert!(u.unitarity_error() < 1e-9);
        let trace = run_quench_sequence(&p, &schedule, &cfg).unwrap();
        let from_u = u.apply(&initial_state(&p)).unwrap().probabilities();
        let diff = from_u.iter().zip(trace.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8);
        for p_m in &trace.distributions {
            assert!((p_m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        let single = QuenchSchedule::new(vec![schedule.layers[0].clone()]);
        let a = composite_propagator(&p, &single, &cfg).unwrap();
        let b = build_period_propagator(&p, &schedule.layers[0], &cfg).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!((a.entry(i, j) - b.entry(i, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn layer_order_matters_in_thermal_phase() {
        let p = Phase::ThermalDriven.params(4);
        let mut rng = SeedTree::new(2).rng();
        let a = sample_disorder(&p, &mut rng);
        let b = sample_disorder(&p, &mut rng);
        let cfg = PropagatorConfig::default();
        let ab = evolve_schedule(&p, &QuenchSchedule::new(vec![a.clone(), b.clone()]), &cfg).unwrap();
        let ba = evolve_schedule(&p, &QuenchSchedule::new(vec![b, a]), &cfg).unwrap();
        let tv: f64 = ab
            .probabilities()
            .iter()
            .zip(ba.probabilities())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            * 0.5;
        assert!(tv > 1e-6, "{tv}");
    }

    #[test]
    fn anticoncentration_examples() {
        let uniform = vec![0.125; 8];
        assert_eq!(anticoncentration_fraction(&uniform, 0.5), 1.0);
        let mut basis = vec![0.0; 8];
        basis[3] = 1.0;
        assert_eq!(anticoncentration_fraction(&basis, 1.0), 0.125);
    }

    #[test]
    fn temporal_memory_window_and_zero_lag() {
        let p = Phase::MblUndriven.params(3);
        let mut rng = SeedTree::new(3).rng();
        let curve = temporal_memory(&p, &PropagatorConfig::default(), 4, 3, 2, &mut rng).unwrap();
        assert_eq!(curve.len(), 3);
        assert_eq!(curve[0], (0, 0.0));
        assert!(curve[1].1 > 0.0);

        let trace = run_quench_sequence(&p, &QuenchSchedule::random(&p, 5, &mut rng), &PropagatorConfig::default()).unwrap();
        assert!(matches!(
            temporal_memory_of_trace(&trace, 3, 2, 2, KlDirection::Forward),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(temporal_memory_of_trace(&trace, 3, 2, 1, KlDirection::Forward).is_ok());
    }

    proptest! {
        #[test]
        fn kld_curve_is_permutation_invariant(seed in 0u64..200, shift in 1usize..63) {
            let mut rng = SeedTree::new(seed).rng();
            let p: Vec<f64> = {
                let raw: Vec<f64> = (0..64).map(|_| rng.random::<f64>().powi(3)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            };
            let mut permuted = p.clone();
            permuted.rotate_left(shift);
            permuted.reverse();
            prop_assert_eq!(porter_thomas_kld(&p), porter_thomas_kld(&permuted));
        }
    }
}
