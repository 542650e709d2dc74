//! Sequential best-of-D training in Hilbert space.
//!
//! Each step proposes `D` freshly sampled disorder layers, evolves a copy of
//! the current state through each, scores the outcome distribution against
//! the data histogram, and keeps the cheapest layer (lowest index on ties).
//! The current state is advanced by the accepted layer only, never
//! recomputed from the start.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generative::{
    draw_dataset, empirical_histogram, exact_distribution, sample_indices, sample_model, BoltzmannModel, Dataset,
    EmpiricalDistribution, Provenance,
};
use crate::propagator::{single_layer_spectrum, FloquetLayer, PropagatorConfig, StateVector};
use crate::quench::initial_state;
use crate::seed::SeedTree;
use crate::spectral::{spacing_ratios, KlDirection};
use crate::spin_model::{sample_disorder, ChainParams, DisorderVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Number of training steps (accepted layers), `M_max`.
    pub max_layers: usize,
    /// Candidates per step, `D`.
    pub candidates: usize,
    /// `Forward` scores `D(Q̃ ‖ p)`, `Reverse` scores `D(p ‖ Q̃)`.
    pub kld_direction: KlDirection,
    pub epsilon: f64,
    /// Finite-shot mode when nonzero: `p` is the histogram of this many
    /// measurements instead of the exact Born probabilities.
    pub shot_count: usize,
    /// Keep every candidate cost in the trace.
    pub record_candidates: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_layers: 10_000,
            candidates: 200,
            kld_direction: KlDirection::Forward,
            epsilon: 1e-12,
            shot_count: 0,
            record_candidates: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.max_layers == 0 {
            return bad("M", "must be at least 1");
        }
        if self.candidates == 0 {
            return bad("D", "must be at least 1");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be positive");
        }
        Ok(())
    }
}

/// Everything needed to inspect or replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Accepted cost after step `m = 1..`.
    pub costs: Vec<f64>,
    pub chosen_thetas: Vec<DisorderVector>,
    pub candidate_medians: Vec<f64>,
    pub candidate_costs: Option<Vec<Vec<f64>>>,
    pub final_state: StateVector,
}

impl TrainingTrace {
    pub fn steps(&self) -> usize {
        self.costs.len()
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.costs.last().copied()
    }
}

/// KL cost between a model distribution and the data histogram.
pub fn cost(p_model: &[f64], q_tilde: &EmpiricalDistribution, config: &TrainingConfig) -> Result<f64> {
    if p_model.len() != q_tilde.len() {
        return Err(Error::DimensionMismatch {
            expected: q_tilde.len(),
            found: p_model.len(),
        });
    }
    config
        .kld_direction
        .divergence(&q_tilde.masses, p_model, config.epsilon)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Step-wise driver; [`train`] runs it to completion. A partially filled
/// trace can be resumed because every candidate stream is addressed by
/// `(step, candidate)` below the run's seed.
pub struct Trainer<'a> {
    params: ChainParams,
    target: &'a EmpiricalDistribution,
    config: TrainingConfig,
    propagator: PropagatorConfig,
    seed: SeedTree,
    trace: TrainingTrace,
}

impl<'a> Trainer<'a> {
    pub fn new(
        params: &ChainParams,
        target: &'a EmpiricalDistribution,
        config: &TrainingConfig,
        propagator: &PropagatorConfig,
        seed: SeedTree,
    ) -> Result<Self> {
        let initial = TrainingTrace {
            costs: Vec::new(),
            chosen_thetas: Vec::new(),
            candidate_medians: Vec::new(),
            candidate_costs: config.record_candidates.then(Vec::new),
            final_state: initial_state(params),
        };
        Self::resume(params, target, config, propagator, seed, initial)
    }

    pub fn resume(
        params: &ChainParams,
        target: &'a EmpiricalDistribution,
        config: &TrainingConfig,
        propagator: &PropagatorConfig,
        seed: SeedTree,
        trace: TrainingTrace,
    ) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        propagator.validate()?;
        if target.len() != params.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                found: target.len(),
            });
        }
        if trace.final_state.dim() != params.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                found: trace.final_state.dim(),
            });
        }
        Ok(Self {
            params: *params,
            target,
            config: config.clone(),
            propagator: *propagator,
            seed,
            trace,
        })
    }

    pub fn completed_steps(&self) -> usize {
        self.trace.steps()
    }

    pub fn is_done(&self) -> bool {
        self.completed_steps() >= self.config.max_layers
    }

    pub fn trace(&self) -> &TrainingTrace {
        &self.trace
    }

    pub fn into_trace(self) -> TrainingTrace {
        self.trace
    }

    fn evaluate(&self, step: usize, candidate: usize) -> Result<(f64, DisorderVector)> {
        let mut rng = self.seed.descend(&[step as u64, candidate as u64]).rng();
        let theta = sample_disorder(&self.params, &mut rng);
        let evolved = FloquetLayer::new(&self.params, &theta, &self.propagator)?
            .apply(&self.trace.final_state)?;
        let mut p = evolved.probabilities();
        if self.config.shot_count > 0 {
            let shots = sample_indices(&p, self.config.shot_count, &mut rng);
            p.iter_mut().for_each(|x| *x = 0.0);
            for z in shots {
                p[z] += 1.0 / self.config.shot_count as f64;
            }
        }
        let c = cost(&p, self.target, &self.config)?;
        if !c.is_finite() {
            return Err(Error::NonFiniteCost { step, candidate });
        }
        Ok((c, theta))
    }

    /// Runs one propose/select/accept step and returns the accepted cost.
    pub fn step(&mut self) -> Result<f64> {
        let step = self.completed_steps();
        let evaluated: Vec<(f64, DisorderVector)> = (0..self.config.candidates)
            .into_par_iter()
            .map(|k| self.evaluate(step, k))
            .collect::<Result<_>>()?;
        let costs: Vec<f64> = evaluated.iter().map(|(c, _)| *c).collect();
        let best = costs
            .iter()
            .enumerate()
            .fold(0, |best, (k, &c)| if c < costs[best] { k } else { best });
        let (accepted_cost, theta) = evaluated[best].clone();

        let layer = FloquetLayer::new(&self.params, &theta, &self.propagator)?;
        self.trace.final_state = layer.apply(&self.trace.final_state)?;
        self.trace.costs.push(accepted_cost);
        self.trace.chosen_thetas.push(theta);
        self.trace.candidate_medians.push(median(&costs));
        if let Some(all) = self.trace.candidate_costs.as_mut() {
            all.push(costs);
        }
        Ok(accepted_cost)
    }
}

/// Full training run from `|ψ0⟩`.
pub fn train(
    params: &ChainParams,
    q_tilde: &EmpiricalDistribution,
    config: &TrainingConfig,
    propagator: &PropagatorConfig,
    seed: SeedTree,
) -> Result<TrainingTrace> {
    let mut trainer = Trainer::new(params, q_tilde, config, propagator, seed)?;
    while !trainer.is_done() {
        trainer.step()?;
    }
    Ok(trainer.into_trace())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub w_values: Vec<f64>,
    /// Independent Boltzmann models (datasets) per `W`.
    pub model_count: usize,
    pub dataset_size: usize,
    pub kt0: f64,
    /// Single-layer spectra averaged for `⟨r⟩` at each `W`.
    pub ratio_realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub disorder: f64,
    pub mean_final_cost: f64,
    pub std_final_cost: f64,
    pub mean_ratio: f64,
}

/// The `k`-th Boltzmann model of a run and a dataset drawn from it. Models
/// depend on `(seed, k)` only, so every point of a sweep sees the same
/// targets.
pub fn boltzmann_dataset(
    params: &ChainParams,
    kt0: f64,
    dataset_size: usize,
    seed: &SeedTree,
    k: usize,
) -> Result<(BoltzmannModel, Dataset)> {
    let mut rng = seed.descend(&[0, k as u64]).rng();
    let model = sample_model(params.length, params.coupling, kt0, &mut rng);
    let q = exact_distribution(&model)?;
    let provenance = Provenance {
        model_id: format!("boltzmann-{k}"),
        seed: seed.master(),
    };
    let data = draw_dataset(&q, dataset_size, provenance, &mut rng)?;
    Ok((model, data))
}

/// Histogram `Q̃` of [`boltzmann_dataset`].
pub fn dataset_target(params: &ChainParams, kt0: f64, dataset_size: usize, seed: &SeedTree, k: usize) -> Result<EmpiricalDistribution> {
    let (_, data) = boltzmann_dataset(params, kt0, dataset_size, seed, k)?;
    empirical_histogram(&data)
}

/// Mean single-layer spacing ratio over independent disorder draws.
pub fn mean_single_layer_ratio(params: &ChainParams, propagator: &PropagatorConfig, realizations: usize, seed: &SeedTree) -> Result<f64> {
    let means: Vec<f64> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let theta = sample_disorder(params, &mut seed.child(r as u64).rng());
            let spectrum = single_layer_spectrum(params, &theta, propagator)?;
            let ratios = spacing_ratios(&spectrum.energies)?;
            Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(means.iter().sum::<f64>() / means.len() as f64)
}

/// Final training cost and single-layer `⟨r⟩` as functions of `W`.
pub fn sweep_disorder(
    base: &ChainParams,
    sweep: &SweepConfig,
    config: &TrainingConfig,
    propagator: &PropagatorConfig,
    seed: SeedTree,
) -> Result<Vec<SweepRow>> {
    if sweep.model_count == 0 {
        return Err(Error::InvalidParameter {
            name: "model_count",
            reason: "must be at least 1".into(),
        });
    }
    let targets: Vec<EmpiricalDistribution> = (0..sweep.model_count)
        .map(|k| dataset_target(base, sweep.kt0, sweep.dataset_size, &seed, k))
        .collect::<Result<_>>()?;
    sweep
        .w_values
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let params = ChainParams { disorder: w, ..*base };
            params.validate()?;
            let finals: Vec<f64> = targets
                .par_iter()
                .enumerate()
                .map(|(k, q)| {
                    let run_seed = seed.descend(&[1, wi as u64, k as u64]);
                    let trace = train(&params, q, config, propagator, run_seed)?;
                    Ok(trace.final_cost().expect("at least one step"))
                })
                .collect::<Result<_>>()?;
            let n = finals.len() as f64;
            let mean = finals.iter().sum::<f64>() / n;
            let var = if finals.len() > 1 {
                finals.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mean_ratio = mean_single_layer_ratio(
                &params,
                propagator,
                sweep.ratio_realizations.max(1),
                &seed.descend(&[2, wi as u64]),
            )?;
            Ok(SweepRow {
                disorder: w,
                mean_final_cost: mean,
                std_final_cost: var.sqrt(),
                mean_ratio,
            })
        })
        .collect()
}
