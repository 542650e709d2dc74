//! Single-period Floquet evolution.
//!
//! The driven path uses a symmetric split: per sub-step of width `Δt`,
//! `exp(-i D Δt/2) · Π_i exp(-i a_k X_i) · exp(-i D Δt/2)` where `D` is the
//! diagonal (`Z`, `ZZ`) part of `H0` and `a_k = [h/2 + f(t_k)] Δt` with `t_k`
//! the sub-step midpoint. Adjacent half phases are merged, so a period costs
//! `n_steps` diagonal multiplies plus `n_steps · L` two-level rotations.
//!
//! With `F = 0` and `exact_static` set, `exp(-i H0 T)` is applied through the
//! eigendecomposition of `H0` instead.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spin_model::{
    build_static_hamiltonian, diagonal_energies, drive_amplitude, site_mask, ChainParams,
    DisorderVector,
};
use crate::{Error, Result, C64};

/// Tolerance on `‖ψ‖ - 1` accepted at every public entry point.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Eigenvalue modulus tolerance for treating a matrix as unitary.
pub const UNITARY_TOLERANCE: f64 = 1e-6;

/// Normalized amplitude vector over the `2^L` computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self(amps)
    }

    /// Wraps amplitudes after checking the norm.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self(amplitudes);
        state.check_normalized()?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born-rule outcome distribution `|⟨z|ψ⟩|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Euclidean distance `‖ψ - φ‖`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `|⟨ψ|φ⟩|`, insensitive to a global phase.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm()
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    /// Sub-steps per period for the split scheme.
    pub n_steps: usize,
    /// Use the eigendecomposition of `H0` when the chain is undriven.
    pub exact_static: bool,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            n_steps: 128,
            exact_static: true,
        }
    }
}

impl PropagatorConfig {
    pub fn split(n_steps: usize) -> Self {
        Self {
            n_steps,
            exact_static: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Scheme {
    Split {
        half_phase: Vec<C64>,
        full_phase: Vec<C64>,
        /// `(cos a_k, sin a_k)` per sub-step.
        rotations: Vec<(f64, f64)>,
    },
    Exact {
        vectors: Mat<f64>,
        phases: Vec<C64>,
    },
}

/// One period of evolution with fixed parameters, precomputed so it can be
/// applied to many states.
#[derive(Debug, Clone)]
pub struct FloquetLayer {
    length: usize,
    scheme: Scheme,
}

fn phases(energies: &[f64], dt: f64) -> Vec<C64> {
    energies
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * dt))
        .collect()
}

fn apply_rotation(amps: &mut [C64], mask: usize, cos: f64, sin: f64) {
    // exp(-i a X) = cos a - i sin a X
    for block in amps.chunks_exact_mut(2 * mask) {
        let (lo, hi) = block.split_at_mut(mask);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = C64::new(cos * x.re + sin * y.im, cos * x.im - sin * y.re);
            *b = C64::new(cos * y.re + sin * x.im, cos * y.im - sin * x.re);
        }
    }
}

fn apply_phase(amps: &mut [C64], phase: &[C64]) {
    for (a, p) in amps.iter_mut().zip(phase) {
        *a *= p;
    }
}

impl FloquetLayer {
    pub fn new(
        params: &ChainParams,
        theta: &DisorderVector,
        config: &PropagatorConfig,
    ) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        theta.check_length(params)?;
        let period = params.period();
        let scheme = if !params.is_driven() && config.exact_static {
            let h0 = build_static_hamiltonian(params, theta)?;
            let (values, vectors) = h0.real_eigen()?;
            Scheme::Exact {
                vectors,
                phases: phases(&values, period),
            }
        } else {
            let dt = period / config.n_steps as f64;
            let diag = diagonal_energies(params, theta)?;
            let rotations = (0..config.n_steps)
                .map(|k| {
                    let t_mid = (k as f64 + 0.5) * dt;
                    let angle = (0.5 * params.field + drive_amplitude(params, t_mid)) * dt;
                    (angle.cos(), angle.sin())
                })
                .collect();
            Scheme::Split {
                half_phase: phases(&diag, 0.5 * dt),
                full_phase: phases(&diag, dt),
                rotations,
            }
        };
        Ok(Self {
            length: params.length,
            scheme,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.length
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.scheme, Scheme::Exact { .. })
    }

    /// Evolves raw amplitudes in place. The length must equal [`Self::dim`].
    pub fn apply_in_place(&self, amps: &mut [C64]) {
        assert_eq!(amps.len(), self.dim(), "amplitude vector has wrong length");
        match &self.scheme {
            Scheme::Split {
                half_phase,
                full_phase,
                rotations,
            } => {
                apply_phase(amps, half_phase);
                for (k, &(cos, sin)) in rotations.iter().enumerate() {
                    if k > 0 {
                        apply_phase(amps, full_phase);
                    }
                    for site in 0..self.length {
                        apply_rotation(amps, site_mask(self.length, site), cos, sin);
                    }
                }
                apply_phase(amps, half_phase);
            }
            Scheme::Exact { vectors, phases } => {
                let n = amps.len();
                let coeffs: Vec<C64> = (0..n)
                    .map(|k| {
                        let col = vectors.col(k);
                        let mut acc = C64::new(0.0, 0.0);
                        for z in 0..n {
                            acc += amps[z] * col[z];
                        }
                        acc * phases[k]
                    })
                    .collect();
                amps.fill(C64::new(0.0, 0.0));
                for (k, c) in coeffs.iter().enumerate() {
                    let col = vectors.col(k);
                    for z in 0..n {
                        amps[z] += c * col[z];
                    }
                }
            }
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        state.check_normalized()?;
        let mut out = state.clone();
        self.apply_in_place(&mut out.0);
        Ok(out)
    }

    /// Replaces `m` by `U m` where `U` is this layer's propagator.
    pub fn apply_to_matrix(&self, m: &mut Mat<C64>) {
        assert_eq!(m.nrows(), self.dim());
        match &self.scheme {
            Scheme::Exact { .. } => {
                let u = self.dense();
                *m = &u.0 * &*m;
            }
            Scheme::Split { .. } => {
                let n = m.nrows();
                let cols: Vec<Vec<C64>> = (0..m.ncols())
                    .into_par_iter()
                    .map(|j| {
                        let mut col: Vec<C64> = (0..n).map(|i| m[(i, j)]).collect();
                        self.apply_in_place(&mut col);
                        col
                    })
                    .collect();
                for (j, col) in cols.iter().enumerate() {
                    for (i, &v) in col.iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
            }
        }
    }

    /// Dense propagator of this layer.
    pub fn dense(&self) -> UnitaryMatrix {
        let n = self.dim();
        match &self.scheme {
            Scheme::Exact { vectors, phases } => {
                let scaled = Mat::<C64>::from_fn(n, n, |i, k| phases[k] * vectors[(i, k)]);
                let vt = Mat::<C64>::from_fn(n, n, |k, j| C64::new(vectors[(j, k)], 0.0));
                UnitaryMatrix(&scaled * &vt)
            }
            Scheme::Split { .. } => {
                let mut m = Mat::<C64>::identity(n, n);
                self.apply_to_matrix(&mut m);
                UnitaryMatrix(m)
            }
        }
    }
}

/// Dense unitary on the computational basis.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix(pub(crate) Mat<C64>);

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Self {
        Self(Mat::identity(dim, dim))
    }

    /// Wraps a matrix without checking unitarity; see [`Self::unitarity_error`].
    pub fn from_matrix(matrix: Mat<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols());
        Self(matrix)
    }

    pub fn diagonal(phases: &[C64]) -> Self {
        let n = phases.len();
        Self(Mat::from_fn(n, n, |i, j| {
            if i == j {
                phases[i]
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.0
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.0[(i, col)]).collect()
    }

    /// Frobenius norm of `U†U - I`; an upper bound on the operator norm.
    pub fn unitarity_error(&self) -> f64 {
        let gram = self.0.adjoint() * &self.0;
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                acc += (gram[(i, j)] - C64::new(target, 0.0)).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `self · other`.
    pub fn compose(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &other.0)
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (j, a) in state.amplitudes().iter().enumerate() {
            let col = self.0.col(j);
            for i in 0..n {
                out[i] += col[i] * a;
            }
        }
        Ok(StateVector(out))
    }

    /// Eigenvalues; errors when any modulus deviates from 1 beyond
    /// [`UNITARY_TOLERANCE`].
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let values = self.0.eigenvalues().map_err(|_| Error::Eigendecomposition)?;
        check_unit_modulus(&values)?;
        Ok(values)
    }

    /// Eigenvalues and unit-norm eigenvectors (as columns).
    pub fn eigen(&self) -> Result<(Vec<C64>, Mat<C64>)> {
        let evd = self.0.eigen().map_err(|_| Error::Eigendecomposition)?;
        let n = self.dim();
        let values: Vec<C64> = (0..n).map(|k| evd.S()[k]).collect();
        check_unit_modulus(&values)?;
        let mut vectors = evd.U().to_owned();
        for k in 0..n {
            let norm = (0..n).map(|i| vectors[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                vectors[(i, k)] /= norm;
            }
        }
        Ok((values, vectors))
    }
}

fn check_unit_modulus(values: &[C64]) -> Result<()> {
    let deviation = values
        .iter()
        .map(|v| (v.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if deviation > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// Sorted quasi-energies (or eigenenergies when `is_folded` is false).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiSpectrum {
    pub energies: Vec<f64>,
    pub is_folded: bool,
}

impl QuasiSpectrum {
    /// Unfolded spectrum of a static Hamiltonian.
    pub fn from_energies(mut energies: Vec<f64>) -> Self {
        energies.sort_by(f64::total_cmp);
        Self {
            energies,
            is_folded: false,
        }
    }
}

/// Applies one period of `H(θ, t)` to `state`.
pub fn evolve_one_period(
    state: &StateVector,
    params: &ChainParams,
    theta: &DisorderVector,
    config: &PropagatorConfig,
) -> Result<StateVector> {
    FloquetLayer::new(params, theta, config)?.apply(state)
}

/// Dense `U(θ)`; column `z` is the evolved basis state `|z⟩`.
pub fn build_period_propagator(
    params: &ChainParams,
    theta: &DisorderVector,
    config: &PropagatorConfig,
) -> Result<UnitaryMatrix> {
    Ok(FloquetLayer::new(params, theta, config)?.dense())
}

/// Spectrum used for single-layer level statistics: eigenvalues of `H0` when
/// undriven, folded quasi-energies of `U(θ)` otherwise.
pub fn single_layer_spectrum(
    params: &ChainParams,
    theta: &DisorderVector,
    config: &PropagatorConfig,
) -> Result<QuasiSpectrum> {
    if params.is_driven() {
        let u = build_period_propagator(params, theta, config)?;
        quasi_energies(&u, params.period())
    } else {
        let h0 = build_static_hamiltonian(params, theta)?;
        Ok(QuasiSpectrum::from_energies(h0.eigenvalues()?))
    }
}

/// `E_α = (-arg λ_α mod 2π) / T`, sorted ascending in `[0, 2π/T)`.
pub fn quasi_energies(u: &UnitaryMatrix, period: f64) -> Result<QuasiSpectrum> {
    let values = u.eigenvalues()?;
    Ok(fold_eigenvalues(&values, period))
}

pub(crate) fn fold_eigenvalues(values: &[C64], period: f64) -> QuasiSpectrum {
    use std::f64::consts::TAU;
    let mut energies: Vec<f64> = values
        .iter()
        .map(|v| {
            let mut phase = -v.arg();
            if phase < 0.0 {
                phase += TAU;
            }
            // -arg(λ) = -π maps onto π; guard the rounding edge at 2π
            if phase >= TAU {
                phase -= TAU;
            }
            phase / period
        })
        .collect();
    energies.sort_by(f64::total_cmp);
    QuasiSpectrum {
        energies,
        is_folded: true,
    }
}
