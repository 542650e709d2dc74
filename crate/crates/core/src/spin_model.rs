//! The driven disordered Ising chain.
//!
//! `H(θ, t) = H0(θ) + f(t) V` with
//! `H0 = Σ θ_i Z_i + J Σ Z_i Z_{i+1} + (h/2) Σ X_i` on an open chain,
//! `V = Σ X_i` and `f(t) = -(F/2) cos(ω t)`.

use std::f64::consts::PI;

use faer::{Mat, Side};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Largest chain for which dense `2^L x 2^L` operators are built.
pub const MAX_DENSE_LENGTH: usize = 14;

/// Physical couplings and geometry of the chain. Energies are in units of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of spins `L`.
    pub length: usize,
    /// Nearest-neighbour `ZZ` coupling `J`.
    pub coupling: f64,
    /// Static transverse field `h` (enters as `h/2`).
    pub field: f64,
    /// Drive amplitude `F`.
    pub drive_amplitude: f64,
    /// Drive angular frequency `ω`.
    pub drive_frequency: f64,
    /// Disorder strength `W`; local fields are drawn from `[0, W]`.
    pub disorder: f64,
}

impl ChainParams {
    pub fn new(
        length: usize,
        coupling: f64,
        field: f64,
        drive_amplitude: f64,
        drive_frequency: f64,
        disorder: f64,
    ) -> Result<Self> {
        let params = Self {
            length,
            coupling,
            field,
            drive_amplitude,
            drive_frequency,
            disorder,
        };
        params.validate()?;
        Ok(params)
    }

    /// Defaults used throughout the reference figures: `J = 1`, `h = 2.5`,
    /// `ω = 8`.
    pub fn reference(length: usize, drive_amplitude: f64, disorder: f64) -> Self {
        Self {
            length,
            coupling: 1.0,
            field: 2.5,
            drive_amplitude,
            drive_frequency: 8.0,
            disorder,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.length == 0 {
            return bad("L", "must be at least 1");
        }
        if self.length > MAX_DENSE_LENGTH {
            return bad("L", "too large for a dense state vector simulation");
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return bad("J", "must be positive and finite");
        }
        if !self.field.is_finite() {
            return bad("h", "must be finite");
        }
        if !(self.drive_amplitude >= 0.0 && self.drive_amplitude.is_finite()) {
            return bad("F", "must be nonnegative and finite");
        }
        if !(self.drive_frequency > 0.0 && self.drive_frequency.is_finite()) {
            return bad("omega", "must be positive and finite");
        }
        if !(self.disorder >= 0.0 && self.disorder.is_finite()) {
            return bad("W", "must be nonnegative and finite");
        }
        Ok(())
    }

    /// Hilbert-space dimension `N = 2^L`.
    pub fn dim(&self) -> usize {
        1 << self.length
    }

    /// Drive period `T = 2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.drive_frequency
    }

    pub fn is_driven(&self) -> bool {
        self.drive_amplitude != 0.0
    }
}

/// The four dynamical regimes: thermal (`W = J`) or many-body localized
/// (`W = 20 J`), each with `F = 0` or `F = 2.5 J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    ThermalUndriven,
    ThermalDriven,
    MblUndriven,
    MblDriven,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::ThermalDriven,
        Phase::ThermalUndriven,
        Phase::MblDriven,
        Phase::MblUndriven,
    ];

    pub fn disorder(&self) -> f64 {
        match self {
            Phase::ThermalUndriven | Phase::ThermalDriven => 1.0,
            Phase::MblUndriven | Phase::MblDriven => 20.0,
        }
    }

    pub fn drive_amplitude(&self) -> f64 {
        match self {
            Phase::ThermalDriven | Phase::MblDriven => 2.5,
            Phase::ThermalUndriven | Phase::MblUndriven => 0.0,
        }
    }

    pub fn params(&self, length: usize) -> ChainParams {
        ChainParams::reference(length, self.drive_amplitude(), self.disorder())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Phase::ThermalUndriven => "thermal-undriven",
            Phase::ThermalDriven => "thermal-driven",
            Phase::MblUndriven => "mbl-undriven",
            Phase::MblDriven => "mbl-driven",
        }
    }
}

/// Bit mask of spin `site` (0-based) under the big-endian convention.
#[inline]
pub fn site_mask(length: usize, site: usize) -> usize {
    1 << (length - 1 - site)
}

/// `Z_site` eigenvalue of basis state `index`: `+1` for bit 0, `-1` for bit 1.
#[inline]
pub fn z_value(index: usize, length: usize, site: usize) -> f64 {
    if index & site_mask(length, site) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One layer's local fields `θ_1..θ_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderVector(pub Vec<f64>);

impl DisorderVector {
    pub fn zeros(length: usize) -> Self {
        Self(vec![0.0; length])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn check_length(&self, params: &ChainParams) -> Result<()> {
        if self.len() != params.length {
            return Err(Error::DimensionMismatch {
                expected: params.length,
                found: self.len(),
            });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for DisorderVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Dense Hermitian operator on the `2^L` computational basis.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: Mat<C64>,
}

impl HermitianOperator {
    pub fn from_matrix(matrix: Mat<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.matrix[(i, j)].im == 0.0))
    }

    fn real_part(&self) -> Mat<f64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)].re)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.is_real() {
            self.real_part()
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::Eigendecomposition)
        } else {
            self.matrix
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::Eigendecomposition)
        }
    }

    /// Eigenvalues (ascending) and the matching orthonormal eigenvectors as
    /// matrix columns.
    pub fn eigen(&self) -> Result<(Vec<f64>, Mat<C64>)> {
        let evd = self
            .matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Eigendecomposition)?;
        let values = (0..self.dim()).map(|k| evd.S()[k].re).collect();
        Ok((values, evd.U().to_owned()))
    }

    /// Real eigendecomposition, valid when every entry is real (true for `H0`
    /// and `V` in the computational basis).
    pub fn real_eigen(&self) -> Result<(Vec<f64>, Mat<f64>)> {
        if !self.is_real() {
            return Err(Error::InvalidParameter {
                name: "operator",
                reason: "real eigendecomposition requested for a complex matrix".into(),
            });
        }
        let evd = self
            .real_part()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Eigendecomposition)?;
        let values = (0..self.dim()).map(|k| evd.S()[k]).collect();
        Ok((values, evd.U().to_owned()))
    }

    /// Frobenius norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &HermitianOperator) -> f64 {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += (ab[(i, j)] - ba[(i, j)]).norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Diagonal (`Z` and `ZZ`) part of `H0` for every basis state.
pub fn diagonal_energies(params: &ChainParams, theta: &DisorderVector) -> Result<Vec<f64>> {
    theta.check_length(params)?;
    let l = params.length;
    let energies = (0..params.dim())
        .map(|z| {
            let field: f64 = (0..l).map(|i| theta.0[i] * z_value(z, l, i)).sum();
            let bonds: f64 = (0..l.saturating_sub(1))
                .map(|i| z_value(z, l, i) * z_value(z, l, i + 1))
                .sum();
            field + params.coupling * bonds
        })
        .collect();
    Ok(energies)
}

fn add_x_field(matrix: &mut Mat<C64>, length: usize, strength: f64) {
    if strength == 0.0 {
        return;
    }
    for z in 0..(1usize << length) {
        for site in 0..length {
            let flipped = z ^ site_mask(length, site);
            matrix[(flipped, z)] += C64::new(strength, 0.0);
        }
    }
}

/// `H0(θ)` in the computational basis.
pub fn build_static_hamiltonian(
    params: &ChainParams,
    theta: &DisorderVector,
) -> Result<HermitianOperator> {
    params.validate()?;
    let diag = diagonal_energies(params, theta)?;
    let n = params.dim();
    let mut matrix = Mat::<C64>::zeros(n, n);
    for (z, &e) in diag.iter().enumerate() {
        matrix[(z, z)] = C64::new(e, 0.0);
    }
    add_x_field(&mut matrix, params.length, params.field / 2.0);
    Ok(HermitianOperator::from_matrix(matrix))
}

/// The drive operator `V = Σ X_i`.
pub fn build_drive_operator(params: &ChainParams) -> HermitianOperator {
    let n = params.dim();
    let mut matrix = Mat::<C64>::zeros(n, n);
    add_x_field(&mut matrix, params.length, 1.0);
    HermitianOperator::from_matrix(matrix)
}

/// Drive waveform `f(t) = -(F/2) cos(ω t)`.
pub fn drive_amplitude(params: &ChainParams, t: f64) -> f64 {
    -0.5 * params.drive_amplitude * (params.drive_frequency * t).cos()
}

/// Local fields drawn i.i.d. uniform on `[0, W]`.
pub fn sample_disorder<R: Rng + ?Sized>(params: &ChainParams, rng: &mut R) -> DisorderVector {
    let w = params.disorder;
    DisorderVector(
        (0..params.length)
            .map(|_| if w == 0.0 { 0.0 } else { rng.random_range(0.0..=w) })
            .collect(),
    )
}
