//! Boltzmann-machine targets: `Q(z) ∝ exp(-E(z)/kT0)` with
//! `E(z) = Σ a_i z_i + Σ_{i<j} b_ij z_i z_j` over all pairs.
//!
//! Spins map to basis indices with the crate-wide convention `z_i = +1` ↔
//! bit 0, spin 1 most significant.

use std::io::{self, BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest chain accepted by [`exact_distribution`].
pub const MAX_ENUMERATION_LENGTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannModel {
    /// Local biases `a_i`.
    pub biases: Vec<f64>,
    /// Symmetric couplings `b_ij` with zero diagonal.
    pub couplings: Vec<Vec<f64>>,
    /// Temperature scale `k_B T0`; `f64::INFINITY` gives the uniform limit.
    pub kt0: f64,
}

impl BoltzmannModel {
    pub fn length(&self) -> usize {
        self.biases.len()
    }

    fn beta(&self) -> f64 {
        if self.kt0.is_infinite() {
            0.0
        } else {
            1.0 / self.kt0
        }
    }
}

/// Biases and couplings i.i.d. uniform on `[-J/2, J/2]`.
pub fn sample_model<R: Rng + ?Sized>(length: usize, coupling: f64, kt0: f64, rng: &mut R) -> BoltzmannModel {
    let half = 0.5 * coupling;
    let biases = (0..length).map(|_| rng.random_range(-half..=half)).collect();
    let mut couplings = vec![vec![0.0; length]; length];
    for i in 0..length {
        for j in (i + 1)..length {
            let b = rng.random_range(-half..=half);
            couplings[i][j] = b;
            couplings[j][i] = b;
        }
    }
    BoltzmannModel {
        biases,
        couplings,
        kt0,
    }
}

pub fn energy(model: &BoltzmannModel, spins: &[i8]) -> Result<f64> {
    if spins.len() != model.length() {
        return Err(Error::DimensionMismatch {
            expected: model.length(),
            found: spins.len(),
        });
    }
    if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
        return Err(Error::InvalidSpin(bad as i32));
    }
    let l = spins.len();
    let mut e = 0.0;
    for i in 0..l {
        let zi = spins[i] as f64;
        e += model.biases[i] * zi;
        for j in (i + 1)..l {
            e += model.couplings[i][j] * zi * spins[j] as f64;
        }
    }
    Ok(e)
}

pub fn index_to_spins(index: usize, length: usize) -> Vec<i8> {
    (0..length)
        .map(|i| if index >> (length - 1 - i) & 1 == 0 { 1 } else { -1 })
        .collect()
}

pub fn spins_to_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .fold(0, |acc, &s| (acc << 1) | usize::from(s == -1))
}

/// Probability vector over the `2^L` outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub masses: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "masses",
                reason: "must be nonnegative".into(),
            });
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "masses",
                reason: format!("sum to {total}, expected 1"),
            });
        }
        Ok(Self { masses })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Exact Gibbs distribution by enumeration.
pub fn exact_distribution(model: &BoltzmannModel) -> Result<EmpiricalDistribution> {
    let l = model.length();
    if l > MAX_ENUMERATION_LENGTH {
        return Err(Error::EnumerationTooLarge(l));
    }
    let beta = model.beta();
    let log_weights: Vec<f64> = (0..1usize << l)
        .map(|z| energy(model, &index_to_spins(z, l)).map(|e| -beta * e))
        .collect::<Result<_>>()?;
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(EmpiricalDistribution {
        masses: weights.into_iter().map(|w| w / z).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_id: String,
    pub seed: u64,
}

/// Spin samples, one `±1` vector per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Vec<i8>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One sample per line, space-separated `±1`.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for s in &self.samples {
            let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R, provenance: Provenance) -> io::Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let sample = line
                .split_whitespace()
                .map(|tok| match tok {
                    "1" | "+1" => Ok(1),
                    "-1" => Ok(-1),
                    other => Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("line {}: invalid spin `{other}`", lineno + 1),
                    )),
                })
                .collect::<io::Result<Vec<i8>>>()?;
            samples.push(sample);
        }
        Ok(Self {
            samples,
            provenance,
        })
    }
}

/// `n` i.i.d. categorical draws by inverse-transform sampling on the CDF.
pub fn draw_dataset<R: Rng + ?Sized>(
    q: &EmpiricalDistribution,
    n: usize,
    provenance: Provenance,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    let length = q.len().trailing_zeros() as usize;
    let indices = sample_indices(&q.masses, n, rng);
    Ok(Dataset {
        samples: indices.into_iter().map(|z| index_to_spins(z, length)).collect(),
        provenance,
    })
}

/// Inverse-transform categorical sampling; shared with finite-shot training.
pub(crate) fn sample_indices<R: Rng + ?Sized>(masses: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for &m in masses {
        acc += m;
        cdf.push(acc);
    }
    let last_positive = masses.iter().rposition(|&m| m > 0.0).unwrap_or(0);
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(last_positive)
        })
        .collect()
}

/// Normalized histogram `Q̃` of a dataset.
pub fn empirical_histogram(data: &Dataset) -> Result<EmpiricalDistribution> {
    let first = data.samples.first().ok_or(Error::EmptyDataset)?;
    let l = first.len();
    let mut counts = vec![0u64; 1 << l];
    for s in &data.samples {
        if s.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: s.len(),
            });
        }
        if let Some(&bad) = s.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidSpin(bad as i32));
        }
        counts[spins_to_index(s)] += 1;
    }
    let n = data.len() as f64;
    Ok(EmpiricalDistribution {
        masses: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}
