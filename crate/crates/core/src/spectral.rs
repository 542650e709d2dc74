//! Level-spacing ratios, reference surmises, eigenvector component statistics
//! and histogram KL divergences.

use std::f64::consts::{LN_2, PI};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::propagator::UnitaryMatrix;
use crate::{Error, Result};

/// Regularizing mass added to every bin / outcome before taking logarithms.
pub const KLD_EPSILON: f64 = 1e-12;

/// Bins used for `Pr(r)`.
pub const RATIO_BINS: usize = 50;

/// Bins and upper edge used for `Pr(Nc)` and `Pr(Np)`.
pub const SCALED_BINS: usize = 60;
pub const SCALED_MAX: f64 = 12.0;

/// `r_α = min(Δ_α, Δ_{α+1}) / max(Δ_α, Δ_{α+1})` over consecutive gaps.
///
/// Two zero gaps give `r = 1`; a single zero gap gives `r = 0`.
pub fn spacing_ratios(spectrum: &[f64]) -> Result<Vec<f64>> {
    if spectrum.len() < 3 {
        return Err(Error::TooFewLevels {
            needed: 3,
            found: spectrum.len(),
        });
    }
    if let Some(index) = spectrum.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::UnsortedSpectrum { index: index + 1 });
    }
    Ok(spectrum
        .windows(3)
        .map(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi == 0.0 {
                1.0
            } else {
                lo / hi
            }
        })
        .collect())
}

/// Ratios of one spectrum with their mean and binned density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStatistics {
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
    pub histogram: BinnedDistribution,
}

impl LevelStatistics {
    pub fn from_spectrum(spectrum: &[f64]) -> Result<Self> {
        Ok(Self::from_ratios(spacing_ratios(spectrum)?))
    }

    pub fn from_ratios(ratios: Vec<f64>) -> Self {
        let mut hist = Histogram::uniform(0.0, 1.0, RATIO_BINS);
        hist.extend(&ratios);
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        Self {
            ratios,
            mean_ratio,
            histogram: hist.distribution(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReferenceEnsemble {
    Poisson,
    Goe,
    Coe,
    Cue,
    PorterThomas,
}

impl ReferenceEnsemble {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Poisson => "POI",
            Self::Goe => "GOE",
            Self::Coe => "COE",
            Self::Cue => "CUE",
            Self::PorterThomas => "PORTER_THOMAS",
        }
    }

    /// Closed-form `∫ r P(r) dr` of the surmise on `[0, 1]`.
    pub fn mean_ratio(&self) -> Option<f64> {
        match self {
            Self::Poisson => Some(2.0 * LN_2 - 1.0),
            Self::Goe | Self::Coe => Some(4.0 - 2.0 * 3f64.sqrt()),
            Self::Cue => Some(2.0 * 3f64.sqrt() / PI - 0.5),
            Self::PorterThomas => None,
        }
    }
}

/// Surmise density of the folded ratio `r ∈ [0, 1]`.
pub fn reference_r_density(ensemble: ReferenceEnsemble, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange {
            value: r,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let s = 1.0 + r + r * r;
    let x = r + r * r;
    match ensemble {
        ReferenceEnsemble::Poisson => Ok(2.0 / ((1.0 + r) * (1.0 + r))),
        ReferenceEnsemble::Goe | ReferenceEnsemble::Coe => Ok(6.75 * x / s.powf(2.5)),
        ReferenceEnsemble::Cue => Ok(81.0 * 3f64.sqrt() / (2.0 * PI) * x * x / s.powi(4)),
        ReferenceEnsemble::PorterThomas => Err(Error::InvalidParameter {
            name: "ensemble",
            reason: "Porter-Thomas has no spacing-ratio surmise".into(),
        }),
    }
}

/// Bin edges plus normalized masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDistribution {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl BinnedDistribution {
    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Mass divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .zip(&self.masses)
            .map(|(w, m)| m / (w[1] - w[0]))
            .collect()
    }

    /// Writes `bin_center,density,reference_density` rows. `reference` must
    /// share the bin edges.
    pub fn write_csv<W: Write>(&self, reference: &BinnedDistribution, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_center,density,reference_density")?;
        for ((c, d), r) in self
            .centers()
            .iter()
            .zip(self.densities())
            .zip(reference.densities())
        {
            writeln!(out, "{c},{d},{r}")?;
        }
        Ok(())
    }
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
        .collect()
}

/// Integer-count accumulator over uniform bins. Merging is exact and order
/// independent, so partial histograms from workers can be reduced freely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    lo_bits: u64,
    hi_bits: u64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0);
        Self {
            lo_bits: lo.to_bits(),
            hi_bits: hi.to_bits(),
            counts: vec![0; bins],
        }
    }

    pub fn lo(&self) -> f64 {
        f64::from_bits(self.lo_bits)
    }

    pub fn hi(&self) -> f64 {
        f64::from_bits(self.hi_bits)
    }

    /// Out-of-range values are clamped into the first or last bin.
    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let t = (x - self.lo()) / (self.hi() - self.lo()) * bins as f64;
        let idx = if t <= 0.0 {
            0
        } else {
            (t as usize).min(bins - 1)
        };
        self.counts[idx] += 1;
    }

    pub fn extend(&mut self, xs: &[f64]) {
        for &x in xs {
            self.add(x);
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(
            (self.lo_bits, self.hi_bits, self.counts.len()),
            (other.lo_bits, other.hi_bits, other.counts.len()),
            "histograms have different binning"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        uniform_edges(self.lo(), self.hi(), self.counts.len())
    }

    pub fn distribution(&self) -> BinnedDistribution {
        let total = self.total() as f64;
        BinnedDistribution {
            edges: self.edges(),
            masses: self.counts.iter().map(|&c| c as f64 / total).collect(),
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Reference bin masses on `edges`.
///
/// Spacing-ratio surmises are integrated per bin. Porter-Thomas uses the
/// exact `e^{-a} - e^{-b}`, with the tail beyond the last edge added to the
/// last bin to match [`Histogram`]'s clamping.
pub fn reference_masses(ensemble: ReferenceEnsemble, edges: &[f64]) -> BinnedDistribution {
    let nb = edges.len() - 1;
    let masses: Vec<f64> = match ensemble {
        ReferenceEnsemble::PorterThomas => (0..nb)
            .map(|b| {
                let upper = if b + 1 == nb {
                    0.0
                } else {
                    (-edges[b + 1]).exp()
                };
                (-edges[b].max(0.0)).exp() - upper
            })
            .collect(),
        _ => (0..nb)
            .map(|b| {
                let (a, c) = (edges[b].max(0.0), edges[b + 1].min(1.0));
                if c <= a {
                    0.0
                } else {
                    simpson(|r| reference_r_density(ensemble, r).unwrap_or(0.0), a, c, 32)
                }
            })
            .collect(),
    };
    let total: f64 = masses.iter().sum();
    BinnedDistribution {
        edges: edges.to_vec(),
        masses: masses.into_iter().map(|m| m / total).collect(),
    }
}

/// Porter-Thomas reference on the standard `[0, 12]`, 60-bin grid.
pub fn porter_thomas_reference() -> BinnedDistribution {
    reference_masses(
        ReferenceEnsemble::PorterThomas,
        &uniform_edges(0.0, SCALED_MAX, SCALED_BINS),
    )
}

fn regularize(masses: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = masses.iter().map(|m| m + eps).sum();
    masses.iter().map(|m| (m + eps) / total).collect()
}

/// `Σ p ln(p/q)` after adding `eps` to every entry of both vectors and
/// renormalizing.
pub fn discrete_kld(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let p = regularize(p, eps);
    let q = regularize(q, eps);
    Ok(p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum())
}

/// Which argument order a KL cost uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KlDirection {
    /// `D(first ‖ second)`.
    #[default]
    Forward,
    /// `D(second ‖ first)`.
    Reverse,
}

impl KlDirection {
    pub fn divergence(&self, first: &[f64], second: &[f64], eps: f64) -> Result<f64> {
        match self {
            KlDirection::Forward => discrete_kld(first, second, eps),
            KlDirection::Reverse => discrete_kld(second, first, eps),
        }
    }
}

/// `D(p ‖ q)` between two histograms on identical edges, regularized by
/// [`KLD_EPSILON`] per bin.
pub fn histogram_kld(p: &BinnedDistribution, q: &BinnedDistribution) -> Result<f64> {
    if p.edges != q.edges {
        return Err(Error::MismatchedBins);
    }
    discrete_kld(&p.masses, &q.masses, KLD_EPSILON)
}

/// Histogram of `N c` with `c = |⟨z|E_α⟩|²` over all basis states and
/// eigenvectors of `u`.
pub fn eigenstate_component_histogram(u: &UnitaryMatrix) -> Result<Histogram> {
    let (_, vectors) = u.eigen()?;
    let n = u.dim();
    let mut hist = Histogram::uniform(0.0, SCALED_MAX, SCALED_BINS);
    for k in 0..n {
        for z in 0..n {
            hist.add(n as f64 * vectors[(z, k)].norm_sqr());
        }
    }
    Ok(hist)
}

/// Binned `Pr(Nc)`; compare against [`porter_thomas_reference`] (`e^{-Nc}`).
pub fn eigenstate_component_stats(u: &UnitaryMatrix) -> Result<BinnedDistribution> {
    Ok(eigenstate_component_histogram(u)?.distribution())
}

/// Histogram of `N p(z)` for one outcome distribution.
pub fn scaled_probability_histogram(p: &[f64]) -> Histogram {
    let n = p.len() as f64;
    let mut hist = Histogram::uniform(0.0, SCALED_MAX, SCALED_BINS);
    for &x in p {
        hist.add(n * x);
    }
    hist
}
