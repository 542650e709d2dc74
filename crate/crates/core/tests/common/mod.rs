//! Random-matrix sampling oracles shared by the integration tests.
#![allow(dead_code)]

use faer::{Mat, Side};
use mblq::propagator::UnitaryMatrix;
use mblq::C64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn complex_gaussian<R: Rng>(n: usize, rng: &mut R) -> Mat<C64> {
    Mat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` divided out.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> Mat<C64> {
    let z = complex_gaussian(n, rng);
    let qr = z.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        q[(i, j)] * (d / d.norm())
    })
}

/// Haar-random state vector: normalized complex Gaussian amplitudes.
pub fn haar_state<R: Rng>(n: usize, rng: &mut R) -> Vec<C64> {
    let amps: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.into_iter().map(|a| a / norm).collect()
}

/// Sorted eigenvalues of a GOE matrix `(A + Aᵀ)/2`.
pub fn goe_spectrum<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let a = Mat::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let s = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    s.self_adjoint_eigenvalues(Side::Lower).unwrap()
}

fn sorted_phases(u: &Mat<C64>) -> Vec<f64> {
    let mut phases: Vec<f64> = u.eigenvalues().unwrap().iter().map(|v| v.arg()).collect();
    phases.sort_by(f64::total_cmp);
    phases
}

pub fn cue_phases<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    sorted_phases(&haar_unitary(n, rng))
}

/// COE sample `UᵀU` with Haar `U`.
pub fn coe_phases<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let u = haar_unitary(n, rng);
    sorted_phases(&(u.transpose() * &u))
}

pub fn poisson_spectrum<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

pub fn wrap(m: Mat<C64>) -> UnitaryMatrix {
    UnitaryMatrix::from_matrix(m)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}
