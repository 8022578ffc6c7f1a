#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use woe_core::synthetic::MixtureSpec;
use woe_core::{Assumption, ClassStats, GaussianEvidenceModel};

/// Random dependent-mode model with uniform priors.
pub fn random_model(k: usize, d: usize, seed: u64) -> GaussianEvidenceModel {
    MixtureSpec::random(k, d, 1.0, seed)
        .true_model(Assumption::Dependent)
        .unwrap()
}

/// Same statistics with random (non-uniform) priors.
pub fn with_random_priors(model: &GaussianEvidenceModel, seed: u64) -> GaussianEvidenceModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..model.num_classes()).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    GaussianEvidenceModel::from_parts(
        model.labels().iter().map(|l| l.name.clone()).collect(),
        model.feature_names().to_vec(),
        model
            .class_stats()
            .iter()
            .zip(&raw)
            .map(|(s, r)| ClassStats::new(s.mean.clone(), s.covariance.clone(), r / total))
            .collect(),
        model.assumption(),
        model.ridge(),
    )
    .unwrap()
}

pub fn random_point(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Multivariate normal log density via explicit inverse and LU determinant,
/// independent of the Cholesky route used by the library.
pub fn mvn_logpdf_lu(x: &[f64], mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let diff = DVector::from_column_slice(x) - mean;
    let inv = cov.clone().try_inverse().expect("invertible");
    let det = cov.clone().lu().determinant();
    let quad = (diff.transpose() * inv * &diff)[(0, 0)];
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad
}

pub fn select(indices: &[usize], x: &[f64]) -> Vec<f64> {
    indices.iter().map(|&i| x[i]).collect()
}

/// Every non-empty proper subset of `0..d` as index lists.
pub fn proper_subsets(d: usize) -> Vec<Vec<usize>> {
    (1..(1u32 << d) - 1)
        .map(|mask| (0..d).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}
