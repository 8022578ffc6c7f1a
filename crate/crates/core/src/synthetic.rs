//! Seeded samplers for Gaussian mixtures with known parameters, used for
//! fixtures and for checking fitted models against ground truth.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{ConceptActivationTable, DatasetError, LabeledTable};
use crate::model::{Assumption, ClassStats, GaussianEvidenceModel, WoeError};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub weight: f64,
}

impl ClassSpec {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>, weight: f64) -> Self {
        Self {
            mean: DVector::from_vec(mean),
            covariance,
            weight,
        }
    }

    pub fn isotropic(mean: Vec<f64>, variance: f64, weight: f64) -> Self {
        let d = mean.len();
        Self::new(mean, DMatrix::identity(d, d) * variance, weight)
    }
}

/// A Gaussian mixture; weights need not be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    classes: Vec<ClassSpec>,
    factors: Vec<DMatrix<f64>>,
}

impl MixtureSpec {
    /// Panics if a covariance is not positive-definite or dimensions differ.
    pub fn new(classes: Vec<ClassSpec>) -> Self {
        let d = classes[0].mean.len();
        let factors = classes
            .iter()
            .map(|c| {
                assert_eq!(c.mean.len(), d, "mixture components must share a dimension");
                c.covariance
                    .clone()
                    .cholesky()
                    .expect("component covariance must be positive-definite")
                    .unpack()
            })
            .collect();
        Self { classes, factors }
    }

    /// Random well-conditioned mixture: means spread with scale `separation`,
    /// covariances `A Aᵀ + 0.5 I` with standard-normal `A`.
    pub fn random(k: usize, d: usize, separation: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = (0..k)
            .map(|_| {
                let mean: Vec<f64> = (0..d)
                    .map(|_| separation * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.7);
                let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
                ClassSpec::new(mean, cov, 1.0)
            })
            .collect();
        Self::new(classes)
    }

    pub fn classes(&self) -> &[ClassSpec] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.classes[0].mean.len()
    }

    pub fn priors(&self) -> Vec<f64> {
        let total: f64 = self.classes.iter().map(|c| c.weight).sum();
        self.classes.iter().map(|c| c.weight / total).collect()
    }

    fn draw(&self, class: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        (&self.classes[class].mean + &self.factors[class] * z)
            .iter()
            .copied()
            .collect()
    }

    /// `n` rows per class, classes interleaved.
    pub fn sample_per_class(&self, n: usize, seed: u64) -> Result<LabeledTable, DatasetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n * self.classes.len());
        let mut labels = Vec::with_capacity(rows.capacity());
        for _ in 0..n {
            for c in 0..self.classes.len() {
                rows.push(self.draw(c, &mut rng));
                labels.push(c);
            }
        }
        self.table(rows, labels)
    }

    /// `n` rows with classes drawn from the mixture weights.
    pub fn sample(&self, n: usize, seed: u64) -> Result<LabeledTable, DatasetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let priors = self.priors();
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut class = priors.len() - 1;
            for (c, p) in priors.iter().enumerate() {
                acc += p;
                if u < acc {
                    class = c;
                    break;
                }
            }
            rows.push(self.draw(class, &mut rng));
            labels.push(class);
        }
        self.table(rows, labels)
    }

    fn table(&self, rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<LabeledTable, DatasetError> {
        LabeledTable::new(
            (0..self.dim()).map(|i| format!("f{i}")).collect(),
            (0..self.classes.len()).map(|c| format!("class_{c}")).collect(),
            rows,
            labels,
        )
        .map(|t| t.with_provenance("synthetic"))
    }

    /// The generating parameters as a model (the Bayes-optimal reference).
    pub fn true_model(&self, assumption: Assumption) -> Result<GaussianEvidenceModel, WoeError> {
        let priors = self.priors();
        GaussianEvidenceModel::from_parts(
            (0..self.classes.len()).map(|c| format!("class_{c}")).collect(),
            (0..self.dim()).map(|i| format!("f{i}")).collect(),
            self.classes
                .iter()
                .zip(priors)
                .map(|(c, p)| ClassStats::new(c.mean.clone(), c.covariance.clone(), p))
                .collect(),
            assumption,
            0.0,
        )
    }
}

/// Concept names used for the twelve-concept dermoscopy fixture.
pub const DERMOSCOPY_CONCEPTS: [&str; 12] = [
    "atypical_pigment_network",
    "typical_pigment_network",
    "irregular_streaks",
    "regular_streaks",
    "irregular_dots_globules",
    "regular_dots_globules",
    "blue_whitish_veil",
    "irregular_vascular_structures",
    "regular_vascular_structures",
    "irregular_pigmentation",
    "regular_pigmentation",
    "regression_structures",
];

/// Seven lesion classes of the dermoscopy fixture.
pub const LESION_CLASSES: [&str; 7] = ["akiec", "bcc", "bkl", "df", "mel", "nv", "vasc"];

/// Synthetic concept activations: 12 concepts, 7 classes, `per_class` rows each.
pub fn dermoscopy_concepts(per_class: usize, seed: u64) -> ConceptActivationTable {
    let spec = MixtureSpec::random(LESION_CLASSES.len(), DERMOSCOPY_CONCEPTS.len(), 1.5, seed);
    let table = spec
        .sample_per_class(per_class, seed.wrapping_add(1))
        .expect("sampler output is well-formed");
    ConceptActivationTable::new(
        DERMOSCOPY_CONCEPTS.iter().map(|s| s.to_string()).collect(),
        LESION_CLASSES.iter().map(|s| s.to_string()).collect(),
        (0..table.len()).map(|i| format!("ISIC_{i:07}")).collect(),
        table.rows().to_vec(),
        table.labels().to_vec(),
    )
    .expect("sampler output is well-formed")
}
