//! Weight-of-evidence decision support over Gaussian class-conditional models.
//!
//! The crate fits per-hypothesis Gaussians ([`model`]), turns their log-density
//! ratios into evidence for and against each hypothesis ([`evidence`]), prepares
//! data ([`dataset`]), scores study responses ([`metrics`]) and saves the
//! artifacts ([`persistence`]).

pub mod dataset;
pub mod evidence;
pub mod metrics;
pub mod model;
pub mod persistence;
pub mod synthetic;

pub use dataset::{ConceptActivationTable, LabeledTable};
pub use evidence::{Category, Condition, ConditionView, HypothesisReport, SignificanceScale};
pub use model::{
    Assumption, ClassStats, Decomposition, FeatureSubset, FeatureVector, GaussianEvidenceModel,
    Label, MixtureNormalization, WoeError,
};
