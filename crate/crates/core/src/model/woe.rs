use serde::{Deserialize, Serialize};

use super::{FeatureSubset, GaussianEvidenceModel, WoeError};

/// How the alternative-hypothesis mixture is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixtureNormalization {
    /// `Σ_{k≠h} P(x|k) P(k) / Σ_{k≠h} P(k)`: a proper conditional density.
    #[default]
    Normalized,
    /// `Σ_{k≠h} P(x|k) P(k)` without renormalizing the priors.
    Unnormalized,
}

/// How a decision aggregates evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decomposition {
    /// Sum of singleton WoE values, each feature conditioned on the rest.
    #[default]
    PerFeature,
    /// One WoE value over the whole feature vector.
    Joint,
}

impl GaussianEvidenceModel {
    /// Log density of the mixture of every hypothesis other than `h`.
    pub fn mixture_log_density(
        &self,
        h: usize,
        subset: &FeatureSubset,
        x: &[f64],
        normalization: MixtureNormalization,
    ) -> Result<f64, WoeError> {
        self.check_label(h)?;
        self.check_subset(subset)?;
        self.check_input(x)?;
        let densities = self.class_log_densities(subset, x)?;
        self.mixture_from_densities(h, &densities, normalization)
    }

    /// `log P(x_S | h) - log P(x_S | Y_{-h})` with the normalized mixture.
    pub fn woe(&self, h: usize, subset: &FeatureSubset, x: &[f64]) -> Result<f64, WoeError> {
        self.woe_with(h, subset, x, MixtureNormalization::Normalized)
    }

    pub fn woe_with(
        &self,
        h: usize,
        subset: &FeatureSubset,
        x: &[f64],
        normalization: MixtureNormalization,
    ) -> Result<f64, WoeError> {
        self.check_label(h)?;
        self.check_subset(subset)?;
        self.check_input(x)?;
        let densities = self.class_log_densities(subset, x)?;
        Ok(densities[h] - self.mixture_from_densities(h, &densities, normalization)?)
    }

    /// Singleton WoE of every feature for hypothesis `h`, in feature order.
    pub fn woe_per_feature(&self, h: usize, x: &[f64]) -> Result<Vec<f64>, WoeError> {
        self.check_label(h)?;
        self.check_input(x)?;
        let table = self.singleton_densities(x)?;
        table
            .iter()
            .map(|densities| {
                Ok(densities[h]
                    - self.mixture_from_densities(h, densities, MixtureNormalization::Normalized)?)
            })
            .collect()
    }

    /// `Σ_i γ_i · woe(h | x_i)`; `gamma` defaults to all ones.
    pub fn total_woe(&self, x: &[f64], h: usize, gamma: Option<&[f64]>) -> Result<f64, WoeError> {
        let contributions = self.woe_per_feature(h, x)?;
        match gamma {
            None => Ok(contributions.iter().sum()),
            Some(g) => {
                self.check_gamma(g)?;
                Ok(contributions.iter().zip(g).map(|(w, g)| g * w).sum())
            }
        }
    }

    pub fn check_gamma(&self, gamma: &[f64]) -> Result<(), WoeError> {
        if gamma.len() != self.dim() {
            return Err(WoeError::Dimension {
                expected: self.dim(),
                got: gamma.len(),
            });
        }
        if let Some(pos) = gamma.iter().position(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(WoeError::InvalidData(format!(
                "gamma[{pos}] = {} must be finite and non-negative",
                gamma[pos]
            )));
        }
        Ok(())
    }

    /// Hypothesis with the largest total WoE (unit gamma, per-feature
    /// decomposition). Ties go to the lowest label id.
    pub fn classify(&self, x: &[f64]) -> Result<usize, WoeError> {
        self.classify_with(x, Decomposition::PerFeature)
    }

    pub fn classify_with(&self, x: &[f64], decomposition: Decomposition) -> Result<usize, WoeError> {
        Ok(argmax(&self.hypothesis_scores(x, decomposition)?))
    }

    /// Total WoE of every hypothesis under the given decomposition.
    pub fn hypothesis_scores(
        &self,
        x: &[f64],
        decomposition: Decomposition,
    ) -> Result<Vec<f64>, WoeError> {
        self.check_input(x)?;
        let k = self.num_classes();
        match decomposition {
            Decomposition::PerFeature => {
                let table = self.singleton_densities(x)?;
                let mut totals = vec![0.0; k];
                for densities in &table {
                    for (h, total) in totals.iter_mut().enumerate() {
                        *total += densities[h]
                            - self.mixture_from_densities(
                                h,
                                densities,
                                MixtureNormalization::Normalized,
                            )?;
                    }
                }
                Ok(totals)
            }
            Decomposition::Joint => {
                let densities = self.class_log_densities(&FeatureSubset::all(self.dim()), x)?;
                (0..k)
                    .map(|h| {
                        Ok(densities[h]
                            - self.mixture_from_densities(
                                h,
                                &densities,
                                MixtureNormalization::Normalized,
                            )?)
                    })
                    .collect()
            }
        }
    }

    /// `P(k | x)` from priors and joint class-conditional densities.
    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>, WoeError> {
        self.check_input(x)?;
        let densities = self.class_log_densities(&FeatureSubset::all(self.dim()), x)?;
        let logits: Vec<f64> = densities
            .iter()
            .zip(&self.per_class)
            .map(|(d, s)| d + s.prior.ln())
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / z).collect())
    }

    /// `log P(x_S | x_{-S}, k)` for every class `k`.
    pub(crate) fn class_log_densities(
        &self,
        subset: &FeatureSubset,
        x: &[f64],
    ) -> Result<Vec<f64>, WoeError> {
        self.check_subset(subset)?;
        (0..self.num_classes())
            .map(|k| self.log_density_subset_unchecked(k, subset, x))
            .collect()
    }

    /// Per feature, the singleton class log densities.
    fn singleton_densities(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, WoeError> {
        (0..self.dim())
            .map(|i| self.class_log_densities(&FeatureSubset::single(i), x))
            .collect()
    }

    fn mixture_from_densities(
        &self,
        h: usize,
        densities: &[f64],
        normalization: MixtureNormalization,
    ) -> Result<f64, WoeError> {
        let alternatives: Vec<usize> = (0..self.num_classes()).filter(|&k| k != h).collect();
        match alternatives.as_slice() {
            [] => {
                return Err(WoeError::NoAlternatives {
                    label: self.labels[h].name.clone(),
                })
            }
            [only] if normalization == MixtureNormalization::Normalized => {
                return Ok(densities[*only]);
            }
            _ => {}
        }
        let terms: Vec<f64> = alternatives
            .iter()
            .map(|&k| densities[k] + self.per_class[k].prior.ln())
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = if max == f64::NEG_INFINITY {
            max
        } else {
            max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
        };
        Ok(match normalization {
            MixtureNormalization::Normalized => {
                let mass: f64 = alternatives.iter().map(|&k| self.per_class[k].prior).sum();
                lse - mass.ln()
            }
            MixtureNormalization::Unnormalized => lse,
        })
    }
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::super::{Assumption, ClassStats};
    use super::*;

    fn unit_model(means: &[f64], priors: &[f64]) -> GaussianEvidenceModel {
        GaussianEvidenceModel::from_parts(
            (0..means.len()).map(|i| format!("c{i}")).collect(),
            vec!["x".into()],
            means
                .iter()
                .zip(priors)
                .map(|(m, p)| ClassStats::new(DVector::from_element(1, *m), DMatrix::identity(1, 1), *p))
                .collect(),
            Assumption::Independent,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn identical_classes_have_zero_woe() {
        let m = unit_model(&[0.4, 0.4, 0.4], &[0.2, 0.3, 0.5]);
        for h in 0..3 {
            assert!(m.woe(h, &FeatureSubset::single(0), &[1.7]).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_is_neutral_and_mean_gives_half() {
        let m = unit_model(&[0.0, 1.0], &[0.5, 0.5]);
        let s = FeatureSubset::single(0);
        assert!(m.woe(0, &s, &[0.5]).unwrap().abs() < 1e-15);
        // ((x-1)^2 - x^2) / 2 at x = 0
        assert!((m.woe(0, &s, &[0.0]).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn single_alternative_mixture_is_exact() {
        let m = unit_model(&[0.0, 1.0], &[0.3, 0.7]);
        let s = FeatureSubset::single(0);
        let mix = m
            .mixture_log_density(0, &s, &[0.25], MixtureNormalization::Normalized)
            .unwrap();
        assert_eq!(mix, m.log_density_subset(1, &s, &[0.25]).unwrap());
    }

    #[test]
    fn identical_alternatives_reduce_to_one_density() {
        let m = unit_model(&[0.0, 2.0, 2.0], &[0.2, 0.4, 0.4]);
        let s = FeatureSubset::single(0);
        let mix = m
            .mixture_log_density(0, &s, &[1.1], MixtureNormalization::Normalized)
            .unwrap();
        let one = m.log_density_subset(1, &s, &[1.1]).unwrap();
        assert!((mix - one).abs() < 1e-14);
    }

    #[test]
    fn unnormalized_differs_by_log_alternative_mass() {
        let m = unit_model(&[0.0, 1.0, -1.0], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let s = FeatureSubset::single(0);
        let x = [0.3];
        let norm = m.mixture_log_density(0, &s, &x, MixtureNormalization::Normalized).unwrap();
        let raw = m.mixture_log_density(0, &s, &x, MixtureNormalization::Unnormalized).unwrap();
        assert!((raw - norm - (2.0f64 / 3.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn single_class_has_no_alternatives() {
        let m = unit_model(&[0.0], &[1.0]);
        assert_eq!(
            m.woe(0, &FeatureSubset::single(0), &[0.0]).unwrap_err(),
            WoeError::NoAlternatives { label: "c0".into() }
        );
    }

    #[test]
    fn gamma_validation() {
        let m = unit_model(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(
            m.total_woe(&[0.0], 0, Some(&[1.0, 1.0])).unwrap_err(),
            WoeError::Dimension { expected: 1, got: 2 }
        );
        assert!(m.total_woe(&[0.0], 0, Some(&[-1.0])).is_err());
        assert_eq!(m.total_woe(&[0.0], 0, Some(&[0.0])).unwrap(), 0.0);
    }

    #[test]
    fn tie_goes_to_lowest_label() {
        let m = unit_model(&[-1.0, 1.0], &[0.5, 0.5]);
        assert_eq!(m.classify(&[0.0]).unwrap(), 0);
        assert_eq!(m.classify(&[0.9]).unwrap(), 1);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }

    #[test]
    fn posterior_is_uniform_for_identical_classes() {
        let m = unit_model(&[0.0, 0.0, 0.0], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        for p in m.posterior(&[2.0]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_concentrates_far_into_a_class() {
        let m = unit_model(&[0.0, 5.0, 10.0], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let p = m.posterior(&[10.5]).unwrap();
        assert!(p[2] > 0.99);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
