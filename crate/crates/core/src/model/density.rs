use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Assumption, FeatureSubset, GaussianEvidenceModel, WoeError};

impl GaussianEvidenceModel {
    /// Univariate Gaussian log density of feature `i` under hypothesis `h`,
    /// using the marginal variance `Σ_ii`.
    pub fn log_density_independent(&self, h: usize, i: usize, x_i: f64) -> Result<f64, WoeError> {
        self.check_label(h)?;
        if i >= self.dim() {
            return Err(WoeError::InvalidSubset(format!(
                "index {i} out of range for {} features",
                self.dim()
            )));
        }
        let stats = &self.per_class[h];
        let var = stats.covariance[(i, i)];
        if !(var > 0.0) {
            return Err(WoeError::SingularVariance {
                label: self.labels[h].name.clone(),
                feature: i,
            });
        }
        let diff = x_i - stats.mean[i];
        Ok(-0.5 * (2.0 * PI).ln() - 0.5 * var.ln() - diff * diff / (2.0 * var))
    }

    /// Mean and covariance of `x_S` given `x_{-S}` under hypothesis `h`.
    ///
    /// With `S` equal to every feature the unconditional statistics are
    /// returned. Under the independent assumption the result is the marginal
    /// mean over `S` with the diagonal of `Σ_SS`.
    pub fn conditional_gaussian(
        &self,
        h: usize,
        subset: &FeatureSubset,
        x: &[f64],
    ) -> Result<(DVector<f64>, DMatrix<f64>), WoeError> {
        self.check_label(h)?;
        self.check_subset(subset)?;
        self.check_input(x)?;
        self.conditional_unchecked(h, subset, x)
    }

    fn conditional_unchecked(
        &self,
        h: usize,
        subset: &FeatureSubset,
        x: &[f64],
    ) -> Result<(DVector<f64>, DMatrix<f64>), WoeError> {
        let stats = &self.per_class[h];
        let s = subset.indices();
        let mean_s = stats.mean.select_rows(s);
        let cov_ss = stats.covariance.select_rows(s).select_columns(s);
        if self.assumption == Assumption::Independent {
            return Ok((mean_s, DMatrix::from_diagonal(&cov_ss.diagonal())));
        }
        let rest = subset.complement(self.dim());
        if rest.is_empty() {
            return Ok((mean_s, cov_ss));
        }
        let cov_rr = stats.covariance.select_rows(&rest).select_columns(&rest);
        let chol = cov_rr.cholesky().ok_or_else(|| WoeError::SingularCovariance {
            label: self.labels[h].name.clone(),
        })?;
        let cov_sr = stats.covariance.select_rows(s).select_columns(&rest);
        let diff = DVector::from_iterator(rest.len(), rest.iter().map(|&j| x[j] - stats.mean[j]));
        let mean = mean_s + &cov_sr * chol.solve(&diff);
        let mut cov = cov_ss - &cov_sr * chol.solve(&cov_sr.transpose());
        let n = cov.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = avg;
                cov[(j, i)] = avg;
            }
        }
        Ok((mean, cov))
    }

    /// `log P(x_S | x_{-S}, h)`.
    ///
    /// Under the independent assumption this is the sum of the univariate log
    /// densities over `S`.
    pub fn log_density_subset(
        &self,
        h: usize,
        subset: &FeatureSubset,
        x: &[f64],
    ) -> Result<f64, WoeError> {
        self.check_label(h)?;
        self.check_subset(subset)?;
        self.check_input(x)?;
        self.log_density_subset_unchecked(h, subset, x)
    }

    pub(crate) fn log_density_subset_unchecked(
        &self,
        h: usize,
        subset: &FeatureSubset,
        x: &[f64],
    ) -> Result<f64, WoeError> {
        if self.assumption == Assumption::Independent {
            return subset
                .indices()
                .iter()
                .map(|&i| self.log_density_independent(h, i, x[i]))
                .sum();
        }
        let (mean, cov) = self.conditional_unchecked(h, subset, x)?;
        let value = DVector::from_iterator(subset.len(), subset.indices().iter().map(|&i| x[i]));
        gaussian_log_pdf(&value, &mean, cov).ok_or_else(|| WoeError::SingularCovariance {
            label: self.labels[h].name.clone(),
        })
    }

    /// Log density of the full feature vector under hypothesis `h`.
    pub fn log_joint_density(&self, h: usize, x: &[f64]) -> Result<f64, WoeError> {
        self.log_density_subset(h, &FeatureSubset::all(self.dim()), x)
    }
}

/// Multivariate normal log density via Cholesky. `None` if `cov` is not
/// positive-definite.
pub(crate) fn gaussian_log_pdf(
    value: &DVector<f64>,
    mean: &DVector<f64>,
    cov: DMatrix<f64>,
) -> Option<f64> {
    let n = value.len() as f64;
    let chol = cov.cholesky()?;
    let l = chol.l_dirty();
    let log_det: f64 = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
    let diff = value - mean;
    let z = l.solve_lower_triangular(&diff)?;
    let quad = z.dot(&z);
    Some(-0.5 * n * (2.0 * PI).ln() - 0.5 * log_det - 0.5 * quad)
}

#[cfg(test)]
mod tests {
    use super::super::{ClassStats, GaussianEvidenceModel};
    use super::*;

    fn model(
        means: &[&[f64]],
        covs: &[&[f64]],
        assumption: Assumption,
    ) -> GaussianEvidenceModel {
        let d = means[0].len();
        let k = means.len();
        GaussianEvidenceModel::from_parts(
            (0..k).map(|i| format!("c{i}")).collect(),
            (0..d).map(|i| format!("f{i}")).collect(),
            means
                .iter()
                .zip(covs)
                .map(|(m, c)| {
                    ClassStats::new(
                        DVector::from_column_slice(m),
                        DMatrix::from_row_slice(d, d, c),
                        1.0 / k as f64,
                    )
                })
                .collect(),
            assumption,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_at_zero() {
        let m = model(&[&[0.0], &[1.0]], &[&[1.0], &[1.0]], Assumption::Independent);
        let v = m.log_density_independent(0, 0, 0.0).unwrap();
        // -0.5 * ln(2π)
        assert!((v - (-0.918_938_533_204_672_7)).abs() < 1e-15);
    }

    #[test]
    fn value_at_mean_and_symmetry() {
        let m = model(&[&[2.5], &[0.0]], &[&[3.0], &[1.0]], Assumption::Independent);
        let at_mean = m.log_density_independent(0, 0, 2.5).unwrap();
        assert!((at_mean - (-0.5 * (2.0 * PI * 3.0).ln())).abs() < 1e-14);
        let lo = m.log_density_independent(0, 0, 2.5 - 0.7).unwrap();
        let hi = m.log_density_independent(0, 0, 2.5 + 0.7).unwrap();
        assert!((lo - hi).abs() < 1e-14);
    }

    #[test]
    fn zero_variance_is_singular() {
        let m = model(&[&[0.0], &[1.0]], &[&[0.0], &[1.0]], Assumption::Independent);
        assert_eq!(
            m.log_density_independent(0, 0, 0.0).unwrap_err(),
            WoeError::SingularVariance {
                label: "c0".into(),
                feature: 0
            }
        );
    }

    #[test]
    fn identity_covariance_conditional_is_marginal() {
        let m = model(
            &[&[0.3, -1.0], &[0.0, 0.0]],
            &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0]],
            Assumption::Dependent,
        );
        let (mean, cov) = m
            .conditional_gaussian(0, &FeatureSubset::single(0), &[5.0, 7.0])
            .unwrap();
        assert!((mean[0] - 0.3).abs() < 1e-15);
        assert!((cov[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bivariate_conditioning_matches_hand_formula() {
        let rho = 0.6;
        let (mu0, mu1) = (1.0, -2.0);
        let m = model(
            &[&[mu0, mu1], &[0.0, 0.0]],
            &[&[1.0, rho, rho, 1.0], &[1.0, 0.0, 0.0, 1.0]],
            Assumption::Dependent,
        );
        let x1 = 0.5;
        let (mean, cov) = m
            .conditional_gaussian(0, &FeatureSubset::single(0), &[9.0, x1])
            .unwrap();
        assert!((mean[0] - (mu0 + rho * (x1 - mu1))).abs() < 1e-14);
        assert!((cov[(0, 0)] - (1.0 - rho * rho)).abs() < 1e-14);
    }

    #[test]
    fn full_subset_is_unconditional() {
        let m = model(
            &[&[1.0, 2.0], &[0.0, 0.0]],
            &[&[2.0, 0.3, 0.3, 1.0], &[1.0, 0.0, 0.0, 1.0]],
            Assumption::Dependent,
        );
        let (mean, cov) = m
            .conditional_gaussian(0, &FeatureSubset::all(2), &[0.0, 0.0])
            .unwrap();
        assert_eq!(mean, m.class_stats()[0].mean);
        assert_eq!(cov, m.class_stats()[0].covariance);
    }

    #[test]
    fn singleton_with_identity_matches_univariate() {
        let m = model(
            &[&[1.0, 2.0], &[0.0, 0.0]],
            &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0]],
            Assumption::Dependent,
        );
        let x = [0.2, 3.1];
        let sub = m.log_density_subset(0, &FeatureSubset::single(1), &x).unwrap();
        let uni = m.log_density_independent(0, 1, x[1]).unwrap();
        assert!((sub - uni).abs() < 1e-14);
    }

    #[test]
    fn singular_conditioning_block_names_class() {
        let m = model(
            &[&[0.0, 0.0], &[0.0, 0.0]],
            &[&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 0.0]],
            Assumption::Dependent,
        );
        let err = m
            .conditional_gaussian(1, &FeatureSubset::single(0), &[0.0, 0.0])
            .unwrap_err();
        assert_eq!(err, WoeError::SingularCovariance { label: "c1".into() });
    }

    #[test]
    fn independent_mode_ignores_off_diagonal() {
        let m = model(
            &[&[0.0, 0.0], &[1.0, 1.0]],
            &[&[1.0, 0.9, 0.9, 1.0], &[1.0, 0.0, 0.0, 1.0]],
            Assumption::Independent,
        );
        let x = [0.4, -0.3];
        let joint = m.log_joint_density(0, &x).unwrap();
        let sum = m.log_density_independent(0, 0, x[0]).unwrap()
            + m.log_density_independent(0, 1, x[1]).unwrap();
        assert!((joint - sum).abs() < 1e-14);
    }

    #[test]
    fn input_length_is_checked() {
        let m = model(&[&[0.0], &[1.0]], &[&[1.0], &[1.0]], Assumption::Dependent);
        assert_eq!(
            m.log_joint_density(0, &[0.0, 1.0]).unwrap_err(),
            WoeError::Dimension { expected: 1, got: 2 }
        );
    }
}
