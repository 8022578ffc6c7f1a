use super::DatasetError;

/// Rule for turning a continuous target into class ids.
#[derive(Debug, Clone, PartialEq)]
pub enum Discretization {
    /// Equal-frequency bins; `n_bins >= 2`.
    Quantile { n_bins: usize },
    /// Left-closed bins `(-inf, e0), [e0, e1), ..., [e_last, inf)`; edges
    /// strictly increasing.
    FixedEdges(Vec<f64>),
}

impl Discretization {
    pub fn n_bins(&self) -> usize {
        match self {
            Self::Quantile { n_bins } => *n_bins,
            Self::FixedEdges(edges) => edges.len() + 1,
        }
    }
}

/// Map each value to a bin id in `0..n_bins`.
///
/// Quantile bins are left-closed: bin `k` starts at the value of sorted rank
/// `floor(k*n/n_bins)`. A run of tied values straddling a boundary is kept
/// whole in the lower bin, so bins hold either `floor(n/n_bins)` or
/// `ceil(n/n_bins)` values when the input has no ties.
pub fn discretize_target(values: &[f64], spec: &Discretization) -> Result<Vec<usize>, DatasetError> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(DatasetError::Invalid(format!("target value {pos} is not finite")));
    }
    let edges = match spec {
        Discretization::FixedEdges(edges) => {
            if edges.is_empty() {
                return Err(DatasetError::Invalid("at least one edge is required".into()));
            }
            if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DatasetError::Invalid("edges must be finite and strictly increasing".into()));
            }
            edges.clone()
        }
        Discretization::Quantile { n_bins } => quantile_edges(values, *n_bins)?,
    };
    Ok(values
        .iter()
        .map(|v| edges.partition_point(|e| e <= v))
        .collect())
}

fn quantile_edges(values: &[f64], n_bins: usize) -> Result<Vec<f64>, DatasetError> {
    if n_bins < 2 {
        return Err(DatasetError::Invalid(format!("n_bins must be >= 2, got {n_bins}")));
    }
    let n = values.len();
    if n < n_bins {
        return Err(DatasetError::Invalid(format!("{n} values for {n_bins} bins")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(DatasetError::DegenerateTarget("target is constant".into()));
    }
    let mut edges = Vec::with_capacity(n_bins - 1);
    for k in 1..n_bins {
        let mut pos = k * n / n_bins;
        // Keep the tie group containing the previous rank in the lower bin.
        while pos < n && sorted[pos] == sorted[pos - 1] {
            pos += 1;
        }
        if pos >= n {
            return Err(DatasetError::DegenerateTarget(format!(
                "bin {k} is empty because of tied values"
            )));
        }
        let edge = sorted[pos];
        if edges.last().is_some_and(|&last| last >= edge) {
            return Err(DatasetError::DegenerateTarget(format!(
                "bin {} is empty because of tied values",
                k - 1
            )));
        }
        edges.push(edge);
    }
    Ok(edges)
}
