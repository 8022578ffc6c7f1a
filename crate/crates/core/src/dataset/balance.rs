use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, LabeledTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceStrategy {
    RandomUndersample,
    /// Keep the majority rows whose mean Euclidean distance to their `k`
    /// nearest minority rows is smallest.
    NearMiss1 { k: usize },
}

impl Default for BalanceStrategy {
    fn default() -> Self {
        Self::NearMiss1 { k: 3 }
    }
}

/// Downsample every class to the minority count. Kept rows retain their
/// original relative order.
pub fn balance(
    table: &LabeledTable,
    strategy: BalanceStrategy,
    seed: u64,
) -> Result<LabeledTable, DatasetError> {
    if table.num_classes() < 2 {
        return Err(DatasetError::Invalid("balancing needs at least two classes".into()));
    }
    let counts = table.class_counts();
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(DatasetError::EmptyClass(table.label_names()[empty].clone()));
    }
    let target = *counts.iter().min().expect("at least two classes");
    let minority = counts.iter().position(|&c| c == target).expect("min exists");

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); table.num_classes()];
    for (i, &l) in table.labels().iter().enumerate() {
        by_class[l].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(target * by_class.len());
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() == target {
            keep.extend_from_slice(rows);
            continue;
        }
        match strategy {
            BalanceStrategy::RandomUndersample => {
                let mut shuffled = rows.clone();
                shuffled.shuffle(&mut rng);
                keep.extend_from_slice(&shuffled[..target]);
            }
            BalanceStrategy::NearMiss1 { k } => {
                if k == 0 {
                    return Err(DatasetError::Invalid("NearMiss k must be >= 1".into()));
                }
                debug_assert_ne!(class, minority);
                keep.extend(nearmiss1(table, rows, &by_class[minority], k, target));
            }
        }
    }
    keep.sort_unstable();
    Ok(table.select(&keep))
}

fn nearmiss1(
    table: &LabeledTable,
    candidates: &[usize],
    minority: &[usize],
    k: usize,
    target: usize,
) -> Vec<usize> {
    let k = k.min(minority.len());
    let rows = table.rows();
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&i| {
            let mut dists: Vec<f64> = minority.iter().map(|&j| euclidean(&rows[i], &rows[j])).collect();
            dists.sort_by(f64::total_cmp);
            let mean = dists[..k].iter().sum::<f64>() / k as f64;
            (mean, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(target).map(|(_, i)| i).collect()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> LabeledTable {
        LabeledTable::new(
            vec!["x".into(), "y".into()],
            vec!["a".into(), "b".into()],
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn counts_reduce_to_minority() {
        let rows: Vec<Vec<f64>> = (0..14).map(|i| vec![i as f64, 0.0]).collect();
        let labels = [vec![0; 10], vec![1; 4]].concat();
        let t = table(rows, labels);
        for strategy in [BalanceStrategy::RandomUndersample, BalanceStrategy::default()] {
            let b = balance(&t, strategy, 9).unwrap();
            assert_eq!(b.class_counts(), vec![4, 4]);
        }
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0]).collect();
        let t = table(rows, vec![0, 1, 0, 1, 0, 1]);
        for seed in [0, 1, 77] {
            assert_eq!(balance(&t, BalanceStrategy::RandomUndersample, seed).unwrap(), t);
        }
    }

    #[test]
    fn nearmiss_keeps_cluster_adjacent_to_minority() {
        // minority around the origin, one majority cluster next to it and one far away
        let mut rows = vec![vec![0.0, 0.0], vec![0.2, 0.1], vec![-0.1, 0.2]];
        let mut labels = vec![1, 1, 1];
        let near = [vec![1.0, 0.0], vec![1.1, 0.2], vec![0.9, -0.1]];
        let far = [vec![10.0, 10.0], vec![10.5, 9.0], vec![9.5, 11.0], vec![11.0, 10.0]];
        for r in far.iter().chain(near.iter()) {
            rows.push(r.clone());
            labels.push(0);
        }
        let t = table(rows.clone(), labels);

        // brute-force ranking
        let minority: Vec<&Vec<f64>> = rows[..3].iter().collect();
        let mut ranked: Vec<(f64, usize)> = (3..rows.len())
            .map(|i| {
                let mut d: Vec<f64> = minority
                    .iter()
                    .map(|m| ((rows[i][0] - m[0]).powi(2) + (rows[i][1] - m[1]).powi(2)).sqrt())
                    .collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                (d.iter().sum::<f64>() / 3.0, i)
            })
            .collect();
        ranked.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected: Vec<usize> = ranked[..3].iter().map(|r| r.1).collect();
        expected.sort();
        assert_eq!(expected, vec![7, 8, 9]);

        let b = balance(&t, BalanceStrategy::NearMiss1 { k: 3 }, 0).unwrap();
        let kept: Vec<&Vec<f64>> = b.rows().iter().zip(b.labels()).filter(|(_, &l)| l == 0).map(|(r, _)| r).collect();
        assert_eq!(kept, near.iter().collect::<Vec<_>>());
    }

    #[test]
    fn empty_class_is_an_error() {
        let t = table(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0, 0]);
        assert!(matches!(balance(&t, BalanceStrategy::RandomUndersample, 0), Err(DatasetError::EmptyClass(c)) if c == "b"));
    }
}
