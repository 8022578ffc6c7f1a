use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, LabeledTable};

/// Stratified train/test split.
///
/// The overall train size is `round(fraction * n)`, apportioned across
/// classes by largest remainder so each class's train count is within one row
/// of `fraction * n_class`. Every class keeps at least one train and one test
/// row. Both halves preserve the input row order.
pub fn split(
    table: &LabeledTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledTable, LabeledTable), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Invalid(format!(
            "train fraction must be in (0,1), got {train_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); table.num_classes()];
    for (i, &l) in table.labels().iter().enumerate() {
        by_class[l].push(i);
    }

    let n = table.len();
    let total_train = (train_fraction * n as f64).round() as usize;
    let mut quota: Vec<usize> = Vec::with_capacity(by_class.len());
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    for (class, rows) in by_class.iter().enumerate() {
        let exact = train_fraction * rows.len() as f64;
        quota.push(exact.floor() as usize);
        if !rows.is_empty() {
            remainders.push((exact - exact.floor(), class));
        }
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = quota.iter().sum();
    for &(_, class) in remainders.iter().take(total_train.saturating_sub(assigned)) {
        quota[class] += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(total_train);
    let mut test = Vec::with_capacity(n - total_train);
    for (class, rows) in by_class.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let size = rows.len();
        let q = quota[class];
        let q = if q == 0 {
            1
        } else if q == size {
            size - 1
        } else {
            q
        };
        if size < 2 {
            return Err(DatasetError::ClassTooSmall {
                label: table.label_names()[class].clone(),
                count: size,
                fraction: train_fraction,
            });
        }
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        train.extend_from_slice(&shuffled[..q]);
        test.extend_from_slice(&shuffled[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((table.select(&train), table.select(&test)))
}
