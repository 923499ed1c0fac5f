use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EmbeddingMatrix, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64, stratified: bool) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
            stratified,
        })
    }
}

/// Row indices of a train/test partition, each list in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded partition of the samples. Stratified splits shuffle each class
/// separately and send `round(fraction · n_c)` of it (at least one, at most
/// `n_c - 1`) to training.
pub fn partition(d: &LabeledDataset, s: &SplitSpec) -> Result<Partition> {
    SplitSpec::new(s.train_fraction, s.seed, s.stratified)?;
    let mut rng = crate::seed::rng(crate::seed::derive(s.seed, &[0x5117]));
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if s.stratified {
        let classes = d.class_indices();
        for (c, name) in d.class_names().iter().enumerate() {
            let mut members: Vec<usize> = (0..d.len()).filter(|&i| classes[i] == c).collect();
            if members.len() < 2 {
                return Err(Error::InsufficientRows {
                    what: format!("stratified split of class {name:?}"),
                    needed: 2,
                    available: members.len(),
                });
            }
            members.shuffle(&mut rng);
            let k = ((s.train_fraction * members.len() as f64).round() as usize)
                .clamp(1, members.len() - 1);
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..d.len()).collect();
        all.shuffle(&mut rng);
        let k = (s.train_fraction * all.len() as f64).round() as usize;
        train.extend_from_slice(&all[..k]);
        test.extend_from_slice(&all[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}

pub type Pair = (LabeledDataset, EmbeddingMatrix);

/// Splits an aligned dataset/matrix pair into (train, test).
pub fn split(d: &LabeledDataset, m: &EmbeddingMatrix, s: &SplitSpec) -> Result<(Pair, Pair)> {
    m.check_aligned(d)?;
    let p = partition(d, s)?;
    Ok((
        (d.subset(&p.train), m.select_rows(&p.train)),
        (d.subset(&p.test), m.select_rows(&p.test)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(counts: &[usize]) -> LabeledDataset {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                ids.push(format!("c{c}_{i}"));
                labels.push(format!("class{c}"));
            }
        }
        LabeledDataset::from_ids_labels(&ids, &labels).unwrap()
    }

    #[test]
    fn balanced_eighty_twenty() {
        let d = dataset(&[50, 50]);
        let p = partition(&d, &SplitSpec::new(0.8, 3, true).unwrap()).unwrap();
        let cls = d.class_indices();
        let count = |idx: &[usize], c| idx.iter().filter(|&&i| cls[i] == c).count();
        assert_eq!((count(&p.train, 0), count(&p.train, 1)), (40, 40));
        assert_eq!((count(&p.test, 0), count(&p.test, 1)), (10, 10));
    }

    #[test]
    fn deterministic_and_exact_partition() {
        let d = dataset(&[13, 7, 22]);
        let spec = SplitSpec::new(0.7, 99, true).unwrap();
        let a = partition(&d, &spec).unwrap();
        assert_eq!(a, partition(&d, &spec).unwrap());
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..42).collect::<Vec<_>>());
        let other = partition(&d, &SplitSpec::new(0.7, 100, true).unwrap()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn stratified_proportions_within_one() {
        let counts = [13, 7, 22, 3, 100];
        let d = dataset(&counts);
        for seed in 0..10 {
            for frac in [0.3, 0.5, 0.8] {
                let p = partition(&d, &SplitSpec::new(frac, seed, true).unwrap()).unwrap();
                let cls = d.class_indices();
                for (c, &n) in counts.iter().enumerate() {
                    let got = p.train.iter().filter(|&&i| cls[i] == c).count() as f64;
                    assert!((got - frac * n as f64).abs() <= 1.0);
                }
            }
        }
    }

    #[test]
    fn stackexchange_seventy_thirty_sizes() {
        // 11,704 answers for each of 4 authorship classes
        let d = dataset(&[11_704; 4]);
        let p = partition(&d, &SplitSpec::new(0.7, 0, true).unwrap()).unwrap();
        let total = 4.0 * 11_704.0;
        assert!((p.train.len() as f64 - 0.7 * total).abs() <= 4.0);
        assert_eq!(p.train.len() + p.test.len(), 46_816);
    }

    #[test]
    fn singleton_class_rejected_when_stratified() {
        let d = dataset(&[5, 1]);
        assert!(partition(&d, &SplitSpec::new(0.5, 0, true).unwrap()).is_err());
        assert!(partition(&d, &SplitSpec::new(0.5, 0, false).unwrap()).is_ok());
        assert!(SplitSpec::new(1.0, 0, true).is_err());
    }
}
