//! Label-flipping data poisoning.
//!
//! A malicious client picks `k = floor(p · n / 100)` of its rows uniformly at
//! random and replaces each label with a different class drawn uniformly from
//! the remaining ones. Features are never touched. The poisoned shard is then
//! used for every round of local training.

use rand::seq::index;
use rand::Rng;

use crate::dataset::{ClientShard, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSpec {
    pub malicious_client: usize,
    /// Percentage of the client's rows to relabel, in `[0, 100]`.
    pub flip_percent: f64,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(malicious_client: usize, flip_percent: f64, seed: u64) -> Result<Self> {
        if !(0.0..=100.0).contains(&flip_percent) {
            return Err(Error::InvalidConfig(format!(
                "flip percentage must lie in [0, 100], got {flip_percent}"
            )));
        }
        Ok(Self {
            malicious_client,
            flip_percent,
            seed,
        })
    }

    pub fn validate(&self, n_clients: usize) -> Result<()> {
        if !(0.0..=100.0).contains(&self.flip_percent) {
            return Err(Error::InvalidConfig(format!(
                "flip percentage must lie in [0, 100], got {}",
                self.flip_percent
            )));
        }
        if self.malicious_client >= n_clients {
            return Err(Error::NoSuchClient {
                client: self.malicious_client,
                clients: n_clients,
            });
        }
        Ok(())
    }

    /// Number of rows flipped in a shard of `n` rows.
    pub fn flip_count(&self, n: usize) -> usize {
        flip_count(self.flip_percent, n)
    }
}

/// `floor(p · n / 100)`, computed without accumulating float error for whole
/// percentages.
pub fn flip_count(flip_percent: f64, n: usize) -> usize {
    if flip_percent.fract() == 0.0 {
        (flip_percent as usize * n) / 100
    } else {
        (flip_percent * n as f64 / 100.0).floor() as usize
    }
}

/// Flips `floor(p · n / 100)` labels of `data`; returns the poisoned copy and
/// the sorted indices that were changed.
pub fn flip_dataset(
    data: &LabeledDataset,
    flip_percent: f64,
    seed: u64,
    num_classes: usize,
) -> Result<(LabeledDataset, Vec<usize>)> {
    if num_classes < 2 {
        return Err(Error::InvalidConfig(
            "label flipping needs at least two classes".into(),
        ));
    }
    if !(0.0..=100.0).contains(&flip_percent) {
        return Err(Error::InvalidConfig(format!(
            "flip percentage must lie in [0, 100], got {flip_percent}"
        )));
    }
    let n = data.len();
    let k = flip_count(flip_percent, n);
    let mut rng = rng::rng(seed);
    let mut chosen = index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();

    let mut labels = data.labels().to_vec();
    for &i in &chosen {
        let old = labels[i];
        if old >= num_classes {
            return Err(Error::ClassOutOfRange {
                index: old,
                num_classes,
            });
        }
        // Uniform over the num_classes − 1 alternatives.
        let draw = rng.gen_range(0..num_classes - 1);
        labels[i] = if draw >= old { draw + 1 } else { draw };
    }
    Ok((data.with_labels(labels), chosen))
}

/// Applies the attack to one client shard.
pub fn flip_labels(
    shard: &ClientShard,
    spec: &AttackSpec,
    num_classes: usize,
) -> Result<(ClientShard, Vec<usize>)> {
    let (data, flipped) = flip_dataset(&shard.data, spec.flip_percent, spec.seed, num_classes)?;
    Ok((
        ClientShard {
            client_id: shard.client_id,
            data,
        },
        flipped,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, SynthSpec, LESION_CLASS_WEIGHTS};
    use ndarray::Array2;
    use proptest::prelude::*;

    fn shard(n: usize, seed: u64) -> ClientShard {
        let spec = SynthSpec {
            n_samples: n,
            class_weights: LESION_CLASS_WEIGHTS.to_vec(),
            cluster_spread: 0.3,
            num_features: 4,
        };
        ClientShard::new(3, synth_dataset(&spec, seed).unwrap()).unwrap()
    }

    fn attack(p: f64, seed: u64) -> AttackSpec {
        AttackSpec::new(3, p, seed).unwrap()
    }

    #[test]
    fn zero_percent_is_identity() {
        let s = shard(40, 1);
        let (poisoned, flipped) = flip_labels(&s, &attack(0.0, 9), 7).unwrap();
        assert_eq!(poisoned, s);
        assert!(flipped.is_empty());
    }

    #[test]
    fn fourteen_percent_of_hundred() {
        let s = shard(100, 2);
        let (poisoned, flipped) = flip_labels(&s, &attack(14.0, 5), 7).unwrap();
        assert_eq!(flipped.len(), 14);
        let changed = s
            .data
            .labels()
            .iter()
            .zip(poisoned.data.labels())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 14);
    }

    #[test]
    fn diff_oracle_on_fifty_rows() {
        let s = shard(50, 3);
        let (poisoned, flipped) = flip_labels(&s, &attack(10.0, 8), 7).unwrap();
        assert_eq!(flipped.len(), 5);
        assert!(flipped.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(poisoned.client_id, s.client_id);
        for i in 0..50 {
            let before = s.data.features().row(i);
            let after = poisoned.data.features().row(i);
            assert!(before
                .iter()
                .zip(after)
                .all(|(a, b)| a.to_bits() == b.to_bits()));
            let (old, new) = (s.data.labels()[i], poisoned.data.labels()[i]);
            if flipped.contains(&i) {
                assert_ne!(old, new);
            } else {
                assert_eq!(old, new);
            }
        }
    }

    #[test]
    fn flip_count_uses_floor() {
        assert_eq!(flip_count(2.0, 49), 0);
        assert_eq!(flip_count(2.0, 50), 1);
        assert_eq!(flip_count(14.0, 100), 14);
        assert_eq!(flip_count(100.0, 7), 7);
        assert_eq!(flip_count(12.5, 10), 1);
    }

    #[test]
    fn invalid_specs() {
        assert!(AttackSpec::new(0, 101.0, 0).is_err());
        assert!(AttackSpec::new(0, -1.0, 0).is_err());
        assert!(matches!(
            attack(5.0, 0).validate(3),
            Err(Error::NoSuchClient {
                client: 3,
                clients: 3
            })
        ));
        assert!(attack(5.0, 0).validate(4).is_ok());
    }

    #[test]
    fn replacement_classes_are_uniform() {
        // Every row starts as class 2; with p = 100 each row gets one of the
        // other six classes.
        let n = 600;
        let data = LabeledDataset::lesions(Array2::zeros((n, 1)), vec![2; n]).unwrap();
        let mut counts = [0usize; 7];
        let seeds = 20;
        for seed in 0..seeds {
            let (poisoned, _) = flip_dataset(&data, 100.0, seed, 7).unwrap();
            for &l in poisoned.labels() {
                counts[l] += 1;
            }
        }
        assert_eq!(counts[2], 0);
        let total = (n as u64 * seeds) as f64;
        let (mean, sd) = (total / 6.0, (total * (1.0 / 6.0) * (5.0 / 6.0)).sqrt());
        for (c, &count) in counts.iter().enumerate().filter(|(c, _)| *c != 2) {
            assert!(
                (count as f64 - mean).abs() <= 4.0 * sd,
                "class {c}: {count}"
            );
        }
    }

    proptest! {
        #[test]
        fn exact_flip_count(n in 1usize..2000, p in 0u32..=100, seed: u64) {
            let labels: Vec<usize> = (0..n).map(|i| (i * 5 + 1) % 7).collect();
            let data = LabeledDataset::lesions(Array2::zeros((n, 1)), labels).unwrap();
            let (poisoned, flipped) = flip_dataset(&data, p as f64, seed, 7).unwrap();
            prop_assert_eq!(flipped.len(), (p as usize * n) / 100);
            for i in 0..n {
                let changed = poisoned.labels()[i] != data.labels()[i];
                prop_assert_eq!(changed, flipped.binary_search(&i).is_ok());
            }
        }
    }
}
