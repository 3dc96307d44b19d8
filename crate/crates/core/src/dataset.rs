//! In-memory labeled density-matrix datasets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::SloccLabel;
use crate::quantum::{ket_to_density, DensityMatrix, Ket};
use crate::stategen::{build_dataset, AugmentationPattern, DatasetSpec, LabeledState};

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub rho: DensityMatrix,
    pub label: SloccLabel,
    pub pattern: AugmentationPattern,
    /// Generating ket, when known. Absent for states read from disk or mixed by noise.
    pub ket: Option<Ket>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Master seed the states were generated from, when known.
    pub seed: Option<u64>,
    /// White-noise weight already mixed into every state.
    pub noise: f64,
}

impl Dataset {
    pub fn generate(spec: &DatasetSpec) -> Result<Self> {
        let mut data = Self::from_states(&build_dataset(spec)?)?;
        data.seed = Some(spec.seed);
        Ok(data)
    }

    pub fn from_samples(samples: Vec<Sample>) -> Self {
        Self {
            samples,
            seed: None,
            noise: 0.0,
        }
    }

    pub fn from_states(states: &[LabeledState]) -> Result<Self> {
        let samples = states
            .iter()
            .map(|s| {
                Ok(Sample {
                    rho: ket_to_density(&s.ket)?,
                    label: s.label,
                    pattern: s.pattern,
                    ket: Some(s.ket.clone()),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_samples(samples))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<SloccLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn is_pure(&self) -> bool {
        self.samples.iter().all(|s| s.ket.is_some())
    }

    pub fn filter(&self, mut keep: impl FnMut(&Sample) -> bool) -> Dataset {
        Dataset {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            ..self.clone_meta()
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Dataset {
        Dataset {
            samples: Vec::new(),
            seed: self.seed,
            noise: self.noise,
        }
    }

    pub fn count(&self, label: SloccLabel) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn ensure_non_empty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyDataset(what.to_string()));
        }
        Ok(())
    }
}

/// Splits sample indices per class, sending `round(n_c * fraction)` of each
/// class (after a seeded shuffle) to the second part.
///
/// Returns `(first, second)`, each in ascending index order.
pub fn stratified_split(class_ids: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_classes = class_ids.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in class_ids.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let cut = ((members.len() as f64) * fraction).round() as usize;
        second.extend_from_slice(&members[..cut]);
        first.extend_from_slice(&members[cut..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}
