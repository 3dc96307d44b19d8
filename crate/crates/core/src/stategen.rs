//! Labeled pure-state generation for the six SLOCC classes.
//!
//! Every class is drawn from a base recipe and then passed through one of
//! eight local-unitary augmentation patterns. Each state gets its own RNG
//! seeded from `(master seed, class, pattern, index)`, so the output does
//! not depend on generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::SloccLabel;
use crate::quantum::{haar_unitary, random_ket, swap_bc, ComplexMatrix, Ket, C64, DIM};

/// Which qubits receive a fresh Haar U(2): bit 2 = A, bit 1 = B, bit 0 = C.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugmentationPattern(u8);

impl AugmentationPattern {
    pub const COUNT: usize = 8;

    pub fn new(bits: u8) -> Result<Self> {
        if bits as usize >= Self::COUNT {
            return Err(Error::OutOfRange(format!(
                "augmentation pattern {bits} not in 0..8"
            )));
        }
        Ok(Self(bits))
    }

    pub fn all() -> impl Iterator<Item = AugmentationPattern> {
        (0..Self::COUNT as u8).map(AugmentationPattern)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn rotates(self, qubit_shift: usize) -> bool {
        self.0 >> qubit_shift & 1 == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState {
    pub ket: Ket,
    pub label: SloccLabel,
    pub pattern: AugmentationPattern,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSpec {
    pub per_class_per_pattern: usize,
    pub seed: u64,
    pub classes: Vec<SloccLabel>,
}

impl DatasetSpec {
    /// All six classes.
    pub fn balanced(per_class_per_pattern: usize, seed: u64) -> Self {
        Self {
            per_class_per_pattern,
            seed,
            classes: SloccLabel::ALL.to_vec(),
        }
    }

    pub fn total(&self) -> usize {
        self.classes.len() * AugmentationPattern::COUNT * self.per_class_per_pattern
    }
}

/// The standard W state `(|001> + |010> + |100>) / sqrt(3)`.
pub fn w_state() -> Ket {
    let s = C64::new(1.0 / 3f64.sqrt(), 0.0);
    let mut a = vec![C64::new(0.0, 0.0); DIM];
    for i in [1, 2, 4] {
        a[i] = s;
    }
    Ket::new(a).expect("non-empty")
}

fn random_phase_gate<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let tau = std::f64::consts::TAU;
    ComplexMatrix::from_diagonal(&[
        C64::from_polar(1.0, rng.random::<f64>() * tau),
        C64::from_polar(1.0, rng.random::<f64>() * tau),
    ])
}

/// Draws one state of class `label` before augmentation.
///
/// W states are the standard W with an independent random phase gate on each
/// qubit. Local phases keep the computational-basis populations of |W> while
/// making its coherences average to zero over the class.
pub fn gen_base_state<R: Rng + ?Sized>(label: SloccLabel, rng: &mut R) -> Result<Ket> {
    match label {
        SloccLabel::Sep => {
            let a = random_ket(2, rng)?;
            let b = random_ket(2, rng)?;
            let c = random_ket(2, rng)?;
            Ok(a.kron(&b.kron(&c)))
        }
        SloccLabel::Bs1 => Ok(random_ket(2, rng)?.kron(&random_ket(4, rng)?)),
        SloccLabel::Bs2 => swap_bc(&random_ket(4, rng)?.kron(&random_ket(2, rng)?)),
        SloccLabel::Bs3 => Ok(random_ket(4, rng)?.kron(&random_ket(2, rng)?)),
        SloccLabel::W => {
            let a = random_phase_gate(rng);
            let b = random_phase_gate(rng);
            let c = random_phase_gate(rng);
            a.kron(&b).kron(&c).apply(&w_state())
        }
        SloccLabel::Ghz => random_ket(DIM, rng),
    }
}

/// Applies a fresh Haar U(2) to each qubit selected by `pattern`.
pub fn lu_augment<R: Rng + ?Sized>(
    k: &Ket,
    pattern: AugmentationPattern,
    rng: &mut R,
) -> Result<Ket> {
    k.ensure_dim(DIM)?;
    if pattern.bits() == 0 {
        return Ok(k.clone());
    }
    let mut factors = Vec::with_capacity(3);
    for shift in [2, 1, 0] {
        factors.push(if pattern.rotates(shift) {
            haar_unitary(2, rng)?
        } else {
            ComplexMatrix::identity(2)
        });
    }
    factors[0].kron(&factors[1]).kron(&factors[2]).apply(k)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th state of `(label, pattern)` under `master`.
pub fn state_seed(
    master: u64,
    label: SloccLabel,
    pattern: AugmentationPattern,
    index: usize,
) -> u64 {
    let key = (label.id() as u64) << 56 | (pattern.bits() as u64) << 48 | index as u64;
    splitmix64(splitmix64(master) ^ key)
}

pub fn gen_labeled_state(
    master: u64,
    label: SloccLabel,
    pattern: AugmentationPattern,
    index: usize,
) -> Result<LabeledState> {
    let mut rng = ChaCha8Rng::seed_from_u64(state_seed(master, label, pattern, index));
    let base = gen_base_state(label, &mut rng)?;
    let ket = lu_augment(&base, pattern, &mut rng)?;
    Ok(LabeledState {
        ket,
        label,
        pattern,
    })
}

/// States ordered by class, then pattern, then index.
pub fn build_dataset(spec: &DatasetSpec) -> Result<Vec<LabeledState>> {
    if spec.per_class_per_pattern == 0 || spec.classes.is_empty() {
        return Err(Error::EmptyDataset("dataset spec selects no states".into()));
    }
    if spec.per_class_per_pattern >= 1 << 48 {
        return Err(Error::OutOfRange(
            "per-class-per-pattern count too large".into(),
        ));
    }
    let mut out = Vec::with_capacity(spec.total());
    for &label in &spec.classes {
        for pattern in AugmentationPattern::all() {
            for index in 0..spec.per_class_per_pattern {
                out.push(gen_labeled_state(spec.seed, label, pattern, index)?);
            }
        }
    }
    Ok(out)
}
