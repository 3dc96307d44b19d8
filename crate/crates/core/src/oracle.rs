//! Ground-truth SLOCC labels for pure three-qubit states.
//!
//! Separability is read off the ranks of the single-qubit marginals; the
//! GHZ/W split among fully entangled states uses the three-tangle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, Ket, C64, DIM};

pub const RANK_TOL: f64 = 1e-9;
pub const TANGLE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SloccLabel {
    #[serde(rename = "SEP")]
    Sep,
    #[serde(rename = "BS1")]
    Bs1,
    #[serde(rename = "BS2")]
    Bs2,
    #[serde(rename = "BS3")]
    Bs3,
    W,
    #[serde(rename = "GHZ")]
    Ghz,
}

impl SloccLabel {
    pub const ALL: [SloccLabel; 6] = [
        SloccLabel::Sep,
        SloccLabel::Bs1,
        SloccLabel::Bs2,
        SloccLabel::Bs3,
        SloccLabel::W,
        SloccLabel::Ghz,
    ];

    /// Position in [`SloccLabel::ALL`]; also the on-disk label byte.
    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SloccLabel::Sep => "SEP",
            SloccLabel::Bs1 => "BS1",
            SloccLabel::Bs2 => "BS2",
            SloccLabel::Bs3 => "BS3",
            SloccLabel::W => "W",
            SloccLabel::Ghz => "GHZ",
        }
    }

    /// Genuine multipartite entanglement: W and GHZ.
    pub fn is_gme(self) -> bool {
        matches!(self, SloccLabel::W | SloccLabel::Ghz)
    }
}

impl fmt::Display for SloccLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SloccLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown SLOCC label {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Qubit {
    A,
    B,
    C,
}

impl Qubit {
    pub const ALL: [Qubit; 3] = [Qubit::A, Qubit::B, Qubit::C];

    /// Bit position of this qubit inside a basis index.
    fn shift(self) -> usize {
        match self {
            Qubit::A => 2,
            Qubit::B => 1,
            Qubit::C => 0,
        }
    }
}

/// Partial trace over the two qubits other than `qubit`.
pub fn reduced_density(k: &Ket, qubit: Qubit) -> Result<ComplexMatrix> {
    k.ensure_dim(DIM)?;
    let shift = qubit.shift();
    let amps = k.amplitudes();
    let mut m = ComplexMatrix::zeros(2, 2);
    for rest in 0..4 {
        // Spread the two remaining bits around the traced-in position.
        let low = rest & ((1 << shift) - 1);
        let high = (rest >> shift) << (shift + 1);
        let base = high | low;
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] += amps[base | (i << shift)] * amps[base | (j << shift)].conj();
            }
        }
    }
    Ok(m)
}

/// Eigenvalues of a 2x2 Hermitian matrix, ascending, from trace and determinant.
pub fn eigenvalues_2x2(m: &ComplexMatrix) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let half_trace = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [half_trace - half_gap, half_trace + half_gap]
}

/// Number of eigenvalues above `tol`.
pub fn marginal_rank(m: &ComplexMatrix, tol: f64) -> u8 {
    eigenvalues_2x2(m).iter().filter(|&&e| e > tol).count() as u8
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalReport {
    /// Ranks of the A, B, C marginals.
    pub ranks: [u8; 3],
    /// Smaller eigenvalue of each marginal; its distance from `tol` is the decision margin.
    pub min_eigenvalues: [f64; 3],
}

pub fn marginal_report(k: &Ket, tol: f64) -> Result<MarginalReport> {
    let mut ranks = [0; 3];
    let mut min_eigenvalues = [0.0; 3];
    for (i, q) in Qubit::ALL.into_iter().enumerate() {
        let m = reduced_density(k, q)?;
        ranks[i] = marginal_rank(&m, tol);
        min_eigenvalues[i] = eigenvalues_2x2(&m)[0];
    }
    Ok(MarginalReport {
        ranks,
        min_eigenvalues,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct TangleValue(pub f64);

/// Coffman–Kundu–Wootters three-tangle of a pure three-qubit state.
pub fn three_tangle(k: &Ket) -> Result<TangleValue> {
    k.ensure_dim(DIM)?;
    let c = k.amplitudes();
    let sq = |z: C64| z * z;
    let d1 = sq(c[0]) * sq(c[7]) + sq(c[1]) * sq(c[6]) + sq(c[2]) * sq(c[5]) + sq(c[3]) * sq(c[4]);
    let d2 = c[0] * c[7] * c[3] * c[4]
        + c[0] * c[7] * c[5] * c[2]
        + c[0] * c[7] * c[6] * c[1]
        + c[3] * c[4] * c[5] * c[2]
        + c[3] * c[4] * c[6] * c[1]
        + c[5] * c[2] * c[6] * c[1];
    let d3 = c[0] * c[6] * c[5] * c[3] + c[7] * c[1] * c[2] * c[4];
    Ok(TangleValue(4.0 * (d1 - 2.0 * d2 + 4.0 * d3).norm()))
}

pub fn classify_pure(k: &Ket, rank_tol: f64, tangle_tol: f64) -> Result<SloccLabel> {
    k.ensure_dim(DIM)?;
    k.ensure_normalized(1e-9)?;
    let report = marginal_report(k, rank_tol)?;
    match report.ranks {
        [1, 1, 1] => Ok(SloccLabel::Sep),
        [1, 2, 2] => Ok(SloccLabel::Bs1),
        [2, 1, 2] => Ok(SloccLabel::Bs2),
        [2, 2, 1] => Ok(SloccLabel::Bs3),
        [2, 2, 2] => {
            if three_tangle(k)?.0 > tangle_tol {
                Ok(SloccLabel::Ghz)
            } else {
                Ok(SloccLabel::W)
            }
        }
        [a, b, c] => Err(Error::DegenerateInput(a, b, c)),
    }
}

/// [`classify_pure`] at the library's default tolerances.
pub fn classify(k: &Ket) -> Result<SloccLabel> {
    classify_pure(k, RANK_TOL, TANGLE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{haar_unitary, random_ket, validate_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(pairs: &[(usize, f64)]) -> Ket {
        let mut a = vec![C64::new(0.0, 0.0); 8];
        for &(i, v) in pairs {
            a[i] = C64::new(v, 0.0);
        }
        Ket::new(a).unwrap()
    }

    fn ghz() -> Ket {
        ket(&[(0, FRAC_1_SQRT_2), (7, FRAC_1_SQRT_2)])
    }

    fn w() -> Ket {
        let s = 1.0 / 3f64.sqrt();
        ket(&[(1, s), (2, s), (4, s)])
    }

    fn local_unitary(k: &Ket, rng: &mut ChaCha8Rng) -> Ket {
        let u = haar_unitary(2, rng)
            .unwrap()
            .kron(&haar_unitary(2, rng).unwrap())
            .kron(&haar_unitary(2, rng).unwrap());
        u.apply(k).unwrap()
    }

    #[test]
    fn reduced_density_examples() {
        let half = ComplexMatrix::from_diagonal(&[C64::new(0.5, 0.0); 2]);
        assert!(
            reduced_density(&ghz(), Qubit::A)
                .unwrap()
                .max_abs_diff(&half)
                < 1e-15
        );
        let up = ComplexMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        for q in Qubit::ALL {
            assert_eq!(reduced_density(&Ket::basis(8, 0).unwrap(), q).unwrap(), up);
        }
        let wa =
            ComplexMatrix::from_diagonal(&[C64::new(2.0 / 3.0, 0.0), C64::new(1.0 / 3.0, 0.0)]);
        for q in Qubit::ALL {
            assert!(reduced_density(&w(), q).unwrap().max_abs_diff(&wa) < 1e-15);
        }
        assert!(matches!(
            reduced_density(&Ket::basis(4, 0).unwrap(), Qubit::A),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn reduced_density_picks_the_right_qubit() {
        // |0>_A |1>_B |0>_C
        let k = Ket::basis(8, 2).unwrap();
        let zero = ComplexMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let one = ComplexMatrix::from_diagonal(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(reduced_density(&k, Qubit::A).unwrap(), zero);
        assert_eq!(reduced_density(&k, Qubit::B).unwrap(), one);
        assert_eq!(reduced_density(&k, Qubit::C).unwrap(), zero);
    }

    #[test]
    fn reduced_densities_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let k = random_ket(8, &mut rng).unwrap();
            for q in Qubit::ALL {
                assert!(validate_density(&reduced_density(&k, q).unwrap(), 1e-9).is_valid());
            }
        }
    }

    #[test]
    fn marginal_rank_examples() {
        let c = |v: f64| C64::new(v, 0.0);
        assert_eq!(
            marginal_rank(&ComplexMatrix::from_diagonal(&[c(1.0), c(0.0)]), RANK_TOL),
            1
        );
        assert_eq!(
            marginal_rank(&ComplexMatrix::from_diagonal(&[c(0.5), c(0.5)]), RANK_TOL),
            2
        );
        let m = ComplexMatrix::from_diagonal(&[c(1.0 - 5e-10), c(5e-10)]);
        assert_eq!(marginal_rank(&m, 1e-9), 1);
    }

    #[test]
    fn tangle_examples() {
        assert!((three_tangle(&ghz()).unwrap().0 - 1.0).abs() < 1e-15);
        assert_eq!(three_tangle(&w()).unwrap().0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let t = three_tangle(&local_unitary(&ghz(), &mut rng)).unwrap().0;
            assert!((t - 1.0).abs() < 1e-8, "tau {t}");
        }
    }

    #[test]
    fn tangle_vanishes_on_biseparable_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let a = random_ket(2, &mut rng).unwrap();
            let bc = random_ket(4, &mut rng).unwrap();
            assert!(three_tangle(&a.kron(&bc)).unwrap().0 < 1e-10);
            assert!(three_tangle(&bc.kron(&a)).unwrap().0 < 1e-10);
        }
    }

    #[test]
    fn tangle_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..2000 {
            let t = three_tangle(&random_ket(8, &mut rng).unwrap()).unwrap().0;
            assert!((0.0..=1.0 + 1e-9).contains(&t));
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&Ket::basis(8, 0).unwrap()).unwrap(),
            SloccLabel::Sep
        );
        let bell = ket(&[(0, FRAC_1_SQRT_2), (3, FRAC_1_SQRT_2)]);
        assert_eq!(classify(&bell).unwrap(), SloccLabel::Bs1);
        // A ⊗ C separable from B: |0>_B (|00> + |11>)_AC.
        let bs2 = ket(&[(0, FRAC_1_SQRT_2), (5, FRAC_1_SQRT_2)]);
        assert_eq!(classify(&bs2).unwrap(), SloccLabel::Bs2);
        let bs3 = ket(&[(0, FRAC_1_SQRT_2), (6, FRAC_1_SQRT_2)]);
        assert_eq!(classify(&bs3).unwrap(), SloccLabel::Bs3);
        assert_eq!(classify(&w()).unwrap(), SloccLabel::W);
        assert_eq!(classify(&ghz()).unwrap(), SloccLabel::Ghz);
    }

    #[test]
    fn random_kets_are_ghz_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10_000;
        let ghz = (0..n)
            .filter(|_| classify(&random_ket(8, &mut rng).unwrap()).unwrap() == SloccLabel::Ghz)
            .count();
        assert!(ghz as f64 / n as f64 >= 0.999);
    }

    #[test]
    fn impossible_rank_pattern_is_reported() {
        // Marginal spectra are (1-e, e), (1-e, e), (1-2e, 2e); a tolerance between e and 2e
        // yields the unphysical (1, 1, 2).
        let e: f64 = 1e-5;
        let k = ket(&[(0, (1.0 - 2.0 * e).sqrt()), (5, e.sqrt()), (3, e.sqrt())]);
        assert!(matches!(
            classify_pure(&k, 1.5e-5, TANGLE_TOL),
            Err(Error::DegenerateInput(1, 1, 2))
        ));
    }

    #[test]
    fn labels_round_trip_through_names_and_ids() {
        for l in SloccLabel::ALL {
            assert_eq!(l.name().parse::<SloccLabel>().unwrap(), l);
            assert_eq!(SloccLabel::from_id(l.id()), Some(l));
        }
        assert!(SloccLabel::W.is_gme() && SloccLabel::Ghz.is_gme());
        assert!(!SloccLabel::Bs2.is_gme());
        assert_eq!(SloccLabel::from_id(6), None);
    }
}
