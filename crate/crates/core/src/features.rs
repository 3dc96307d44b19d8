//! Real-valued encodings of states and ANOVA F-test feature ranking.
//!
//! DM63 layout: positions 0..7 are `Re(rho_ii)` for i in 0..7 (`rho_77` is
//! implied by the trace), then `Re(rho_ij)` for the 28 strictly-lower
//! entries in row-major order `(1,0), (2,0), (2,1), (3,0), ... (7,6)`, then
//! `Im(rho_ij)` in the same order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, DensityMatrix, Ket, C64, DENSITY_TOL, DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureOrdering {
    #[serde(rename = "DM63")]
    Dm63,
    #[serde(rename = "DIAG7")]
    Diag7,
    #[serde(rename = "SV16")]
    Sv16,
    #[serde(rename = "DM128")]
    Dm128,
}

impl FeatureOrdering {
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            FeatureOrdering::Dm63 => 63,
            FeatureOrdering::Diag7 => 7,
            FeatureOrdering::Sv16 => 16,
            FeatureOrdering::Dm128 => 128,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            FeatureOrdering::Dm63 => "DM63",
            FeatureOrdering::Diag7 => "DIAG7",
            FeatureOrdering::Sv16 => "SV16",
            FeatureOrdering::Dm128 => "DM128",
        }
    }

    /// Symbolic name of feature `index`, e.g. `Re(rho_22)` or `Im(c_5)`.
    pub fn feature_name(self, index: usize) -> Option<String> {
        if index >= self.len() {
            return None;
        }
        Some(match self {
            FeatureOrdering::Dm63 => {
                if index < 7 {
                    format!("Re(rho_{index}{index})")
                } else {
                    let (part, k) = if index < 35 {
                        ("Re", index - 7)
                    } else {
                        ("Im", index - 35)
                    };
                    let (i, j) = LOWER[k];
                    format!("{part}(rho_{i}{j})")
                }
            }
            FeatureOrdering::Diag7 => format!("Re(rho_{index}{index})"),
            FeatureOrdering::Sv16 => {
                let part = if index.is_multiple_of(2) { "Re" } else { "Im" };
                format!("{part}(c_{})", index / 2)
            }
            FeatureOrdering::Dm128 => {
                let part = if index < 64 { "Re" } else { "Im" };
                let e = index % 64;
                format!("{part}(rho_{}{})", e / DIM, e % DIM)
            }
        })
    }
}

impl fmt::Display for FeatureOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FeatureOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dm63" => Ok(FeatureOrdering::Dm63),
            "diag7" => Ok(FeatureOrdering::Diag7),
            "sv16" => Ok(FeatureOrdering::Sv16),
            "dm128" => Ok(FeatureOrdering::Dm128),
            _ => Err(Error::Config(format!(
                "unknown feature ordering {s:?} (expected dm63, diag7, sv16 or dm128)"
            ))),
        }
    }
}

/// Strictly-lower-triangle coordinates in row-major order.
const LOWER: [(usize, usize); 28] = {
    let mut out = [(0, 0); 28];
    let mut k = 0;
    let mut i = 1;
    while i < DIM {
        let mut j = 0;
        while j < i {
            out[k] = (i, j);
            k += 1;
            j += 1;
        }
        i += 1;
    }
    out
};

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub ordering: FeatureOrdering,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, ordering: FeatureOrdering) -> Result<Self> {
        if values.len() != ordering.len() {
            return Err(Error::Shape(format!(
                "{ordering} needs {} values, got {}",
                ordering.len(),
                values.len()
            )));
        }
        Ok(Self { values, ordering })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn dm_features_63(rho: &DensityMatrix) -> FeatureVector {
    let mut values = Vec::with_capacity(63);
    values.extend((0..7).map(|i| rho.get(i, i).re));
    values.extend(LOWER.iter().map(|&(i, j)| rho.get(i, j).re));
    values.extend(LOWER.iter().map(|&(i, j)| rho.get(i, j).im));
    FeatureVector {
        values,
        ordering: FeatureOrdering::Dm63,
    }
}

pub fn diag_features_7(rho: &DensityMatrix) -> FeatureVector {
    FeatureVector {
        values: rho.diagonal()[..7].to_vec(),
        ordering: FeatureOrdering::Diag7,
    }
}

/// Every entry, real parts row-major then imaginary parts row-major.
pub fn dm_features_128(rho: &DensityMatrix) -> FeatureVector {
    let e = rho.entries();
    let values = e
        .iter()
        .map(|z| z.re)
        .chain(e.iter().map(|z| z.im))
        .collect();
    FeatureVector {
        values,
        ordering: FeatureOrdering::Dm128,
    }
}

pub fn sv_features_16(k: &Ket) -> Result<FeatureVector> {
    k.ensure_dim(DIM)?;
    let values = k.amplitudes().iter().flat_map(|c| [c.re, c.im]).collect();
    Ok(FeatureVector {
        values,
        ordering: FeatureOrdering::Sv16,
    })
}

/// Inverse of [`dm_features_63`]: Hermitian completion plus unit trace.
pub fn density_from_dm63(f: &FeatureVector) -> Result<DensityMatrix> {
    if f.ordering != FeatureOrdering::Dm63 || f.len() != 63 {
        return Err(Error::Shape(format!(
            "expected DM63 features, got {}",
            f.ordering
        )));
    }
    let mut m = ComplexMatrix::zeros(DIM, DIM);
    let mut trace = 0.0;
    for i in 0..7 {
        m[(i, i)] = C64::new(f.values[i], 0.0);
        trace += f.values[i];
    }
    m[(7, 7)] = C64::new(1.0 - trace, 0.0);
    for (k, &(i, j)) in LOWER.iter().enumerate() {
        let z = C64::new(f.values[7 + k], f.values[35 + k]);
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    DensityMatrix::from_matrix(&m, DENSITY_TOL)
}

/// A pure-state ket recovered from its density matrix, gauge-fixed so the
/// amplitude on the most populated basis state is real and positive.
pub fn ket_from_density(rho: &DensityMatrix) -> Result<Ket> {
    let diag = rho.diagonal();
    let (j, &pop) = diag
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("eight entries");
    if pop.is_nan() || pop <= 0.0 {
        return Err(Error::InvalidState(
            "density matrix has no positive population".into(),
        ));
    }
    let scale = pop.sqrt();
    Ket::normalized((0..DIM).map(|i| rho.get(i, j) / scale).collect())
}

pub fn featurize(sample: &Sample, ordering: FeatureOrdering) -> Result<FeatureVector> {
    Ok(match ordering {
        FeatureOrdering::Dm63 => dm_features_63(&sample.rho),
        FeatureOrdering::Diag7 => diag_features_7(&sample.rho),
        FeatureOrdering::Dm128 => dm_features_128(&sample.rho),
        FeatureOrdering::Sv16 => match &sample.ket {
            Some(k) => sv_features_16(k)?,
            None => sv_features_16(&ket_from_density(&sample.rho)?)?,
        },
    })
}

pub fn featurize_dataset(data: &Dataset, ordering: FeatureOrdering) -> Result<Vec<FeatureVector>> {
    data.samples
        .iter()
        .map(|s| featurize(s, ordering))
        .collect()
}

/// Per-feature ANOVA F-values. `f64::INFINITY` marks perfect separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScores {
    pub ordering: FeatureOrdering,
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedFeature {
    pub rank: usize,
    pub name: String,
    pub index: usize,
    pub f_value: f64,
}

impl FeatureScores {
    /// All features, best first (1-based ranks).
    pub fn ranking(&self) -> Vec<RankedFeature> {
        top_k(self, self.scores.len())
            .expect("k equals the feature count")
            .into_iter()
            .enumerate()
            .map(|(r, index)| RankedFeature {
                rank: r + 1,
                name: self.ordering.feature_name(index).unwrap_or_default(),
                index,
                f_value: self.scores[index],
            })
            .collect()
    }
}

/// One-way ANOVA F statistic of every feature column against `labels`.
///
/// A feature that is identical across all samples scores 0; a feature that
/// is constant inside every class but differs between classes scores
/// `f64::INFINITY`.
pub fn anova_f(features: &[FeatureVector], labels: &[usize]) -> Result<FeatureScores> {
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let first = features
        .first()
        .ok_or_else(|| Error::EmptyDataset("no feature vectors to score".into()))?;
    let ordering = first.ordering;
    let width = first.len();
    if let Some(bad) = features
        .iter()
        .find(|f| f.ordering != ordering || f.len() != width)
    {
        return Err(Error::Shape(format!(
            "mixed feature orderings {ordering} and {}",
            bad.ordering
        )));
    }
    let n_groups = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; n_groups];
    for &l in labels {
        counts[l] += 1;
    }
    let present: Vec<usize> = (0..n_groups).filter(|&g| counts[g] > 0).collect();
    if present.len() < 2 {
        return Err(Error::InsufficientClasses(present.len()));
    }
    if let Some(&g) = present.iter().find(|&&g| counts[g] < 2) {
        return Err(Error::InsufficientSamples {
            class: g,
            count: counts[g],
        });
    }
    let n = features.len() as f64;
    let k = present.len() as f64;

    let mut scores = Vec::with_capacity(width);
    let mut sums = vec![0.0; n_groups];
    let mut firsts: Vec<Option<f64>> = vec![None; n_groups];
    for col in 0..width {
        sums.iter_mut().for_each(|s| *s = 0.0);
        firsts.iter_mut().for_each(|f| *f = None);
        let mut total = 0.0;
        let mut groups_constant = true;
        for (f, &g) in features.iter().zip(labels) {
            let x = f.values[col];
            sums[g] += x;
            total += x;
            match firsts[g] {
                None => firsts[g] = Some(x),
                Some(v) if v != x => groups_constant = false,
                _ => {}
            }
        }
        if groups_constant {
            let mut levels = present.iter().map(|&g| firsts[g]);
            let head = levels.next().flatten();
            scores.push(if levels.all(|v| v == head) {
                0.0
            } else {
                f64::INFINITY
            });
            continue;
        }
        let grand = total / n;
        let means: Vec<f64> = (0..n_groups)
            .map(|g| {
                if counts[g] > 0 {
                    sums[g] / counts[g] as f64
                } else {
                    0.0
                }
            })
            .collect();
        let ssb: f64 = present
            .iter()
            .map(|&g| counts[g] as f64 * (means[g] - grand).powi(2))
            .sum();
        let ssw: f64 = features
            .iter()
            .zip(labels)
            .map(|(f, &g)| (f.values[col] - means[g]).powi(2))
            .sum();
        scores.push((ssb / (k - 1.0)) / (ssw / (n - k)));
    }
    Ok(FeatureScores { ordering, scores })
}

/// Indices of the `k` best scores, descending; ties go to the lower index.
pub fn top_k(scores: &FeatureScores, k: usize) -> Result<Vec<usize>> {
    let n = scores.scores.len();
    if k > n {
        return Err(Error::OutOfRange(format!("top {k} of {n} features")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        scores.scores[b]
            .total_cmp(&scores.scores[a])
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    Ok(idx)
}
