//! Dataset model, deterministic feature-space transforms, and split/fold
//! bookkeeping shared by every other module.
//!
//! A [`Sample`] couples a static feature vector of length `n_s` with a
//! dynamic feature matrix of shape `n_d x l_d` (one row per dynamic channel,
//! one column per time step) and a binary [`ClassLabel`].

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

/// Standard deviations below this floor are clamped before dividing.
pub const STD_FLOOR: f64 = 1e-8;

/// Binary class label. `Pos` wins every tie-break in the classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Pos,
    Neg,
}

impl ClassLabel {
    pub const BOTH: [ClassLabel; 2] = [ClassLabel::Pos, ClassLabel::Neg];

    /// Index used for class-count vectors: Pos = 0, Neg = 1.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Pos => 0,
            ClassLabel::Neg => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            ClassLabel::Pos => ClassLabel::Neg,
            ClassLabel::Neg => ClassLabel::Pos,
        }
    }
}

/// How the static feature vectors of a dataset were obtained.
///
/// Univariate benchmark files define static features as the spatialized
/// dynamic sequence; the pipeline uses this marker to treat the bimodal
/// stand-alone models as their unimodal counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StaticSource {
    Independent,
    SpatializedDynamic,
}

/// One labeled sample: statics `[n_s]`, dynamics `[n_d][l_d]`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub statics: Vec<f64>,
    pub dynamics: Array2<f64>,
    pub label: ClassLabel,
}

/// A labeled dataset with fixed dimensions and exactly two class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<Sample>,
    n_s: usize,
    n_d: usize,
    l_d: usize,
    pos_name: String,
    neg_name: String,
    static_source: StaticSource,
}

impl Dataset {
    /// Build a dataset, validating every invariant: per-sample dimensions,
    /// finiteness of all values, and distinct class names.
    pub fn new(
        samples: Vec<Sample>,
        n_s: usize,
        n_d: usize,
        l_d: usize,
        pos_name: impl Into<String>,
        neg_name: impl Into<String>,
    ) -> Result<Self> {
        let pos_name = pos_name.into();
        let neg_name = neg_name.into();
        if pos_name == neg_name {
            return Err(Error::Config(format!(
                "class labels must be distinct, both are {pos_name:?}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.statics.len() != n_s {
                return Err(Error::Dimension(format!(
                    "sample {i}: static vector has length {}, expected {n_s}",
                    s.statics.len()
                )));
            }
            if s.dynamics.nrows() != n_d || s.dynamics.ncols() != l_d {
                return Err(Error::Dimension(format!(
                    "sample {i}: dynamic matrix is {}x{}, expected {n_d}x{l_d}",
                    s.dynamics.nrows(),
                    s.dynamics.ncols()
                )));
            }
            if !s.statics.iter().all(|v| v.is_finite()) || !s.dynamics.iter().all(|v| v.is_finite())
            {
                return Err(Error::NonFinite(format!("sample {i}")));
            }
        }
        Ok(Dataset {
            samples,
            n_s,
            n_d,
            l_d,
            pos_name,
            neg_name,
            static_source: StaticSource::Independent,
        })
    }

    pub fn with_static_source(mut self, source: StaticSource) -> Self {
        self.static_source = source;
        self
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_d(&self) -> usize {
        self.n_d
    }

    pub fn l_d(&self) -> usize {
        self.l_d
    }

    pub fn pos_name(&self) -> &str {
        &self.pos_name
    }

    pub fn neg_name(&self) -> &str {
        &self.neg_name
    }

    pub fn label_name(&self, label: ClassLabel) -> &str {
        match label {
            ClassLabel::Pos => &self.pos_name,
            ClassLabel::Neg => &self.neg_name,
        }
    }

    pub fn static_source(&self) -> StaticSource {
        self.static_source
    }

    /// Indices of all samples carrying `label`.
    pub fn class_indices(&self, label: ClassLabel) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// (positive count, negative count).
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .samples
            .iter()
            .filter(|s| s.label == ClassLabel::Pos)
            .count();
        (pos, self.samples.len() - pos)
    }

    /// New dataset holding clones of the samples at `ids`, in that order.
    pub fn subset(&self, ids: &[usize]) -> Dataset {
        Dataset {
            samples: ids.iter().map(|&i| self.samples[i].clone()).collect(),
            n_s: self.n_s,
            n_d: self.n_d,
            l_d: self.l_d,
            pos_name: self.pos_name.clone(),
            neg_name: self.neg_name.clone(),
            static_source: self.static_source,
        }
    }

    /// Content hash over dimensions, values, and labels; used as a cache key
    /// component for trained feature extractors.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for dim in [self.n_s, self.n_d, self.l_d, self.samples.len()] {
            h.update((dim as u64).to_le_bytes());
        }
        h.update(self.pos_name.as_bytes());
        h.update(self.neg_name.as_bytes());
        for s in &self.samples {
            h.update([s.label.index() as u8]);
            for v in &s.statics {
                h.update(v.to_le_bytes());
            }
            for v in s.dynamics.iter() {
                h.update(v.to_le_bytes());
            }
        }
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Flatten an `n_d x l_d` dynamic matrix into one feature vector, row-major:
/// all time steps of channel 0, then channel 1, and so on.
pub fn spatialize(dynamic: &Array2<f64>) -> Result<Vec<f64>> {
    if dynamic.nrows() == 0 || dynamic.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "cannot spatialize an empty {}x{} matrix",
            dynamic.nrows(),
            dynamic.ncols()
        )));
    }
    let (n_d, l_d) = (dynamic.nrows(), dynamic.ncols());
    let mut out = Vec::with_capacity(n_d * l_d);
    for i in 0..n_d {
        for t in 0..l_d {
            out.push(dynamic[(i, t)]);
        }
    }
    Ok(out)
}

/// Turn a static vector into constant "fake" sequences of length `l_d`,
/// one row per static feature. A zero-length vector yields a 0 x l_d matrix.
pub fn staticize(statics: &[f64], l_d: usize) -> Result<Array2<f64>> {
    if l_d == 0 {
        return Err(Error::Dimension("staticize requires l_d >= 1".to_string()));
    }
    Ok(Array2::from_shape_fn((statics.len(), l_d), |(i, _)| {
        statics[i]
    }))
}

/// Which splitting protocol produced a [`SplitPlan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitKind {
    TrainTest,
    AbHalves,
    KFolds,
}

/// A class-stratified partition of a dataset's samples.
///
/// Partitions are disjoint and cover all samples; part sizes differ by at
/// most one overall and per class; the plan is fully determined by
/// `(dataset, kind, n_parts, seed)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub n_parts: usize,
    /// Partition index of each sample, aligned with dataset order.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Sample indices assigned to partition `part`, in dataset order.
    pub fn part(&self, part: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == part)
            .map(|(i, _)| i)
            .collect()
    }

    /// Sample indices in every partition except `part`, in dataset order.
    pub fn complement(&self, part: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != part)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn part_size(&self, part: usize) -> usize {
        self.assignments.iter().filter(|&&p| p == part).count()
    }
}

// Stratified dealing: per class, shuffle and deal round-robin, carrying the
// fold cursor across classes so overall part sizes also differ by at most 1.
fn stratified_assign(dataset: &Dataset, n_parts: usize, seed: u64, kind: SplitKind) -> SplitPlan {
    let mut rng = rng::stream_rng(seed, "split-plan", n_parts as u64);
    let mut assignments = vec![0usize; dataset.len()];
    let mut cursor = 0usize;
    for label in ClassLabel::BOTH {
        let mut ids = dataset.class_indices(label);
        ids.shuffle(&mut rng);
        for (j, &id) in ids.iter().enumerate() {
            assignments[id] = (cursor + j) % n_parts;
        }
        cursor = (cursor + ids.len()) % n_parts;
    }
    SplitPlan {
        kind,
        n_parts,
        assignments,
        seed,
    }
}

fn require_min_per_class(dataset: &Dataset, min: usize, what: &str) -> Result<()> {
    let (pos, neg) = dataset.class_counts();
    for (count, label) in [(pos, &dataset.pos_name), (neg, &dataset.neg_name)] {
        if count < min {
            return Err(Error::Stratification(format!(
                "{what} needs at least {min} samples per class, class {label:?} has {count}"
            )));
        }
    }
    Ok(())
}

/// Split into stratified halves A (partition 0) and B (partition 1); when a
/// class has an odd count, A receives the extra sample first.
pub fn split_ab(dataset: &Dataset, seed: u64) -> Result<SplitPlan> {
    require_min_per_class(dataset, 2, "ab split")?;
    Ok(stratified_assign(dataset, 2, seed, SplitKind::AbHalves))
}

/// Stratified train (partition 0) / test (partition 1) halves.
pub fn split_train_test(dataset: &Dataset, seed: u64) -> Result<SplitPlan> {
    require_min_per_class(dataset, 2, "train/test split")?;
    Ok(stratified_assign(dataset, 2, seed, SplitKind::TrainTest))
}

/// `k` stratified cross-validation folds.
pub fn make_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold split needs k >= 2, got {k}")));
    }
    require_min_per_class(dataset, k, "k-fold split")?;
    Ok(stratified_assign(dataset, k, seed, SplitKind::KFolds))
}

/// Per-channel mean and (floored) standard deviation, used both for static
/// feature columns and for dynamic channels pooled over time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    fn from_accumulators(sum: Vec<f64>, sum_sq: Vec<f64>, count: f64) -> Self {
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / count - m * m).max(0.0).sqrt().max(STD_FLOOR))
            .collect();
        ChannelStats { mean, std }
    }

    /// Fit per-column stats over a set of equal-length vectors.
    pub fn fit_vectors<'a>(rows: impl IntoIterator<Item = &'a [f64]>, width: usize) -> Self {
        let mut sum = vec![0.0; width];
        let mut sum_sq = vec![0.0; width];
        let mut count = 0usize;
        for row in rows {
            debug_assert_eq!(row.len(), width);
            for (j, &v) in row.iter().enumerate() {
                sum[j] += v;
                sum_sq[j] += v * v;
            }
            count += 1;
        }
        Self::from_accumulators(sum, sum_sq, (count.max(1)) as f64)
    }

    /// Fit per-channel stats pooled over the time steps of all sequences.
    pub fn fit_sequences(seqs: &[Array2<f64>]) -> Result<Self> {
        let Some(first) = seqs.first() else {
            return Err(Error::Dimension(
                "cannot fit channel stats on zero sequences".to_string(),
            ));
        };
        let channels = first.nrows();
        let mut sum = vec![0.0; channels];
        let mut sum_sq = vec![0.0; channels];
        let mut count = 0usize;
        for seq in seqs {
            if seq.nrows() != channels {
                return Err(Error::Dimension(format!(
                    "sequence has {} channels, expected {channels}",
                    seq.nrows()
                )));
            }
            for c in 0..channels {
                for t in 0..seq.ncols() {
                    let v = seq[(c, t)];
                    sum[c] += v;
                    sum_sq[c] += v * v;
                }
            }
            count += seq.ncols();
        }
        Ok(Self::from_accumulators(sum, sum_sq, (count.max(1)) as f64))
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "vector has length {}, stats cover {}",
                v.len(),
                self.mean.len()
            )));
        }
        Ok(v.iter()
            .enumerate()
            .map(|(j, &x)| (x - self.mean[j]) / self.std[j])
            .collect())
    }

    pub fn apply_sequence(&self, seq: &Array2<f64>) -> Result<Array2<f64>> {
        if seq.nrows() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "sequence has {} channels, stats cover {}",
                seq.nrows(),
                self.mean.len()
            )));
        }
        Ok(Array2::from_shape_fn(seq.dim(), |(c, t)| {
            (seq[(c, t)] - self.mean[c]) / self.std[c]
        }))
    }
}

/// Per-feature standardization statistics fit on a training partition:
/// one entry per static feature and one per dynamic channel (pooled over
/// time steps). Stored standard deviations are floored at [`STD_FLOOR`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub statics: ChannelStats,
    pub dynamics: ChannelStats,
}

impl Standardizer {
    /// Fit on a training partition. Callers must not fit on data that will
    /// later be scored as held-out.
    pub fn fit(part: &Dataset) -> Self {
        let statics = ChannelStats::fit_vectors(
            part.samples().iter().map(|s| s.statics.as_slice()),
            part.n_s(),
        );
        let seqs: Vec<Array2<f64>> = part.samples().iter().map(|s| s.dynamics.clone()).collect();
        let dynamics = if seqs.is_empty() || part.n_d() == 0 {
            ChannelStats {
                mean: vec![0.0; part.n_d()],
                std: vec![1.0; part.n_d()],
            }
        } else {
            ChannelStats::fit_sequences(&seqs).expect("sequences validated by Dataset")
        };
        Standardizer { statics, dynamics }
    }

    /// Transform every feature to `(x - mean) / std` using the stored stats;
    /// labels are untouched.
    pub fn apply(&self, part: &Dataset) -> Result<Dataset> {
        if self.statics.len() != part.n_s() || self.dynamics.len() != part.n_d() {
            return Err(Error::Dimension(format!(
                "standardizer covers {}s/{}d features, dataset has {}s/{}d",
                self.statics.len(),
                self.dynamics.len(),
                part.n_s(),
                part.n_d()
            )));
        }
        let samples = part
            .samples()
            .iter()
            .map(|s| {
                Ok(Sample {
                    statics: self.statics.apply_vector(&s.statics)?,
                    dynamics: self.dynamics.apply_sequence(&s.dynamics)?,
                    label: s.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(
            samples,
            part.n_s(),
            part.n_d(),
            part.l_d(),
            part.pos_name(),
            part.neg_name(),
        )
        .map(|d| d.with_static_source(part.static_source()))
    }
}
