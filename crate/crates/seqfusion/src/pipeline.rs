//! The twelve model architectures, the two-tier train/enrich/test protocol,
//! and the cross-validation enrichment protocol.
//!
//! Models 1-7 are stand-alone classifiers. Models 8-12 are two-tier: feature
//! extractors are trained on one partition (training_A, or the out-of-fold
//! complement under cross-validation) and used to enrich the remaining
//! partitions, so no sample is ever scored with features produced by an
//! extractor that saw it. Overlap is a hard [`Error::Leakage`] failure.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, ChannelStats, ClassLabel, Dataset, Sample, SplitPlan, StaticSource};
use crate::error::{Error, Result};
use crate::forest::{self, Forest};
use crate::hmm::PairedHmm;
use crate::lstm::{self, PairedLstm};
use crate::rng;

/// Model identifiers 1-12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    RfS,
    HmmD,
    LstmD,
    RfD,
    RfSd,
    HmmSd,
    LstmSd,
    EnsHmm,
    EnsLstm,
    HybHmm,
    HybLstm,
    HybLstmA,
}

/// Feature families a model consumes, mirrored by the conformance audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    Static,
    Dynamic,
    PredRf,
    PredHmm,
    PredLstm,
    RatioHmm,
    RatioLstm,
    ActivationsLstm,
}

/// Ordered feature layout: each consumed group with its width.
pub type FeatureLayout = Vec<(FeatureGroup, usize)>;

impl ModelId {
    pub const ALL: [ModelId; 12] = [
        ModelId::RfS,
        ModelId::HmmD,
        ModelId::LstmD,
        ModelId::RfD,
        ModelId::RfSd,
        ModelId::HmmSd,
        ModelId::LstmSd,
        ModelId::EnsHmm,
        ModelId::EnsLstm,
        ModelId::HybHmm,
        ModelId::HybLstm,
        ModelId::HybLstmA,
    ];

    pub fn from_index(index: usize) -> Result<ModelId> {
        if (1..=12).contains(&index) {
            Ok(ModelId::ALL[index - 1])
        } else {
            Err(Error::Config(format!(
                "model id must lie in 1..=12, got {index}"
            )))
        }
    }

    pub fn index(self) -> usize {
        ModelId::ALL.iter().position(|&m| m == self).unwrap() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelId::RfS => "RF_s",
            ModelId::HmmD => "HMM_d",
            ModelId::LstmD => "LSTM_d",
            ModelId::RfD => "RF_d",
            ModelId::RfSd => "RF_sd",
            ModelId::HmmSd => "HMM_sd",
            ModelId::LstmSd => "LSTM_sd",
            ModelId::EnsHmm => "ENS_HMM",
            ModelId::EnsLstm => "ENS_LSTM",
            ModelId::HybHmm => "HYB_HMM",
            ModelId::HybLstm => "HYB_LSTM",
            ModelId::HybLstmA => "HYB_LSTMA",
        }
    }

    /// Models 8-12 enrich through a first-tier extractor.
    pub fn is_enriched(self) -> bool {
        self.index() >= 8
    }

    /// The feature-set matrix the conformance audit checks against.
    pub fn expected_feature_sets(self) -> &'static [FeatureGroup] {
        use FeatureGroup::*;
        match self {
            ModelId::RfS => &[Static],
            ModelId::HmmD | ModelId::LstmD | ModelId::RfD => &[Dynamic],
            ModelId::RfSd | ModelId::HmmSd | ModelId::LstmSd => &[Static, Dynamic],
            ModelId::EnsHmm => &[PredRf, PredHmm],
            ModelId::EnsLstm => &[PredRf, PredLstm],
            ModelId::HybHmm => &[Static, RatioHmm],
            ModelId::HybLstm => &[Static, RatioLstm],
            ModelId::HybLstmA => &[Static, ActivationsLstm],
        }
    }

    /// On datasets whose static features are the spatialized dynamics, the
    /// bimodal stand-alone models are the same model as their unimodal
    /// counterparts; evaluating them as such keeps predictions identical.
    pub fn dealias(self, source: StaticSource) -> ModelId {
        if source == StaticSource::SpatializedDynamic {
            match self {
                ModelId::RfSd => ModelId::RfS,
                ModelId::HmmSd => ModelId::HmmD,
                ModelId::LstmSd => ModelId::LstmD,
                other => other,
            }
        } else {
            self
        }
    }
}

/// Which network supplies the activations for `HYB_LSTMA`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationSource {
    Pos,
    Neg,
    BothConcatenated,
}

/// Hyperparameters for one experiment run (one value per component; every
/// model in the run shares them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hp {
    pub lstm_units: usize,
    pub lstm_dropout: f64,
    pub lstm_batch: usize,
    pub lstm_epochs: usize,
    pub lstm_learning_rate: f64,
    pub lstm_clip_norm: f64,
    pub hmm_states: usize,
    pub hmm_iters: usize,
    pub rf_trees: usize,
    /// Standardize LSTM input sequences with stats fit on the extractor's
    /// own training partition.
    pub standardize_lstm: bool,
    /// Same for HMM inputs; off by default (the HMM fits its own Gaussians).
    pub standardize_hmm: bool,
    pub activation_source: ActivationSource,
}

impl Default for Hp {
    fn default() -> Self {
        Hp {
            lstm_units: 32,
            lstm_dropout: 0.0,
            lstm_batch: 1,
            lstm_epochs: 8,
            lstm_learning_rate: 1e-3,
            lstm_clip_norm: 5.0,
            hmm_states: 6,
            hmm_iters: 50,
            rf_trees: 500,
            standardize_lstm: true,
            standardize_hmm: false,
            activation_source: ActivationSource::Pos,
        }
    }
}

impl Hp {
    fn lstm_config(&self, seed: u64) -> lstm::TrainConfig {
        lstm::TrainConfig {
            n_units: self.lstm_units,
            dropout: self.lstm_dropout,
            batch_size: self.lstm_batch,
            epochs: self.lstm_epochs,
            learning_rate: self.lstm_learning_rate,
            clip_norm: self.lstm_clip_norm,
            seed,
        }
    }
}

/// Evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    TrainTest,
    Cv(usize),
}

impl Protocol {
    pub fn label(&self) -> String {
        match self {
            Protocol::TrainTest => "train-test".to_string(),
            Protocol::Cv(k) => format!("cv:{k}"),
        }
    }

    pub fn n_folds(&self) -> usize {
        match self {
            Protocol::TrainTest => 1,
            Protocol::Cv(k) => *k,
        }
    }
}

/// Result of evaluating one model.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub model_index: usize,
    pub model_name: String,
    pub dataset: String,
    pub protocol: String,
    /// Test accuracy; for cross-validation the unweighted mean over folds.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub seed: u64,
    pub hp: Hp,
    pub wall_time_s: f64,
    /// Feature layout actually consumed, group by group.
    pub feature_layout: FeatureLayout,
    /// Held-out predictions: test-set order for train/test, dataset order
    /// for cross-validation. Not serialized.
    #[serde(skip)]
    pub predictions: Vec<ClassLabel>,
}

impl EvalReport {
    /// Distinct feature groups consumed, for the Table-style audit.
    pub fn feature_groups(&self) -> BTreeSet<FeatureGroup> {
        self.feature_layout.iter().map(|&(g, _)| g).collect()
    }

    /// Total width of the vectorized feature space (0 for the generative
    /// models, which consume sequences).
    pub fn feature_width(&self) -> usize {
        self.feature_layout.iter().map(|&(_, n)| n).sum()
    }
}

/// First-tier artifacts plus the ids of the samples they were trained on.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub trained_on: BTreeSet<usize>,
    rf_static: Option<Arc<Forest>>,
    hmm: Option<Arc<HmmArtifact>>,
    lstm: Option<Arc<LstmArtifact>>,
}

#[derive(Debug)]
struct LstmArtifact {
    paired: PairedLstm,
    stats: Option<ChannelStats>,
}

#[derive(Debug)]
struct HmmArtifact {
    paired: PairedHmm,
    stats: Option<ChannelStats>,
}

/// In-process cache of trained extractor artifacts keyed by dataset content,
/// partition, hyperparameters, and seed; it makes the 12-model sweep cheap
/// because models 9, 11, and 12 share one paired LSTM.
#[derive(Default)]
pub struct ExtractorCache {
    hmm: HashMap<String, Arc<HmmArtifact>>,
    lstm: HashMap<String, Arc<LstmArtifact>>,
    rf: HashMap<String, Arc<Forest>>,
}

fn sequences_of(ds: &Dataset, ids: &[usize]) -> Vec<Array2<f64>> {
    ids.iter()
        .map(|&i| ds.samples()[i].dynamics.clone())
        .collect()
}

fn labels_of(ds: &Dataset, ids: &[usize]) -> Vec<ClassLabel> {
    ids.iter().map(|&i| ds.samples()[i].label).collect()
}

// Dynamic channels first, then one constant "fake" sequence per static
// feature.
fn augment_sequence(sample: &Sample, l_d: usize) -> Result<Array2<f64>> {
    let fake = data::staticize(&sample.statics, l_d)?;
    let n_d = sample.dynamics.nrows();
    let n_s = fake.nrows();
    Ok(Array2::from_shape_fn((n_d + n_s, l_d), |(c, t)| {
        if c < n_d {
            sample.dynamics[(c, t)]
        } else {
            fake[(c - n_d, t)]
        }
    }))
}

/// Sequence views consumed by the generative stand-alone models (2, 3, 6, 7).
fn sequences_for_model(
    model: ModelId,
    ds: &Dataset,
    ids: &[usize],
) -> Result<(Vec<Array2<f64>>, FeatureLayout)> {
    match model {
        ModelId::HmmD | ModelId::LstmD => Ok((
            sequences_of(ds, ids),
            vec![(FeatureGroup::Dynamic, ds.n_d())],
        )),
        ModelId::HmmSd | ModelId::LstmSd => {
            let seqs = ids
                .iter()
                .map(|&i| augment_sequence(&ds.samples()[i], ds.l_d()))
                .collect::<Result<Vec<_>>>()?;
            Ok((
                seqs,
                vec![
                    (FeatureGroup::Dynamic, ds.n_d()),
                    (FeatureGroup::Static, ds.n_s()),
                ],
            ))
        }
        other => Err(Error::Config(format!(
            "model {} is not a generative sequence classifier",
            other.name()
        ))),
    }
}

/// Assemble the feature vector a discriminative model consumes for one
/// sample, together with its provenance layout. Models 2, 3, 6, and 7 are
/// not vectorized (they classify sequences directly) and return an error.
/// Enriched models require `extractor`; an extractor that saw the sample is
/// a hard leakage failure.
pub fn build_features(
    model: ModelId,
    sample: &Sample,
    sample_id: usize,
    extractor: Option<&Extractor>,
    hp: &Hp,
) -> Result<(Vec<f64>, FeatureLayout)> {
    use FeatureGroup::*;
    if model.is_enriched() {
        let Some(ex) = extractor else {
            return Err(Error::Config(format!(
                "model {} needs a trained extractor",
                model.name()
            )));
        };
        if ex.trained_on.contains(&sample_id) {
            return Err(Error::Leakage(format!(
                "sample {sample_id} would be enriched by an extractor trained on it"
            )));
        }
    } else if extractor.is_some() {
        return Err(Error::Config(format!(
            "model {} does not take an extractor",
            model.name()
        )));
    }

    match model {
        ModelId::RfS => Ok((sample.statics.clone(), vec![(Static, sample.statics.len())])),
        ModelId::RfD => {
            let spat = data::spatialize(&sample.dynamics)?;
            let n = spat.len();
            Ok((spat, vec![(Dynamic, n)]))
        }
        ModelId::RfSd => {
            let mut out = sample.statics.clone();
            let spat = data::spatialize(&sample.dynamics)?;
            let layout = vec![(Static, out.len()), (Dynamic, spat.len())];
            out.extend(spat);
            Ok((out, layout))
        }
        ModelId::HmmD | ModelId::LstmD | ModelId::HmmSd | ModelId::LstmSd => {
            Err(Error::Config(format!(
                "model {} operates directly on sequences and has no feature vector",
                model.name()
            )))
        }
        ModelId::EnsHmm => {
            let ex = extractor.unwrap();
            let rf = ex.require_rf()?;
            let hmm = ex.require_hmm()?;
            let (lp_rf, ln_rf) = rf.predict_log_proba(&sample.statics)?;
            let seq = hmm.apply_stats(&sample.dynamics)?;
            let (lp, ln_) = hmm.paired.log_likelihoods(&seq)?;
            Ok((vec![lp_rf, ln_rf, lp, ln_], vec![(PredRf, 2), (PredHmm, 2)]))
        }
        ModelId::EnsLstm => {
            let ex = extractor.unwrap();
            let rf = ex.require_rf()?;
            let art = ex.require_lstm()?;
            let (lp_rf, ln_rf) = rf.predict_log_proba(&sample.statics)?;
            let seq = art.apply_stats(&sample.dynamics)?;
            let (mse_pos, mse_neg) = art.paired.mses(&seq)?;
            Ok((
                vec![lp_rf, ln_rf, mse_pos, mse_neg],
                vec![(PredRf, 2), (PredLstm, 2)],
            ))
        }
        ModelId::HybHmm => {
            let art = extractor.unwrap().require_hmm()?;
            let seq = art.apply_stats(&sample.dynamics)?;
            let ratio = art.paired.ratio(&seq)?;
            let mut out = sample.statics.clone();
            let layout = vec![(Static, out.len()), (RatioHmm, 1)];
            out.push(ratio);
            Ok((out, layout))
        }
        ModelId::HybLstm => {
            let art = extractor.unwrap().require_lstm()?;
            let seq = art.apply_stats(&sample.dynamics)?;
            let ratio = art.paired.ratio(&seq)?;
            let mut out = sample.statics.clone();
            let layout = vec![(Static, out.len()), (RatioLstm, 1)];
            out.push(ratio);
            Ok((out, layout))
        }
        ModelId::HybLstmA => {
            let art = extractor.unwrap().require_lstm()?;
            let seq = art.apply_stats(&sample.dynamics)?;
            let acts = match hp.activation_source {
                ActivationSource::Pos => art.paired.pos.activations(&seq)?,
                ActivationSource::Neg => art.paired.neg.activations(&seq)?,
                ActivationSource::BothConcatenated => {
                    let mut a = art.paired.pos.activations(&seq)?;
                    a.extend(art.paired.neg.activations(&seq)?);
                    a
                }
            };
            let mut out = sample.statics.clone();
            let layout = vec![(Static, out.len()), (ActivationsLstm, acts.len())];
            out.extend(acts);
            Ok((out, layout))
        }
    }
}

impl Extractor {
    fn require_rf(&self) -> Result<&Forest> {
        self.rf_static
            .as_deref()
            .ok_or_else(|| Error::Config("extractor has no static-feature forest".to_string()))
    }

    fn require_hmm(&self) -> Result<&HmmArtifact> {
        self.hmm
            .as_deref()
            .ok_or_else(|| Error::Config("extractor has no paired HMM".to_string()))
    }

    fn require_lstm(&self) -> Result<&LstmArtifact> {
        self.lstm
            .as_deref()
            .ok_or_else(|| Error::Config("extractor has no paired LSTM".to_string()))
    }
}

impl LstmArtifact {
    fn apply_stats(&self, seq: &Array2<f64>) -> Result<Array2<f64>> {
        match &self.stats {
            Some(stats) => stats.apply_sequence(seq),
            None => Ok(seq.clone()),
        }
    }
}

impl HmmArtifact {
    fn apply_stats(&self, seq: &Array2<f64>) -> Result<Array2<f64>> {
        match &self.stats {
            Some(stats) => stats.apply_sequence(seq),
            None => Ok(seq.clone()),
        }
    }
}

fn hp_key<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("hyperparameter key serializes")
}

/// Train (or fetch from cache) the first-tier artifacts `model` needs, on the
/// samples `part_ids` of `ds`. `seed_base` must be derived independently of
/// any label content (run seed plus partition index only).
fn fit_extractor(
    model: ModelId,
    ds: &Dataset,
    part_ids: &[usize],
    hp: &Hp,
    seed_base: u64,
    partition_tag: &str,
    cache: &mut Option<&mut ExtractorCache>,
) -> Result<Extractor> {
    let trained_on: BTreeSet<usize> = part_ids.iter().copied().collect();
    let needs_rf = matches!(model, ModelId::EnsHmm | ModelId::EnsLstm);
    let needs_hmm = matches!(model, ModelId::EnsHmm | ModelId::HybHmm);
    let needs_lstm = matches!(
        model,
        ModelId::EnsLstm | ModelId::HybLstm | ModelId::HybLstmA
    );
    let ds_hash = if cache.is_some() {
        ds.content_hash()
    } else {
        String::new()
    };

    let rf_static = if needs_rf {
        let seed = rng::derive_seed(seed_base, "rf-tier1", 0);
        let key = format!("{ds_hash}|{partition_tag}|rf|{}|{seed}", hp.rf_trees);
        let cached = cache.as_ref().and_then(|c| c.rf.get(&key).cloned());
        let forest = match cached {
            Some(f) => f,
            None => {
                let rows: Vec<Vec<f64>> = part_ids
                    .iter()
                    .map(|&i| ds.samples()[i].statics.clone())
                    .collect();
                let labels = labels_of(ds, part_ids);
                let f = Arc::new(forest::rf_fit(&rows, &labels, hp.rf_trees, seed)?);
                if let Some(c) = cache.as_mut() {
                    c.rf.insert(key, f.clone());
                }
                f
            }
        };
        Some(forest)
    } else {
        None
    };

    let hmm = if needs_hmm {
        let seed = rng::derive_seed(seed_base, "hmm", 0);
        let key = format!(
            "{ds_hash}|{partition_tag}|hmm|{}|{seed}",
            hp_key(&(hp.hmm_states, hp.hmm_iters, hp.standardize_hmm))
        );
        let cached = cache.as_ref().and_then(|c| c.hmm.get(&key).cloned());
        let artifact = match cached {
            Some(a) => a,
            None => {
                let mut seqs = sequences_of(ds, part_ids);
                let labels = labels_of(ds, part_ids);
                let stats = if hp.standardize_hmm {
                    let s = ChannelStats::fit_sequences(&seqs)?;
                    seqs = seqs
                        .iter()
                        .map(|q| s.apply_sequence(q))
                        .collect::<Result<Vec<_>>>()?;
                    Some(s)
                } else {
                    None
                };
                let paired = PairedHmm::fit(&seqs, &labels, hp.hmm_states, hp.hmm_iters, seed)?;
                let a = Arc::new(HmmArtifact { paired, stats });
                if let Some(c) = cache.as_mut() {
                    c.hmm.insert(key, a.clone());
                }
                a
            }
        };
        Some(artifact)
    } else {
        None
    };

    let lstm = if needs_lstm {
        let seed = rng::derive_seed(seed_base, "lstm", 0);
        let key = format!(
            "{ds_hash}|{partition_tag}|lstm|{}|{seed}",
            hp_key(&(
                hp.lstm_units,
                hp.lstm_dropout,
                hp.lstm_batch,
                hp.lstm_epochs,
                hp.lstm_learning_rate,
                hp.lstm_clip_norm,
                hp.standardize_lstm,
            ))
        );
        let cached = cache.as_ref().and_then(|c| c.lstm.get(&key).cloned());
        let artifact = match cached {
            Some(a) => a,
            None => {
                let mut seqs = sequences_of(ds, part_ids);
                let labels = labels_of(ds, part_ids);
                let stats = if hp.standardize_lstm {
                    let s = ChannelStats::fit_sequences(&seqs)?;
                    seqs = seqs
                        .iter()
                        .map(|q| s.apply_sequence(q))
                        .collect::<Result<Vec<_>>>()?;
                    Some(s)
                } else {
                    None
                };
                let paired = PairedLstm::fit(&seqs, &labels, &hp.lstm_config(seed))?;
                let a = Arc::new(LstmArtifact { paired, stats });
                if let Some(c) = cache.as_mut() {
                    c.lstm.insert(key, a.clone());
                }
                a
            }
        };
        Some(artifact)
    } else {
        None
    };

    Ok(Extractor {
        trained_on,
        rf_static,
        hmm,
        lstm,
    })
}

/// One enriched sample: features, label, and provenance.
#[derive(Debug, Clone)]
pub struct EnrichedRow {
    pub sample_id: usize,
    /// Index of the extractor that produced the appended features.
    pub extractor_index: usize,
    pub features: Vec<f64>,
    pub label: ClassLabel,
}

/// Enriched feature set with per-row extractor provenance.
#[derive(Debug, Clone)]
pub struct EnrichedSet {
    pub rows: Vec<EnrichedRow>,
    pub layout: FeatureLayout,
    /// Training ids of each extractor, indexed by `extractor_index`.
    pub extractor_train_ids: Vec<BTreeSet<usize>>,
}

impl EnrichedSet {
    /// Structural leakage audit: no row was enriched by an extractor that
    /// trained on it.
    pub fn assert_leakage_free(&self) -> Result<()> {
        for row in &self.rows {
            if self.extractor_train_ids[row.extractor_index].contains(&row.sample_id) {
                return Err(Error::Leakage(format!(
                    "sample {} enriched by extractor {}",
                    row.sample_id, row.extractor_index
                )));
            }
        }
        Ok(())
    }
}

fn enrich_rows(
    model: ModelId,
    ds: &Dataset,
    ids: &[usize],
    id_offset: usize,
    extractor: &Extractor,
    extractor_index: usize,
    hp: &Hp,
) -> Result<(Vec<EnrichedRow>, FeatureLayout)> {
    let built: Vec<(Vec<f64>, FeatureLayout, usize, ClassLabel)> = ids
        .par_iter()
        .map(|&i| {
            let sample = &ds.samples()[i];
            let (features, layout) =
                build_features(model, sample, i + id_offset, Some(extractor), hp)?;
            Ok((features, layout, i + id_offset, sample.label))
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = built
        .first()
        .map(|(_, l, _, _)| l.clone())
        .unwrap_or_default();
    let rows = built
        .into_iter()
        .map(|(features, _, sample_id, label)| EnrichedRow {
            sample_id,
            extractor_index,
            features,
            label,
        })
        .collect();
    Ok((rows, layout))
}

/// Out-of-fold enrichment: each chunk is enriched by an extractor trained on
/// all other chunks, so the whole dataset gains features without bias. The
/// plan must come from [`crate::data::make_folds`] over `dataset`.
pub fn enrich_cv(
    dataset: &Dataset,
    plan: &SplitPlan,
    model: ModelId,
    hp: &Hp,
    seed: u64,
    mut cache: Option<&mut ExtractorCache>,
) -> Result<EnrichedSet> {
    if !model.is_enriched() {
        return Err(Error::Config(format!(
            "model {} does not use enrichment",
            model.name()
        )));
    }
    if plan.assignments.len() != dataset.len() {
        return Err(Error::Dimension(format!(
            "plan covers {} samples, dataset has {}",
            plan.assignments.len(),
            dataset.len()
        )));
    }
    let k = plan.n_parts;
    let mut rows: Vec<Option<EnrichedRow>> = vec![None; dataset.len()];
    let mut layout = Vec::new();
    let mut extractor_train_ids = Vec::with_capacity(k);
    for fold in 0..k {
        let train_ids = plan.complement(fold);
        let fold_seed = rng::derive_seed(seed, "cv-extract", fold as u64);
        let tag = format!("cv{fold}of{k}");
        let extractor = fit_extractor(model, dataset, &train_ids, hp, fold_seed, &tag, &mut cache)?;
        let chunk_ids = plan.part(fold);
        let (chunk_rows, chunk_layout) =
            enrich_rows(model, dataset, &chunk_ids, 0, &extractor, fold, hp)?;
        layout = chunk_layout;
        for row in chunk_rows {
            let id = row.sample_id;
            rows[id] = Some(row);
        }
        extractor_train_ids.push(extractor.trained_on);
    }
    let rows: Vec<EnrichedRow> = rows
        .into_iter()
        .map(|r| r.ok_or_else(|| Error::Stratification("plan does not cover dataset".to_string())))
        .collect::<Result<Vec<_>>>()?;
    let set = EnrichedSet {
        rows,
        layout,
        extractor_train_ids,
    };
    set.assert_leakage_free()?;
    Ok(set)
}

fn accuracy_of(predictions: &[ClassLabel], truth: &[ClassLabel]) -> f64 {
    let correct = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    correct as f64 / truth.len() as f64
}

// Fit a stand-alone model (ids 1-7) on `train` and predict `test`.
fn standard_fit_predict(
    model: ModelId,
    train: &Dataset,
    test: &Dataset,
    hp: &Hp,
    seed: u64,
) -> Result<(Vec<ClassLabel>, FeatureLayout)> {
    let train_ids: Vec<usize> = (0..train.len()).collect();
    let test_ids: Vec<usize> = (0..test.len()).collect();
    match model {
        ModelId::RfS | ModelId::RfD | ModelId::RfSd => {
            let mut layout = Vec::new();
            let mut rows = Vec::with_capacity(train.len());
            for s in train.samples() {
                let (row, l) = build_features(model, s, 0, None, hp)?;
                layout = l;
                rows.push(row);
            }
            let labels: Vec<ClassLabel> = train.samples().iter().map(|s| s.label).collect();
            let forest =
                forest::rf_fit(&rows, &labels, hp.rf_trees, rng::derive_seed(seed, "rf", 0))?;
            let preds = test
                .samples()
                .par_iter()
                .map(|s| {
                    let (row, _) = build_features(model, s, 0, None, hp)?;
                    forest.predict(&row)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((preds, layout))
        }
        ModelId::HmmD | ModelId::HmmSd => {
            let (mut train_seqs, layout) = sequences_for_model(model, train, &train_ids)?;
            let (mut test_seqs, _) = sequences_for_model(model, test, &test_ids)?;
            if hp.standardize_hmm {
                let stats = ChannelStats::fit_sequences(&train_seqs)?;
                train_seqs = train_seqs
                    .iter()
                    .map(|q| stats.apply_sequence(q))
                    .collect::<Result<Vec<_>>>()?;
                test_seqs = test_seqs
                    .iter()
                    .map(|q| stats.apply_sequence(q))
                    .collect::<Result<Vec<_>>>()?;
            }
            let labels: Vec<ClassLabel> = train.samples().iter().map(|s| s.label).collect();
            let paired = PairedHmm::fit(
                &train_seqs,
                &labels,
                hp.hmm_states,
                hp.hmm_iters,
                rng::derive_seed(seed, "hmm", 0),
            )?;
            let preds = test_seqs
                .par_iter()
                .map(|q| paired.classify(q))
                .collect::<Result<Vec<_>>>()?;
            Ok((preds, layout))
        }
        ModelId::LstmD | ModelId::LstmSd => {
            let (mut train_seqs, layout) = sequences_for_model(model, train, &train_ids)?;
            let (mut test_seqs, _) = sequences_for_model(model, test, &test_ids)?;
            if hp.standardize_lstm {
                let stats = ChannelStats::fit_sequences(&train_seqs)?;
                train_seqs = train_seqs
                    .iter()
                    .map(|q| stats.apply_sequence(q))
                    .collect::<Result<Vec<_>>>()?;
                test_seqs = test_seqs
                    .iter()
                    .map(|q| stats.apply_sequence(q))
                    .collect::<Result<Vec<_>>>()?;
            }
            let labels: Vec<ClassLabel> = train.samples().iter().map(|s| s.label).collect();
            let paired = PairedLstm::fit(
                &train_seqs,
                &labels,
                &hp.lstm_config(rng::derive_seed(seed, "lstm", 0)),
            )?;
            let preds = test_seqs
                .par_iter()
                .map(|q| paired.classify(q))
                .collect::<Result<Vec<_>>>()?;
            Ok((preds, layout))
        }
        enriched => Err(Error::Config(format!(
            "model {} is not stand-alone",
            enriched.name()
        ))),
    }
}

fn check_compatible(train: &Dataset, test: &Dataset) -> Result<()> {
    if train.n_s() != test.n_s() || train.n_d() != test.n_d() || train.l_d() != test.l_d() {
        return Err(Error::Dimension(format!(
            "train is {}s/{}d/{} steps but test is {}s/{}d/{} steps",
            train.n_s(),
            train.n_d(),
            train.l_d(),
            test.n_s(),
            test.n_d(),
            test.l_d()
        )));
    }
    Ok(())
}

/// Train/test evaluation of one model. Stand-alone models fit on the whole
/// training set; enriched models split it into halves A and B, train the
/// extractors on A, enrich B and the test set, and fit the second-tier
/// forest on enriched B.
pub fn train_traintest(
    model: ModelId,
    train: &Dataset,
    test: &Dataset,
    dataset_name: &str,
    hp: &Hp,
    seed: u64,
    mut cache: Option<&mut ExtractorCache>,
) -> Result<EvalReport> {
    check_compatible(train, test)?;
    let started = Instant::now();
    let eff = model.dealias(train.static_source());
    let truth: Vec<ClassLabel> = test.samples().iter().map(|s| s.label).collect();

    let (predictions, layout) = if !eff.is_enriched() {
        standard_fit_predict(eff, train, test, hp, seed)?
    } else {
        let plan = data::split_ab(train, rng::derive_seed(seed, "split", 0))?;
        let a_ids = plan.part(0);
        let b_ids = plan.part(1);
        let extractor = fit_extractor(eff, train, &a_ids, hp, seed, "A", &mut cache)?;

        let (b_rows, layout) = enrich_rows(eff, train, &b_ids, 0, &extractor, 0, hp)?;
        // Test ids live past the training set so they can never collide with
        // the extractor's training ids.
        let test_ids: Vec<usize> = (0..test.len()).collect();
        let (test_rows, _) = enrich_rows(eff, test, &test_ids, train.len(), &extractor, 0, hp)?;

        let x_b: Vec<Vec<f64>> = b_rows.iter().map(|r| r.features.clone()).collect();
        let y_b: Vec<ClassLabel> = b_rows.iter().map(|r| r.label).collect();
        let second_tier = forest::rf_fit(&x_b, &y_b, hp.rf_trees, rng::derive_seed(seed, "rf", 0))?;
        let preds = test_rows
            .iter()
            .map(|r| second_tier.predict(&r.features))
            .collect::<Result<Vec<_>>>()?;
        (preds, layout)
    };

    let accuracy = accuracy_of(&predictions, &truth);
    Ok(EvalReport {
        model_index: model.index(),
        model_name: model.name().to_string(),
        dataset: dataset_name.to_string(),
        protocol: Protocol::TrainTest.label(),
        accuracy,
        fold_accuracies: vec![accuracy],
        seed,
        hp: hp.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
        feature_layout: layout,
        predictions,
    })
}

/// Cross-validation evaluation. Enriched models first gain out-of-fold
/// features via [`enrich_cv`], then the second tier runs standard k-fold on
/// exactly the same chunks; the reported accuracy is the unweighted fold
/// mean.
pub fn train_cv(
    model: ModelId,
    dataset: &Dataset,
    dataset_name: &str,
    k: usize,
    hp: &Hp,
    seed: u64,
    cache: Option<&mut ExtractorCache>,
) -> Result<EvalReport> {
    let started = Instant::now();
    let eff = model.dealias(dataset.static_source());
    let plan = data::make_folds(dataset, k, rng::derive_seed(seed, "split", 0))?;
    let mut predictions: Vec<Option<ClassLabel>> = vec![None; dataset.len()];
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut layout = Vec::new();

    if !eff.is_enriched() {
        for fold in 0..k {
            let train = dataset.subset(&plan.complement(fold));
            let test_ids = plan.part(fold);
            let test = dataset.subset(&test_ids);
            let fold_seed = rng::derive_seed(seed, "cv-fold", fold as u64);
            let (preds, l) = standard_fit_predict(eff, &train, &test, hp, fold_seed)?;
            layout = l;
            let truth: Vec<ClassLabel> = test.samples().iter().map(|s| s.label).collect();
            fold_accuracies.push(accuracy_of(&preds, &truth));
            for (id, p) in test_ids.iter().zip(preds) {
                predictions[*id] = Some(p);
            }
        }
    } else {
        let enriched = enrich_cv(dataset, &plan, eff, hp, seed, cache)?;
        layout = enriched.layout.clone();
        for fold in 0..k {
            let train_ids = plan.complement(fold);
            let test_ids = plan.part(fold);
            let x: Vec<Vec<f64>> = train_ids
                .iter()
                .map(|&i| enriched.rows[i].features.clone())
                .collect();
            let y: Vec<ClassLabel> = train_ids.iter().map(|&i| enriched.rows[i].label).collect();
            let second_tier = forest::rf_fit(&x, &y, hp.rf_trees, rng::derive_seed(seed, "rf", 0))?;
            let mut correct = 0usize;
            for &i in &test_ids {
                let p = second_tier.predict(&enriched.rows[i].features)?;
                if p == enriched.rows[i].label {
                    correct += 1;
                }
                predictions[i] = Some(p);
            }
            fold_accuracies.push(correct as f64 / test_ids.len() as f64);
        }
    }

    let accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(EvalReport {
        model_index: model.index(),
        model_name: model.name().to_string(),
        dataset: dataset_name.to_string(),
        protocol: Protocol::Cv(k).label(),
        accuracy,
        fold_accuracies,
        seed,
        hp: hp.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
        feature_layout: layout,
        predictions: predictions.into_iter().map(|p| p.unwrap()).collect(),
    })
}

/// Evaluate several models under one protocol with shared seeds and a shared
/// extractor cache. Per-model failures are reported without aborting the
/// remaining models.
pub fn evaluate_all(
    dataset: &Dataset,
    dataset_name: &str,
    models: &[ModelId],
    hp: &Hp,
    protocol: Protocol,
    seed: u64,
) -> Vec<(ModelId, Result<EvalReport>)> {
    let mut cache = ExtractorCache::default();
    let mut out = Vec::with_capacity(models.len());
    match protocol {
        Protocol::TrainTest => {
            let split = match data::split_train_test(
                dataset,
                rng::derive_seed(seed, "protocol-split", 0),
            ) {
                Ok(plan) => plan,
                Err(e) => {
                    let msg = e.to_string();
                    return models
                        .iter()
                        .map(|&m| (m, Err(Error::Stratification(msg.clone()))))
                        .collect();
                }
            };
            let train = dataset.subset(&split.part(0));
            let test = dataset.subset(&split.part(1));
            for &model in models {
                let report = train_traintest(
                    model,
                    &train,
                    &test,
                    dataset_name,
                    hp,
                    seed,
                    Some(&mut cache),
                );
                out.push((model, report));
            }
        }
        Protocol::Cv(k) => {
            for &model in models {
                let report = train_cv(model, dataset, dataset_name, k, hp, seed, Some(&mut cache));
                out.push((model, report));
            }
        }
    }
    out
}

/// Render evaluation outcomes as the reports CSV
/// (`id,name,accuracy,n_folds,seed,wall_time_s`); failed models are omitted
/// (they are reported through the error record instead).
pub fn reports_to_csv(outcomes: &[(ModelId, Result<EvalReport>)]) -> String {
    let mut out = String::from("id,name,accuracy,n_folds,seed,wall_time_s\n");
    for (model, report) in outcomes {
        if let Ok(r) = report {
            out.push_str(&format!(
                "{},{},{:.6},{},{},{:.3}\n",
                model.index(),
                model.name(),
                r.accuracy,
                r.fold_accuracies.len(),
                r.seed,
                r.wall_time_s
            ));
        }
    }
    out
}

/// Plain-text summary table of evaluation outcomes.
pub fn summary_table(outcomes: &[(ModelId, Result<EvalReport>)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>3}  {:<10} {:>9}  {:>7}  {}\n",
        "id", "name", "accuracy", "time_s", "status"
    ));
    for (model, report) in outcomes {
        match report {
            Ok(r) => out.push_str(&format!(
                "{:>3}  {:<10} {:>9.4}  {:>7.1}  ok\n",
                model.index(),
                model.name(),
                r.accuracy,
                r.wall_time_s
            )),
            Err(e) => out.push_str(&format!(
                "{:>3}  {:<10} {:>9}  {:>7}  error: {e}\n",
                model.index(),
                model.name(),
                "-",
                "-"
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::GaussianHmm;
    use crate::lstm::LstmNet;
    use ndarray::array;
    use rand::Rng;

    fn unit_hmm(n_d: usize) -> GaussianHmm {
        GaussianHmm {
            initial: vec![1.0],
            transition: array![[1.0]],
            means: Array2::zeros((1, n_d)),
            variances: Array2::from_elem((1, n_d), 1.0),
        }
    }

    fn sample_with(n_s: usize, n_d: usize, l_d: usize) -> Sample {
        Sample {
            statics: (0..n_s).map(|i| i as f64 * 0.1).collect(),
            dynamics: Array2::from_shape_fn((n_d, l_d), |(c, t)| (c + t) as f64 * 0.05),
            label: ClassLabel::Pos,
        }
    }

    fn hmm_extractor(n_d: usize, trained_on: &[usize]) -> Extractor {
        Extractor {
            trained_on: trained_on.iter().copied().collect(),
            rf_static: None,
            hmm: Some(Arc::new(HmmArtifact {
                paired: PairedHmm {
                    pos: unit_hmm(n_d),
                    neg: unit_hmm(n_d),
                },
                stats: None,
            })),
            lstm: None,
        }
    }

    fn lstm_extractor(n_units: usize, n_d: usize, trained_on: &[usize]) -> Extractor {
        Extractor {
            trained_on: trained_on.iter().copied().collect(),
            rf_static: None,
            hmm: None,
            lstm: Some(Arc::new(LstmArtifact {
                paired: PairedLstm {
                    pos: LstmNet::zeroed(n_units, n_d),
                    neg: LstmNet::zeroed(n_units, n_d),
                },
                stats: None,
            })),
        }
    }

    #[test]
    fn default_hyperparameters_pin_reference_values() {
        let hp = Hp::default();
        assert_eq!(hp.rf_trees, 500);
        assert_eq!(hp.hmm_iters, 50);
        assert_eq!(hp.lstm_batch, 1);
        assert_eq!(hp.lstm_dropout, 0.0);
    }

    #[test]
    fn model_id_round_trips() {
        for (i, &m) in ModelId::ALL.iter().enumerate() {
            assert_eq!(m.index(), i + 1);
            assert_eq!(ModelId::from_index(i + 1).unwrap(), m);
        }
        assert!(ModelId::from_index(0).is_err());
        assert!(ModelId::from_index(13).is_err());
    }

    #[test]
    fn dealias_collapses_bimodal_models() {
        let s = StaticSource::SpatializedDynamic;
        assert_eq!(ModelId::RfSd.dealias(s), ModelId::RfS);
        assert_eq!(ModelId::HmmSd.dealias(s), ModelId::HmmD);
        assert_eq!(ModelId::LstmSd.dealias(s), ModelId::LstmD);
        assert_eq!(ModelId::HybHmm.dealias(s), ModelId::HybHmm);
        assert_eq!(
            ModelId::RfSd.dealias(StaticSource::Independent),
            ModelId::RfSd
        );
    }

    #[test]
    fn hybrid_hmm_features_have_width_ns_plus_one() {
        let sample = sample_with(320, 2, 6);
        let ex = hmm_extractor(2, &[5, 6]);
        let (features, layout) =
            build_features(ModelId::HybHmm, &sample, 0, Some(&ex), &Hp::default()).unwrap();
        assert_eq!(features.len(), 321);
        assert_eq!(
            layout,
            vec![(FeatureGroup::Static, 320), (FeatureGroup::RatioHmm, 1)]
        );
        // Identical pos and neg models: the appended ratio is exactly zero.
        assert_eq!(features[320], 0.0);
    }

    #[test]
    fn activations_hybrid_width_is_ns_plus_units() {
        let sample = sample_with(10, 2, 6);
        let ex = lstm_extractor(128, 2, &[1]);
        let (features, layout) =
            build_features(ModelId::HybLstmA, &sample, 0, Some(&ex), &Hp::default()).unwrap();
        assert_eq!(features.len(), 138);
        assert_eq!(layout[1], (FeatureGroup::ActivationsLstm, 128));

        let hp_both = Hp {
            activation_source: ActivationSource::BothConcatenated,
            ..Hp::default()
        };
        let (features, _) =
            build_features(ModelId::HybLstmA, &sample, 0, Some(&ex), &hp_both).unwrap();
        assert_eq!(features.len(), 10 + 256);
    }

    #[test]
    fn enriched_features_reject_overlapping_extractor() {
        let sample = sample_with(3, 2, 6);
        let ex = hmm_extractor(2, &[0, 1, 2]);
        let err = build_features(ModelId::HybHmm, &sample, 1, Some(&ex), &Hp::default());
        assert!(matches!(err, Err(Error::Leakage(_))));
    }

    #[test]
    fn generative_models_have_no_feature_vector() {
        let sample = sample_with(3, 2, 6);
        for model in [
            ModelId::HmmD,
            ModelId::LstmD,
            ModelId::HmmSd,
            ModelId::LstmSd,
        ] {
            assert!(matches!(
                build_features(model, &sample, 0, None, &Hp::default()),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn raw_feature_layouts_match_table() {
        let sample = sample_with(3, 2, 4);
        let hp = Hp::default();
        let (f1, l1) = build_features(ModelId::RfS, &sample, 0, None, &hp).unwrap();
        assert_eq!(f1.len(), 3);
        assert_eq!(l1, vec![(FeatureGroup::Static, 3)]);
        let (f4, l4) = build_features(ModelId::RfD, &sample, 0, None, &hp).unwrap();
        assert_eq!(f4.len(), 8);
        assert_eq!(l4, vec![(FeatureGroup::Dynamic, 8)]);
        let (f5, l5) = build_features(ModelId::RfSd, &sample, 0, None, &hp).unwrap();
        assert_eq!(f5.len(), 11);
        assert_eq!(
            l5,
            vec![(FeatureGroup::Static, 3), (FeatureGroup::Dynamic, 8)]
        );
        // Concatenation order: statics first, then the spatialized dynamics.
        assert_eq!(&f5[..3], f1.as_slice());
        assert_eq!(&f5[3..], f4.as_slice());
    }

    fn two_level_dataset(n: usize, n_s: usize, n_d: usize, l_d: usize, seed: u64) -> Dataset {
        // Statics and dynamics both separate the classes.
        let mut r = rng::stream_rng(seed, "pipeline-test-data", 0);
        let samples = (0..n)
            .map(|i| {
                let label = if i % 2 == 0 {
                    ClassLabel::Pos
                } else {
                    ClassLabel::Neg
                };
                let level = if label == ClassLabel::Pos { 1.0 } else { -1.0 };
                Sample {
                    statics: (0..n_s)
                        .map(|_| level + r.random::<f64>() * 0.4 - 0.2)
                        .collect(),
                    dynamics: Array2::from_shape_fn((n_d, l_d), |_| {
                        level + r.random::<f64>() * 0.8 - 0.4
                    }),
                    label,
                }
            })
            .collect();
        Dataset::new(samples, n_s, n_d, l_d, "T", "F").unwrap()
    }

    #[test]
    fn traintest_reports_all_model_kinds() {
        let train = two_level_dataset(40, 2, 1, 6, 1);
        let test = two_level_dataset(20, 2, 1, 6, 2);
        let hp = Hp {
            rf_trees: 25,
            lstm_units: 4,
            lstm_epochs: 3,
            hmm_states: 2,
            hmm_iters: 10,
            ..Hp::default()
        };
        for model in [
            ModelId::RfS,
            ModelId::HmmD,
            ModelId::EnsHmm,
            ModelId::HybHmm,
        ] {
            let report = train_traintest(model, &train, &test, "toy", &hp, 7, None).unwrap();
            assert_eq!(report.model_index, model.index());
            assert!(
                report.accuracy >= 0.8,
                "{}: {}",
                model.name(),
                report.accuracy
            );
            assert_eq!(report.predictions.len(), test.len());
            assert_eq!(
                report.feature_groups(),
                model.expected_feature_sets().iter().copied().collect()
            );
        }
    }

    #[test]
    fn traintest_is_reproducible() {
        let train = two_level_dataset(30, 2, 1, 6, 3);
        let test = two_level_dataset(16, 2, 1, 6, 4);
        let hp = Hp {
            rf_trees: 15,
            hmm_states: 2,
            hmm_iters: 10,
            ..Hp::default()
        };
        let a = train_traintest(ModelId::HybHmm, &train, &test, "toy", &hp, 5, None).unwrap();
        let b = train_traintest(ModelId::HybHmm, &train, &test, "toy", &hp, 5, None).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.predictions, b.predictions);
    }

    #[test]
    fn cv_reports_k_folds_and_mean() {
        let ds = two_level_dataset(40, 2, 1, 6, 5);
        let hp = Hp {
            rf_trees: 15,
            hmm_states: 2,
            hmm_iters: 10,
            ..Hp::default()
        };
        let report = train_cv(ModelId::HybHmm, &ds, "toy", 5, &hp, 11, None).unwrap();
        assert_eq!(report.fold_accuracies.len(), 5);
        let mean = report.fold_accuracies.iter().sum::<f64>() / 5.0;
        assert!((report.accuracy - mean).abs() < 1e-12);
        assert_eq!(report.predictions.len(), ds.len());

        // k = 2 is the A/B protocol with the roles swapped per fold.
        let report2 = train_cv(ModelId::HybHmm, &ds, "toy", 2, &hp, 11, None).unwrap();
        assert_eq!(report2.fold_accuracies.len(), 2);
    }

    #[test]
    fn cv_enrichment_ignores_chunk_labels() {
        // Permuting the labels inside one chunk must not change that chunk's
        // enriched features (its extractor never saw the chunk).
        let ds = two_level_dataset(30, 2, 1, 6, 6);
        let hp = Hp {
            rf_trees: 10,
            hmm_states: 2,
            hmm_iters: 10,
            ..Hp::default()
        };
        let plan = data::make_folds(&ds, 5, 99).unwrap();
        let baseline = enrich_cv(&ds, &plan, ModelId::HybHmm, &hp, 3, None).unwrap();

        let chunk = plan.part(2);
        let mut samples: Vec<Sample> = ds.samples().to_vec();
        for ids in chunk.windows(2) {
            let tmp = samples[ids[0]].label;
            samples[ids[0]].label = samples[ids[1]].label;
            samples[ids[1]].label = tmp;
        }
        let permuted = Dataset::new(samples, 2, 1, 6, "T", "F").unwrap();
        let flipped = enrich_cv(&permuted, &plan, ModelId::HybHmm, &hp, 3, None).unwrap();
        for &i in &chunk {
            let a = &baseline.rows[i].features;
            let b = &flipped.rows[i].features;
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn evaluate_all_handles_empty_and_errors() {
        let ds = two_level_dataset(24, 2, 1, 6, 7);
        let hp = Hp {
            rf_trees: 10,
            hmm_states: 2,
            hmm_iters: 5,
            ..Hp::default()
        };
        let none = evaluate_all(&ds, "toy", &[], &hp, Protocol::TrainTest, 1);
        assert!(none.is_empty());

        let outcomes = evaluate_all(
            &ds,
            "toy",
            &[ModelId::RfS, ModelId::HybHmm],
            &hp,
            Protocol::TrainTest,
            1,
        );
        assert_eq!(outcomes.len(), 2);
        assert!(outcomes.iter().all(|(_, r)| r.is_ok()));
        let csv = reports_to_csv(&outcomes);
        assert!(csv.starts_with("id,name,accuracy,n_folds,seed,wall_time_s"));
        assert_eq!(csv.lines().count(), 3);
    }
}
