use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::question::{LabeledTuple, ParadigmSet, Question};
use crate::classifier::{Model, SvmConfig, TrainSet};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FeatureVector, Featurizer};

/// Anything that maps a tuple to a feature vector under a fixed spec.
pub trait TupleFeatures: Sync {
    fn spec(&self) -> &FeatureSpec;
    fn features(&self, tuple: &[String]) -> Result<FeatureVector>;

    fn fingerprint(&self) -> String {
        self.spec().fingerprint()
    }
}

impl TupleFeatures for Featurizer<'_> {
    fn spec(&self) -> &FeatureSpec {
        Featurizer::spec(self)
    }

    fn features(&self, tuple: &[String]) -> Result<FeatureVector> {
        self.featurize(tuple)
    }
}

/// Precomputed vectors for a closed set of tuples.
///
/// Cross-validation and ablation featurize each tuple once and then look
/// vectors up, or project them onto a smaller spec.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    spec: FeatureSpec,
    vectors: HashMap<Vec<String>, FeatureVector>,
}

impl FeatureTable {
    pub fn from_map(spec: FeatureSpec, vectors: HashMap<Vec<String>, FeatureVector>) -> Result<Self> {
        let len = spec.len();
        if let Some(v) = vectors.values().find(|v| v.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                got: v.len(),
            });
        }
        Ok(FeatureTable { spec, vectors })
    }

    /// Featurizes every tuple any of `questions` can present or train on.
    pub fn for_questions(source: &dyn TupleFeatures, questions: &[Question]) -> Result<Self> {
        let mut tuples: HashSet<Vec<String>> = HashSet::new();
        for q in questions {
            tuples.extend(q.choice_tuples());
            tuples.extend(q.training_tuples().into_iter().map(|t| t.tuple));
        }
        let mut tuples: Vec<Vec<String>> = tuples.into_iter().collect();
        tuples.sort();
        let vectors = tuples
            .par_iter()
            .map(|t| source.features(t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_map(source.spec().clone(), tuples.into_iter().zip(vectors).collect())
    }

    /// The same tuples under `sub`, a column subset of this table's spec.
    pub fn project(&self, sub: &FeatureSpec) -> Result<FeatureTable> {
        let cols = self.spec.select_columns(sub)?;
        Ok(FeatureTable {
            spec: sub.clone(),
            vectors: self.vectors.iter().map(|(k, v)| (k.clone(), v.select(&cols))).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl TupleFeatures for FeatureTable {
    fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    fn features(&self, tuple: &[String]) -> Result<FeatureVector> {
        self.vectors
            .get(tuple)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("tuple {tuple:?} was not featurized")))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn check_tuple_size(features: &dyn TupleFeatures, q: &Question) -> Result<()> {
    let n = features.spec().n;
    if q.kind.tuple_size() != n {
        return Err(Error::InvalidInput(format!(
            "question {} ({}) needs {}-tuples, features are for {n}-tuples",
            q.id,
            q.kind,
            q.kind.tuple_size()
        )));
    }
    Ok(())
}

/// Calibrated probability of every presented choice.
pub fn choice_probabilities(model: &Model, features: &dyn TupleFeatures, q: &Question) -> Result<Vec<f64>> {
    model.check_fingerprint(&features.fingerprint())?;
    check_tuple_size(features, q)?;
    q.choice_tuples()
        .iter()
        .map(|t| model.predict_prob(features.features(t)?.as_slice()))
        .collect()
}

/// The presented choice with the highest probability.
pub fn answer_question(model: &Model, features: &dyn TupleFeatures, q: &Question) -> Result<usize> {
    let probs = choice_probabilities(model, features, q)?;
    Ok(argmax(&probs).expect("questions have choices"))
}

pub fn training_set(features: &dyn TupleFeatures, tuples: &[LabeledTuple]) -> Result<TrainSet> {
    let vectors = tuples
        .par_iter()
        .map(|t| features.features(&t.tuple).map(FeatureVector::into_inner))
        .collect::<Result<Vec<_>>>()?;
    TrainSet::new(vectors, tuples.iter().map(|t| t.label).collect())
}

/// Augments every question for its kind and trains one model on the lot.
pub fn train_model(questions: &[Question], features: &dyn TupleFeatures, config: &SvmConfig) -> Result<Model> {
    if questions.is_empty() {
        return Err(Error::InvalidInput("no training questions".into()));
    }
    for q in questions {
        check_tuple_size(features, q)?;
    }
    let tuples: Vec<LabeledTuple> = questions.iter().flat_map(Question::training_tuples).collect();
    let ts = training_set(features, &tuples)?;
    Model::train(&ts, config, &features.fingerprint())
}

/// Fraction of `questions` a model answers correctly.
pub fn accuracy(model: &Model, features: &dyn TupleFeatures, questions: &[Question]) -> Result<f64> {
    if questions.is_empty() {
        return Err(Error::InvalidInput("no questions".into()));
    }
    let correct = questions
        .par_iter()
        .map(|q| Ok(answer_question(model, features, q)? == q.solution_index()))
        .collect::<Result<Vec<bool>>>()?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / questions.len() as f64)
}

/// Fold of each question: a seeded permutation dealt round-robin.
pub fn assign_folds(n_questions: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n_questions {
        return Err(Error::InvalidInput(format!(
            "{folds} folds but only {n_questions} questions"
        )));
    }
    let mut order: Vec<usize> = (0..n_questions).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n_questions];
    for (pos, &q) in order.iter().enumerate() {
        fold[q] = pos % folds;
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub fold: usize,
    pub chosen: usize,
    pub solution: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train_questions: usize,
    pub n_train_tuples: usize,
    pub n_test: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub n_questions: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Expected accuracy of guessing uniformly among presented choices.
    pub baseline: f64,
    pub per_fold: Vec<FoldResult>,
    pub predictions: Vec<Prediction>,
}

pub fn random_baseline(questions: &[Question]) -> f64 {
    questions.iter().map(|q| 1.0 / q.kind.n_choices() as f64).sum::<f64>() / questions.len().max(1) as f64
}

/// Question-grouped k-fold cross-validation.
pub fn cross_validate(
    questions: &[Question],
    features: &dyn TupleFeatures,
    config: &SvmConfig,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let mut ids = HashSet::new();
    for q in questions {
        check_tuple_size(features, q)?;
        if !ids.insert(q.id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate question id {}", q.id)));
        }
    }
    let fold_of = assign_folds(questions.len(), folds, seed)?;

    let results = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<Question> = questions
                .iter()
                .zip(&fold_of)
                .filter(|(_, &f)| f != fold)
                .map(|(q, _)| q.clone())
                .collect();
            let test: Vec<&Question> = questions
                .iter()
                .zip(&fold_of)
                .filter(|(_, &f)| f == fold)
                .map(|(q, _)| q)
                .collect();
            let tuples: Vec<LabeledTuple> = train.iter().flat_map(Question::training_tuples).collect();
            let held_out: HashSet<&str> = test.iter().map(|q| q.id.as_str()).collect();
            assert!(
                tuples.iter().all(|t| !held_out.contains(t.group.as_str())),
                "fold {fold}: a question group spans train and test"
            );
            let ts = training_set(features, &tuples)?;
            let model = Model::train(&ts, config, &features.fingerprint())?;
            let predictions = test
                .iter()
                .map(|q| {
                    let chosen = answer_question(&model, features, q)?;
                    Ok(Prediction {
                        id: q.id.clone(),
                        fold,
                        chosen,
                        solution: q.solution_index(),
                        correct: chosen == q.solution_index(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let result = FoldResult {
                fold,
                n_train_questions: train.len(),
                n_train_tuples: tuples.len(),
                n_test: test.len(),
                correct: predictions.iter().filter(|p| p.correct).count(),
            };
            log::debug!("fold {fold}: {}/{}", result.correct, result.n_test);
            Ok((result, predictions))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_fold = Vec::with_capacity(folds);
    let mut by_id: HashMap<String, Prediction> = HashMap::new();
    for (r, preds) in results {
        per_fold.push(r);
        by_id.extend(preds.into_iter().map(|p| (p.id.clone(), p)));
    }
    let predictions: Vec<Prediction> = questions
        .iter()
        .map(|q| by_id.remove(&q.id).expect("every question is tested once"))
        .collect();
    let correct = predictions.iter().filter(|p| p.correct).count();
    Ok(CvReport {
        folds,
        seed,
        n_questions: questions.len(),
        correct,
        accuracy: correct as f64 / questions.len() as f64,
        baseline: random_baseline(questions),
        per_fold,
        predictions,
    })
}

/// Mean probability of `<x, y, p, q>` over the paradigm pairs `(p, q)`.
pub fn prototypicality_scores(
    model: &Model,
    features: &dyn TupleFeatures,
    pairs: &[[String; 2]],
    paradigms: &ParadigmSet,
) -> Result<Vec<f64>> {
    model.check_fingerprint(&features.fingerprint())?;
    if paradigms.pairs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "subcategory {} has no paradigm pairs",
            paradigms.subcategory
        )));
    }
    if features.spec().n != 4 {
        return Err(Error::InvalidInput("prototypicality needs 4-tuple features".into()));
    }
    pairs
        .par_iter()
        .map(|[x, y]| {
            let mut sum = 0.0;
            for [p, q] in &paradigms.pairs {
                let t = [x.clone(), y.clone(), p.clone(), q.clone()];
                sum += model.predict_prob(features.features(&t)?.as_slice())?;
            }
            Ok(sum / paradigms.pairs.len() as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubcategoryResult {
    pub subcategory: String,
    pub n_pairs: usize,
    /// `None` when either ranking is constant.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrototypicalityReport {
    pub per_subcategory: Vec<SubcategoryResult>,
    /// Mean over the subcategories where the correlation is defined.
    pub macro_spearman: f64,
}

/// Spearman between model scores and gold ratings, per subcategory.
pub fn evaluate_prototypicality(
    model: &Model,
    features: &dyn TupleFeatures,
    sets: &[ParadigmSet],
) -> Result<PrototypicalityReport> {
    let mut per_subcategory = Vec::new();
    for set in sets.iter().filter(|s| !s.ratings.is_empty()) {
        let pairs: Vec<[String; 2]> = set.ratings.iter().map(|r| r.pair.clone()).collect();
        let gold: Vec<f64> = set.ratings.iter().map(|r| r.score).collect();
        let scores = prototypicality_scores(model, features, &pairs, set)?;
        let rho = match spearman(&scores, &gold) {
            Ok(r) => Some(r),
            Err(Error::UndefinedCorrelation(_)) | Err(Error::InvalidInput(_)) => None,
            Err(e) => return Err(e),
        };
        per_subcategory.push(SubcategoryResult {
            subcategory: set.subcategory.clone(),
            n_pairs: pairs.len(),
            spearman: rho,
        });
    }
    let defined: Vec<f64> = per_subcategory.iter().filter_map(|s| s.spearman).collect();
    if defined.is_empty() {
        return Err(Error::UndefinedCorrelation("no subcategory has a defined correlation"));
    }
    Ok(PrototypicalityReport {
        macro_spearman: defined.iter().sum::<f64>() / defined.len() as f64,
        per_subcategory,
    })
}

/// 1-based ranks, ties sharing the average of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("spearman needs at least 2 points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spearman input"));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
