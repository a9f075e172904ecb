use std::io::Write;

use serde::Serialize;

use super::eval::{cross_validate, FeatureTable, TupleFeatures};
use super::question::{Question, QuestionKind};
use crate::classifier::SvmConfig;
use crate::error::{Error, Result};
use crate::features::{BlockSet, FeatureSpec};

/// Feature-block subsets compared in the block ablation, all blocks first.
pub const BLOCK_SUBSETS: [BlockSet; 10] = [
    BlockSet::new(true, true, true, true),
    BlockSet::new(false, true, true, true),
    BlockSet::new(true, false, true, true),
    BlockSet::new(true, true, false, true),
    BlockSet::new(true, true, true, false),
    BlockSet::new(true, false, false, false),
    BlockSet::new(false, true, false, false),
    BlockSet::new(false, false, true, false),
    BlockSet::new(false, false, false, true),
    BlockSet::new(false, false, true, true),
];

/// Every subset of the triple's PPMI pairs `<a,b>`, `<a,c>`, `<b,c>`,
/// largest first.
pub fn ppmi_pair_subsets() -> Vec<Vec<(usize, usize)>> {
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut masks: Vec<u8> = (0..8).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    masks
        .into_iter()
        .map(|m| (0..3).filter(|b| m & (1 << b) != 0).map(|b| PAIRS[b]).collect())
        .collect()
}

fn pair_label(pairs: &[(usize, usize)]) -> String {
    if pairs.is_empty() {
        return "none".into();
    }
    let name = |i: usize| ["a", "b", "c"][i];
    pairs
        .iter()
        .map(|&(i, j)| format!("{}{}", name(i), name(j)))
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    /// `blocks` or `ppmi_pairs`.
    pub experiment: &'static str,
    pub task: QuestionKind,
    pub config: String,
    pub n_features: usize,
    pub n_questions: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub baseline: f64,
}

pub struct AblationInput<'a> {
    /// Ten-choice analogy questions with features of their full spec.
    pub analogies: Option<(&'a [Question], &'a FeatureTable)>,
    /// Fourteen-choice paraphrase questions with features of their full spec.
    pub paraphrases: Option<(&'a [Question], &'a FeatureTable)>,
    pub svm: &'a SvmConfig,
    pub folds: usize,
    pub seed: u64,
}

fn run(
    experiment: &'static str,
    config: String,
    questions: &[Question],
    table: &FeatureTable,
    spec: &FeatureSpec,
    input: &AblationInput<'_>,
) -> Result<AblationRow> {
    let sub = table.project(spec)?;
    let report = cross_validate(questions, &sub, input.svm, input.folds, input.seed)?;
    log::info!("{experiment} {config} on {}: {:.3}", questions[0].kind, report.accuracy);
    Ok(AblationRow {
        experiment,
        task: questions[0].kind,
        config,
        n_features: spec.len(),
        n_questions: report.n_questions,
        correct: report.correct,
        accuracy: report.accuracy,
        baseline: report.baseline,
    })
}

/// Cross-validates every block subset on each supplied task, then every
/// PPMI pair subset on the paraphrase task.
///
/// Feature tables hold vectors of the full spec; each row projects them onto
/// its subset so nothing is featurized twice.
pub fn run_ablation(input: &AblationInput<'_>) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    let tasks = [input.analogies, input.paraphrases];
    for (questions, table) in tasks.into_iter().flatten() {
        if questions.is_empty() {
            return Err(Error::InvalidInput("ablation task without questions".into()));
        }
        for blocks in BLOCK_SUBSETS {
            let spec = FeatureSpec::new(questions[0].kind.tuple_size(), table.spec().grid.clone()).with_blocks(blocks);
            rows.push(run("blocks", blocks.to_string().replace(',', "+"), questions, table, &spec, input)?);
        }
    }
    if let Some((questions, table)) = input.paraphrases {
        for pairs in ppmi_pair_subsets() {
            let spec = FeatureSpec::new(3, table.spec().grid.clone()).with_ppmi_pairs(&pairs)?;
            rows.push(run("ppmi_pairs", pair_label(&pairs), questions, table, &spec, input)?);
        }
    }
    Ok(rows)
}

pub fn write_ablation_csv<W: Write>(w: &mut W, rows: &[AblationRow]) -> Result<()> {
    writeln!(w, "experiment,task,config,n_features,n_questions,correct,accuracy,baseline")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6},{:.6}",
            r.experiment, r.task, r.config, r.n_features, r.n_questions, r.correct, r.accuracy, r.baseline
        )?;
    }
    Ok(())
}
