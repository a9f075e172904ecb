//! Question sets, augmentation, answering, cross-validation,
//! prototypicality, holistic training questions and the synthetic benchmark.

pub mod ablation;
pub mod eval;
pub mod holistic;
pub mod question;
pub mod synthetic;

pub use ablation::{run_ablation, write_ablation_csv, AblationInput, AblationRow, BLOCK_SUBSETS};
pub use eval::{
    accuracy, answer_question, argmax, assign_folds, choice_probabilities, cross_validate, evaluate_prototypicality,
    prototypicality_scores, spearman, train_model, CvReport, FeatureTable, PrototypicalityReport, TupleFeatures,
};
pub use holistic::{generate_holistic_questions, HolisticQuestions};
pub use question::{
    expand_analogy_symmetries, make_fourteen_choice, make_ten_choice, read_paradigms, read_questions,
    shuffle_analogy, shuffle_paraphrase, write_jsonl, LabeledTuple, ParadigmSet, Question, QuestionKind, Rating,
};
pub use synthetic::{generate_synthetic_benchmark, SyntheticBenchmark, SyntheticParams};
