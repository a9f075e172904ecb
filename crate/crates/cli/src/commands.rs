use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tuplesim::classifier::{Calibration, Model};
use tuplesim::corpus::Lexicon;
use tuplesim::features::Featurizer;
use tuplesim::spaces::{BuildOptions, SpaceBundle};
use tuplesim::tasks::{
    self, choice_probabilities, cross_validate, generate_holistic_questions,
    generate_synthetic_benchmark, make_fourteen_choice, make_ten_choice, read_paradigms, read_questions, run_ablation,
    train_model, write_ablation_csv, write_jsonl, AblationInput, FeatureTable, Question, QuestionKind, TupleFeatures,
};

use crate::config::{require, RunConfig};
use crate::Failure;

pub fn parse_calibration(s: &str) -> Result<Calibration, Failure> {
    if s == "training" {
        return Ok(Calibration::Training);
    }
    s.strip_prefix("cv:")
        .and_then(|k| k.parse().ok())
        .map(|folds| Calibration::CrossValidated { folds })
        .ok_or_else(|| Failure::usage(format!("calibration must be \"training\" or \"cv:K\", got {s:?}")))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))
}

fn provenance(cfg: &RunConfig, what: &str) -> String {
    format!("# tuplesim {} {what} config={}\n", env!("CARGO_PKG_VERSION"), cfg.to_json())
}

/// `<path>.<ext>` next to `path`.
fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::data(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_bundle(cfg: &RunConfig) -> Result<SpaceBundle, Failure> {
    let dir = require(&cfg.paths.spaces, "spaces")?;
    Ok(SpaceBundle::load(dir)?)
}

fn load_questions(path: &Path, expand: bool) -> Result<Vec<Question>, Failure> {
    let questions = read_questions(open(path)?)?;
    if questions.is_empty() {
        return Err(Failure::data(format!("{} holds no questions", path.display())));
    }
    let questions: Vec<Question> = if expand {
        questions
            .iter()
            .map(|q| match q.kind {
                QuestionKind::Analogy5 => make_ten_choice(q),
                QuestionKind::Paraphrase7 => make_fourteen_choice(q),
                _ => Ok(q.clone()),
            })
            .collect::<Result<_, _>>()?
    } else {
        questions
    };
    let n = questions[0].kind.tuple_size();
    if questions.iter().any(|q| q.kind.tuple_size() != n) {
        return Err(Failure::data(format!(
            "{} mixes analogy and paraphrase questions",
            path.display()
        )));
    }
    Ok(questions)
}

fn single_questions(cfg: &RunConfig) -> Result<Vec<Question>, Failure> {
    match cfg.paths.questions.as_slice() {
        [one] => load_questions(one, cfg.eval.expand),
        [] => Err(Failure::usage("missing questions path (flag or [paths] in config)")),
        _ => Err(Failure::usage("this mode takes exactly one question file")),
    }
}

pub fn build_spaces(cfg: &RunConfig) -> Result<(), Failure> {
    let corpus_path = require(&cfg.paths.corpus, "corpus")?;
    let lexicon = Lexicon::read_tsv(open(require(&cfg.paths.lexicon, "lexicon")?)?)?;
    let out = require(&cfg.paths.out, "output")?;
    let texts: Vec<String> = open(corpus_path)?.lines().collect::<Result<_, _>>()?;
    let opts = BuildOptions {
        rank: cfg.build.rank,
        verb_window: cfg.build.verb_window,
        grid: cfg.grid.clone(),
    };
    let bundle = SpaceBundle::build(&texts, lexicon, &opts)?;
    bundle.save(out)?;
    fs::write(out.join("run_config.toml"), cfg.to_toml())?;
    let m = &bundle.meta;
    println!(
        "spaces: {} terms, {} tokens, domain rank {}, function rank {} -> {}",
        m.n_terms,
        m.n_tokens,
        m.domain_rank,
        m.function_rank,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    fingerprint: &'a str,
    n_features: usize,
    n_questions: usize,
    n_tuples: usize,
    n_support: usize,
    /// Training tuples on the right side of the decision boundary.
    tuple_accuracy: f64,
    /// Training questions answered correctly.
    question_accuracy: f64,
    platt: (f64, f64),
    config: &'a RunConfig,
}

pub fn train(cfg: &RunConfig) -> Result<(), Failure> {
    let bundle = load_bundle(cfg)?;
    let questions = single_questions(cfg)?;
    let model_path = require(&cfg.paths.model, "model")?;
    let spec = cfg.feature_spec(questions[0].kind.tuple_size(), bundle.grid())?;
    let featurizer = Featurizer::new(&bundle, spec)?;
    let table = FeatureTable::for_questions(&featurizer, &questions)?;
    let model = train_model(&questions, &table, &cfg.svm)?;

    let tuples: Vec<_> = questions.iter().flat_map(Question::training_tuples).collect();
    let mut right = 0;
    for t in &tuples {
        let f = model.decision_value(table.features(&t.tuple)?.as_slice())?;
        right += usize::from((f > 0.0) == t.label);
    }
    let tuple_accuracy = right as f64 / tuples.len() as f64;
    let question_accuracy = tasks::accuracy(&model, &table, &questions)?;

    let mut w = create(model_path)?;
    model.write_to(&mut w)?;
    w.flush()?;
    write_json(
        &sidecar(model_path, "json"),
        &TrainSummary {
            fingerprint: model.fingerprint(),
            n_features: model.dim(),
            n_questions: questions.len(),
            n_tuples: tuples.len(),
            n_support: model.svm().n_support(),
            tuple_accuracy,
            question_accuracy,
            platt: model.platt(),
            config: cfg,
        },
    )?;
    println!(
        "trained on {} questions ({} tuples, {} features): train accuracy {:.1}% of tuples, {:.1}% of questions",
        questions.len(),
        tuples.len(),
        model.dim(),
        100.0 * tuple_accuracy,
        100.0 * question_accuracy
    );
    println!("fingerprint {}", model.fingerprint());
    Ok(())
}

fn load_model(cfg: &RunConfig) -> Result<Model, Failure> {
    let path = require(&cfg.paths.model, "model")?;
    Ok(Model::read_from(&mut open(path)?)?)
}

fn refuse_mismatch(model: &Model, features: &dyn TupleFeatures) -> Result<(), Failure> {
    model.check_fingerprint(&features.fingerprint()).map_err(|e| {
        Failure::data(format!(
            "{e}; the model was trained with different feature settings, pass the same --features as at training"
        ))
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    mode: &'a str,
    result: T,
    config: &'a RunConfig,
}

fn write_report(cfg: &RunConfig, mode: &str, csv: &str, result: impl Serialize) -> Result<(), Failure> {
    if let Some(path) = &cfg.paths.report {
        let mut w = create(path)?;
        w.write_all(csv.as_bytes())?;
        w.flush()?;
        write_json(&sidecar(path, "summary.json"), &Summary { mode, result, config: cfg })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AnswerResult {
    n_questions: usize,
    correct: usize,
    accuracy: f64,
    baseline: f64,
}

pub fn evaluate_answer(cfg: &RunConfig) -> Result<(), Failure> {
    let bundle = load_bundle(cfg)?;
    let model = load_model(cfg)?;
    let questions = single_questions(cfg)?;
    let spec = cfg.feature_spec(questions[0].kind.tuple_size(), bundle.grid())?;
    let featurizer = Featurizer::new(&bundle, spec)?;
    refuse_mismatch(&model, &featurizer)?;

    let mut csv = String::from("id,kind,chosen,solution,correct,p_chosen\n");
    let mut correct = 0;
    for q in &questions {
        let probs = choice_probabilities(&model, &featurizer, q)?;
        let chosen = tasks::argmax(&probs).expect("questions have choices");
        let ok = chosen == q.solution_index();
        correct += usize::from(ok);
        csv += &format!(
            "{},{},{chosen},{},{ok},{:.6}\n",
            csv_field(&q.id),
            q.kind,
            q.solution_index(),
            probs[chosen]
        );
    }
    let result = AnswerResult {
        n_questions: questions.len(),
        correct,
        accuracy: correct as f64 / questions.len() as f64,
        baseline: tasks::eval::random_baseline(&questions),
    };
    println!(
        "accuracy {:.4} ({}/{}), random baseline {:.4}",
        result.accuracy, correct, result.n_questions, result.baseline
    );
    write_report(cfg, "answer", &csv, result)
}

pub fn evaluate_crossval(cfg: &RunConfig) -> Result<(), Failure> {
    let bundle = load_bundle(cfg)?;
    let questions = single_questions(cfg)?;
    let spec = cfg.feature_spec(questions[0].kind.tuple_size(), bundle.grid())?;
    let featurizer = Featurizer::new(&bundle, spec)?;
    let table = FeatureTable::for_questions(&featurizer, &questions)?;
    let report = cross_validate(&questions, &table, &cfg.svm, cfg.eval.folds, cfg.seed)?;

    let mut csv = String::from("id,fold,chosen,solution,correct\n");
    for p in &report.predictions {
        csv += &format!("{},{},{},{},{}\n", csv_field(&p.id), p.fold, p.chosen, p.solution, p.correct);
    }
    println!(
        "{}-fold accuracy {:.4} ({}/{}), random baseline {:.4}",
        report.folds, report.accuracy, report.correct, report.n_questions, report.baseline
    );
    for f in &report.per_fold {
        println!("  fold {}: {}/{}", f.fold, f.correct, f.n_test);
    }
    write_report(cfg, "crossval", &csv, &report)
}

pub fn evaluate_prototypicality(cfg: &RunConfig) -> Result<(), Failure> {
    let bundle = load_bundle(cfg)?;
    let model = load_model(cfg)?;
    let sets = read_paradigms(open(require(&cfg.paths.paradigms, "paradigms")?)?)?;
    let spec = cfg.feature_spec(4, bundle.grid())?;
    let featurizer = Featurizer::new(&bundle, spec)?;
    refuse_mismatch(&model, &featurizer)?;
    let report = tasks::evaluate_prototypicality(&model, &featurizer, &sets)?;

    let mut csv = String::from("subcategory,n_pairs,spearman\n");
    for s in &report.per_subcategory {
        let rho = s.spearman.map_or("undefined".to_string(), |r| format!("{r:.6}"));
        csv += &format!("{},{},{rho}\n", csv_field(&s.subcategory), s.n_pairs);
        println!("  {}: {rho}", s.subcategory);
    }
    println!("macro-averaged Spearman {:.4}", report.macro_spearman);
    write_report(cfg, "prototypicality", &csv, &report)
}

pub fn evaluate_ablation(cfg: &RunConfig) -> Result<(), Failure> {
    let bundle = load_bundle(cfg)?;
    if cfg.paths.questions.is_empty() {
        return Err(Failure::usage("ablation needs --questions (analogy and/or paraphrase files)"));
    }
    let mut analogies: Option<Vec<Question>> = None;
    let mut paraphrases: Option<Vec<Question>> = None;
    for path in &cfg.paths.questions {
        // the ablation tables use the expanded question forms
        let qs = load_questions(path, true)?;
        let slot = if qs[0].kind.is_analogy() { &mut analogies } else { &mut paraphrases };
        if slot.is_some() {
            return Err(Failure::usage("ablation takes at most one analogy and one paraphrase file"));
        }
        *slot = Some(qs);
    }
    let table = |qs: &Option<Vec<Question>>| -> Result<Option<FeatureTable>, Failure> {
        let Some(qs) = qs else { return Ok(None) };
        let spec = tuplesim::features::FeatureSpec::new(qs[0].kind.tuple_size(), bundle.grid().clone());
        Ok(Some(FeatureTable::for_questions(&Featurizer::new(&bundle, spec)?, qs)?))
    };
    let (ta, tp) = (table(&analogies)?, table(&paraphrases)?);
    let rows = run_ablation(&AblationInput {
        analogies: analogies.as_deref().zip(ta.as_ref()),
        paraphrases: paraphrases.as_deref().zip(tp.as_ref()),
        svm: &cfg.svm,
        folds: cfg.eval.folds,
        seed: cfg.seed,
    })?;
    let mut csv = Vec::new();
    write_ablation_csv(&mut csv, &rows)?;
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    print!("{csv}");
    write_report(cfg, "ablation", &csv, &rows)
}

fn read_exclude_stems(path: &Path) -> Result<HashSet<(String, String)>, Failure> {
    let mut out = HashSet::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('{') {
            let q: Question = serde_json::from_str(line)
                .map_err(|e| Failure::data(format!("{} line {}: {e}", path.display(), n + 1)))?;
            if let [a, b] = q.stem.as_slice() {
                out.insert((a.clone(), b.clone()));
            }
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [a, b] => out.insert((a.to_lowercase(), b.to_lowercase())),
            _ => {
                return Err(Failure::data(format!(
                    "{} line {}: expected two words",
                    path.display(),
                    n + 1
                )))
            }
        };
    }
    Ok(out)
}

pub fn generate_holistic(cfg: &RunConfig) -> Result<(), Failure> {
    let lexicon = Lexicon::read_tsv(open(require(&cfg.paths.lexicon, "lexicon")?)?)?;
    let out = require(&cfg.paths.out, "output")?;
    let exclude = match &cfg.paths.exclude_stems {
        Some(p) => read_exclude_stems(p)?,
        None => HashSet::new(),
    };
    let generated = generate_holistic_questions(&lexicon, cfg.generate.n_questions, &exclude, cfg.seed);
    let mut w = create(out)?;
    w.write_all(provenance(cfg, "generate holistic").as_bytes())?;
    write_jsonl(&mut w, &generated.questions)?;
    w.flush()?;
    println!(
        "{} holistic questions (requested {}), {} stems skipped for too few sharing pseudo-unigrams -> {}",
        generated.questions.len(),
        cfg.generate.n_questions,
        generated.skipped,
        out.display()
    );
    if generated.skipped > 0 {
        log::warn!("{} stems skipped", generated.skipped);
    }
    Ok(())
}

pub fn generate_synthetic(cfg: &RunConfig) -> Result<(), Failure> {
    let out = require(&cfg.paths.out, "output")?;
    let b = generate_synthetic_benchmark(cfg.seed, &cfg.synthetic)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("corpus.txt"), b.corpus_text())?;
    fs::write(out.join("lexicon.tsv"), b.lexicon.to_tsv())?;
    fs::write(out.join("run_config.toml"), cfg.to_toml())?;
    let header = provenance(cfg, "generate synthetic");
    let jsonl = |name: &str, write: &dyn Fn(&mut Vec<u8>) -> tuplesim::Result<()>| -> Result<(), Failure> {
        let mut buf = header.clone().into_bytes();
        write(&mut buf)?;
        fs::write(out.join(name), buf)?;
        Ok(())
    };
    jsonl("analogy.jsonl", &|w| write_jsonl(w, &b.analogies))?;
    jsonl("paraphrase.jsonl", &|w| write_jsonl(w, &b.paraphrases))?;
    jsonl("paradigms.jsonl", &|w| write_jsonl(w, &b.paradigms))?;
    println!(
        "synthetic benchmark: {} tokens, {} terms, {} analogy and {} paraphrase questions, {} paradigm sets -> {}",
        b.n_tokens(),
        b.lexicon.len(),
        b.analogies.len(),
        b.paraphrases.len(),
        b.paradigms.len(),
        out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_flag() {
        assert_eq!(parse_calibration("training").unwrap(), Calibration::Training);
        assert_eq!(
            parse_calibration("cv:5").unwrap(),
            Calibration::CrossValidated { folds: 5 }
        );
        assert_eq!(parse_calibration("cv5").unwrap_err().code, 1);
    }

    #[test]
    fn sidecar_appends() {
        assert_eq!(sidecar(Path::new("out/m.bin"), "json"), PathBuf::from("out/m.bin.json"));
    }
}
