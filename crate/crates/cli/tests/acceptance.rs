//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p tuplesim-cli --test acceptance`.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tuplesim::classifier::{solve_dual, Model, Standardizer, SvmConfig, TrainSet};
use tuplesim::features::{FeatureSpec, Featurizer};
use tuplesim::linalg::{dense_truncated_svd, ppmi_transform, DenseMatrix, SparseMatrix};
use tuplesim::spaces::{BuildOptions, GridSpec, SpaceBundle};
use tuplesim::tasks::*;

const SEED: u64 = 7;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. feature counts

fn feature_counts() -> Outcome {
    let want = [1, 226, 675, 1348, 2245, 3366];
    let got: Vec<usize> = (1..=6).map(|n| FeatureSpec::new(n, GridSpec::default()).len()).collect();
    ensure(got == want, || format!("lengths {got:?}, want {want:?}"))?;
    let g = GridSpec::default();
    for n in 1..=6 {
        let closed = oracles::feature_count(n, g.n_k(), g.n_p());
        ensure(closed == want[n - 1], || format!("closed form gives {closed} for n={n}"))?;
    }
    Ok(format!("lengths {got:?}"))
}

// 2. augmentation counts

fn question(kind: QuestionKind, n_choices: usize) -> Question {
    let width = kind.tuple_size() - 2;
    Question {
        id: kind.to_string(),
        kind,
        stem: vec!["s0".into(), "s1".into()],
        choices: (0..n_choices).map(|i| (0..width).map(|j| format!("c{i}w{j}")).collect()).collect(),
        solution: 1,
    }
}

fn counts(tuples: &[LabeledTuple]) -> (usize, usize) {
    let pos = tuples.iter().filter(|t| t.label).count();
    (pos, tuples.len() - pos)
}

fn augmentation_counts() -> Outcome {
    let five = question(QuestionKind::Analogy5, 5);
    let seven = question(QuestionKind::Paraphrase7, 7);
    five.validate().map_err(|e| e.to_string())?;
    seven.validate().map_err(|e| e.to_string())?;
    let ten = make_ten_choice(&five).map_err(|e| e.to_string())?;
    let fourteen = make_fourteen_choice(&seven).map_err(|e| e.to_string())?;
    let got = [
        counts(&five.training_tuples()),
        counts(&ten.training_tuples()),
        counts(&seven.training_tuples()),
        counts(&fourteen.training_tuples()),
    ];
    let want = [(4, 4), (4, 9), (1, 6), (1, 13)];
    ensure(got == want, || format!("(pos, neg) {got:?}, want {want:?}"))?;
    ensure(ten.choice_tuples().len() == 10 && fourteen.choice_tuples().len() == 14, || {
        "presented choice counts".into()
    })?;
    Ok(format!("5:{:?} 10:{:?} 7:{:?} 14:{:?}", got[0], got[1], got[2], got[3]))
}

// 3. linear algebra oracles

fn random_counts(rng: &mut ChaCha8Rng, max_dim: usize) -> Vec<Vec<f64>> {
    loop {
        let m = rng.random_range(1..=max_dim);
        let n = rng.random_range(1..=max_dim);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(1..50) as f64 }).collect())
            .collect();
        if rows.iter().flatten().any(|&v| v > 0.0) {
            return rows;
        }
    }
}

fn linalg_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_ppmi: f64 = 0.0;
    for _ in 0..100 {
        let c = random_counts(&mut rng, 10);
        let want = oracles::dense_ppmi(&c);
        let got = ppmi_transform(&SparseMatrix::from_dense(&c).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                worst_ppmi = worst_ppmi.max((got.get(i, j) - w).abs());
            }
        }
    }
    ensure(worst_ppmi <= 1e-12, || format!("PPMI max error {worst_ppmi:e}"))?;

    let mut worst_sv: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=20);
        let n = rng.random_range(1..=20);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let a = DenseMatrix::from_row_major(m, n, rows.concat()).map_err(|e| e.to_string())?;
        let f = dense_truncated_svd(&a, m.min(n)).map_err(|e| e.to_string())?;
        let want = oracles::singular_values(&rows);
        for (i, s) in want.iter().enumerate() {
            match f.sigma.get(i) {
                Some(g) => worst_sv = worst_sv.max((g - s).abs() / s),
                None => ensure(*s <= want[0] * 1e-10, || format!("nonzero sigma {s} dropped"))?,
            }
        }
    }
    ensure(worst_sv <= 1e-6, || format!("singular value max relative error {worst_sv:e}"))?;
    Ok(format!("PPMI err {worst_ppmi:.1e}, sigma rel err {worst_sv:.1e}"))
}

// 4. SMO against the exhaustive QP

fn smo_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=4);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let c = [0.1, 1.0, 10.0][rng.random_range(0..3)];
        let k = oracles::gram(&pts);
        let exact = oracles::exhaustive_qp(&k, &y, c);
        let smo = solve_dual(&k, &y, c, 1e-8, 1_000_000).map_err(|e| e.to_string())?;
        worst = worst.max((smo.objective - exact.objective).abs());
        ensure((smo.objective - exact.objective).abs() <= 1e-4, || {
            format!("case {case}: objective {} vs {}", smo.objective, exact.objective)
        })?;
        let mine = oracles::decisions(&k, &y, &smo.alpha, smo.bias);
        let theirs = oracles::decisions(&k, &y, &exact.alpha, exact.bias);
        ensure(mine.iter().zip(&theirs).all(|(a, b)| (*a > 0.0) == (*b > 0.0)), || {
            format!("case {case}: classifications differ")
        })?;
    }
    Ok(format!("200 instances, max objective gap {worst:.1e}"))
}

// 5. calibration and prediction properties

fn train_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let rows = labels
        .iter()
        .map(|&l| (0..d).map(|j| rng.random_range(-1.0..1.0) + if l && j == 0 { 0.8 } else { 0.0 }).collect())
        .collect();
    (rows, labels)
}

fn calibration_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let (rows, labels) = train_set(&mut rng, 60, 5);
    let model =
        Model::train(&TrainSet::new(rows, labels).map_err(|e| e.to_string())?, &SvmConfig::default(), "fp").map_err(|e| e.to_string())?;
    let mut prev = model.prob_from_decision(-10.0);
    for i in 1..=2000 {
        let f = -10.0 + i as f64 * 0.01;
        let p = model.prob_from_decision(f);
        ensure(p > prev, || format!("probability not increasing at f={f}"))?;
        prev = p;
    }
    for f in [-1e9, -1e3, 0.0, 1e3, 1e9] {
        let p = model.prob_from_decision(f);
        ensure(p > 0.0 && p < 1.0, || format!("p({f}) = {p}"))?;
    }

    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let (rows, labels) = train_set(&mut rng, 24, 3);
        let scale: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..10.0)).collect();
        let shift: Vec<f64> = (0..3).map(|_| rng.random_range(-50.0..50.0)).collect();
        let moved: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().zip(&scale).zip(&shift).map(|((x, a), c)| a * x + c).collect()).collect();
        let s1 = Standardizer::fit(&rows).map_err(|e| e.to_string())?;
        let s2 = Standardizer::fit(&moved).map_err(|e| e.to_string())?;
        let cfg = SvmConfig { tol: 1e-12, ..SvmConfig::default() };
        let m1 = Model::train(&TrainSet::new(rows.clone(), labels.clone()).map_err(|e| e.to_string())?, &cfg, "fp")
            .map_err(|e| e.to_string())?;
        let m2 = Model::train(&TrainSet::new(moved.clone(), labels).map_err(|e| e.to_string())?, &cfg, "fp")
            .map_err(|e| e.to_string())?;
        for (r, m) in rows.iter().zip(&moved) {
            for (u, v) in s1.apply(r).iter().zip(s2.apply(m)) {
                worst = worst.max((u - v).abs());
            }
            let d = (m1.predict_prob(r).map_err(|e| e.to_string())? - m2.predict_prob(m).map_err(|e| e.to_string())?).abs();
            worst = worst.max(d);
        }
        ensure(worst <= 1e-9, || format!("trial {trial}: affine change moved output by {worst:e}"))?;
    }
    Ok(format!("monotone on [-10,10], open at extremes, affine deviation {worst:.1e}"))
}

// 6 and 7. synthetic benchmark

struct Synthetic {
    bench: SyntheticBenchmark,
    bundle: SpaceBundle,
}

static SYNTHETIC: OnceLock<Synthetic> = OnceLock::new();

fn build_synthetic() -> Result<Synthetic, String> {
    let bench = generate_synthetic_benchmark(SEED, &SyntheticParams::default()).map_err(|e| e.to_string())?;
    let bundle = SpaceBundle::build(&bench.corpus, bench.lexicon.clone(), &BuildOptions::default()).map_err(|e| e.to_string())?;
    Ok(Synthetic { bench, bundle })
}

fn table(bundle: &SpaceBundle, questions: &[Question]) -> Result<FeatureTable, String> {
    let spec = FeatureSpec::new(questions[0].kind.tuple_size(), bundle.grid().clone());
    let f = Featurizer::new(bundle, spec).map_err(|e| e.to_string())?;
    FeatureTable::for_questions(&f, questions).map_err(|e| e.to_string())
}

fn crossval(bundle: &SpaceBundle, questions: &[Question]) -> Result<CvReport, String> {
    let t = table(bundle, questions)?;
    cross_validate(questions, &t, &SvmConfig::default(), 10, SEED).map_err(|e| e.to_string())
}

fn end_to_end() -> Outcome {
    let s = build_synthetic()?;
    let b = &s.bench;
    ensure(b.lexicon.len() == 200, || format!("lexicon has {} terms", b.lexicon.len()))?;
    ensure((40_000..=60_000).contains(&b.n_tokens()), || format!("corpus has {} tokens", b.n_tokens()))?;

    let para = crossval(&s.bundle, &b.paraphrases)?;
    let ana = crossval(&s.bundle, &b.analogies)?;
    ensure(para.accuracy >= 3.0 / 7.0, || format!("paraphrase7 accuracy {:.3} < 3/7", para.accuracy))?;
    ensure(ana.accuracy >= 2.0 / 5.0, || format!("analogy5 accuracy {:.3} < 2/5", ana.accuracy))?;

    // a second, independent run from the seed alone
    let again = build_synthetic()?;
    ensure(again.bench == s.bench, || "regenerated benchmark differs".into())?;
    ensure(again.bundle.meta == s.bundle.meta, || "rebuilt spaces differ".into())?;
    let para2 = crossval(&again.bundle, &again.bench.paraphrases)?;
    ensure(para2 == para, || "paraphrase cross-validation is not deterministic".into())?;

    let line = format!(
        "{} tokens, {} terms; paraphrase7 {:.3} (need {:.3}), analogy5 {:.3} (need {:.3}); deterministic",
        b.n_tokens(),
        b.lexicon.len(),
        para.accuracy,
        3.0 / 7.0,
        ana.accuracy,
        2.0 / 5.0
    );
    let _ = SYNTHETIC.set(s);
    Ok(line)
}

fn ablation() -> Outcome {
    let s = match SYNTHETIC.get() {
        Some(s) => s,
        None => {
            let _ = SYNTHETIC.set(build_synthetic()?);
            SYNTHETIC.get().expect("just set")
        }
    };
    let ana: Vec<Question> = s.bench.analogies.iter().map(make_ten_choice).collect::<tuplesim::Result<_>>().map_err(|e| e.to_string())?;
    let para: Vec<Question> =
        s.bench.paraphrases.iter().map(make_fourteen_choice).collect::<tuplesim::Result<_>>().map_err(|e| e.to_string())?;
    let ana_t = table(&s.bundle, &ana)?;
    let para_t = table(&s.bundle, &para)?;
    let svm = SvmConfig::default();
    let rows = run_ablation(&AblationInput {
        analogies: Some((&ana, &ana_t)),
        paraphrases: Some((&para, &para_t)),
        svm: &svm,
        folds: 10,
        seed: SEED,
    })
    .map_err(|e| e.to_string())?;

    let mut csv = Vec::new();
    write_ablation_csv(&mut csv, &rows).map_err(|e| e.to_string())?;
    let csv = String::from_utf8(csv).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = csv.lines().collect();
    ensure(lines.len() == 1 + 10 + 10 + 8, || format!("CSV has {} lines", lines.len()))?;
    let width = lines[0].split(',').count();
    ensure(lines.iter().all(|l| l.split(',').count() == width && !l.split(',').any(str::is_empty)), || {
        "CSV has ragged or empty fields".into()
    })?;

    let para_blocks: Vec<&AblationRow> =
        rows.iter().filter(|r| r.experiment == "blocks" && r.task == QuestionKind::Paraphrase14).collect();
    let full = para_blocks.iter().find(|r| r.config == "lf+ppmi+dom+fun").ok_or("no full-feature row")?;
    let best_single = para_blocks
        .iter()
        .filter(|r| !r.config.contains('+'))
        .max_by(|a, b| a.accuracy.total_cmp(&b.accuracy))
        .ok_or("no single-block rows")?;
    ensure(full.accuracy >= best_single.accuracy, || {
        format!("paraphrase14 full {:.3} < best single block {} {:.3}", full.accuracy, best_single.config, best_single.accuracy)
    })?;
    Ok(format!(
        "{} rows; paraphrase14 full {:.3} >= best single {} {:.3}",
        rows.len(),
        full.accuracy,
        best_single.config,
        best_single.accuracy
    ))
}

// 8. holistic generation through the binary

fn holistic_cli() -> Outcome {
    let bench = generate_synthetic_benchmark(SEED, &SyntheticParams::default()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lex = dir.path().join("lexicon.tsv");
    let excl = dir.path().join("test_stems.txt");
    let out = dir.path().join("holistic.jsonl");
    std::fs::write(&lex, bench.lexicon.to_tsv()).map_err(|e| e.to_string())?;
    std::fs::write(&excl, "mod0 head0\nmod1 head2\n").map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_tuplesim"))
        .args(["generate", "--mode", "holistic", "--n", "680", "--lexicon"])
        .arg(&lex)
        .arg("--exclude-stems")
        .arg(&excl)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("exit {:?}: {}", status.status, String::from_utf8_lossy(&status.stderr)))?;

    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let qs = read_questions(text.as_bytes()).map_err(|e| e.to_string())?;
    ensure(!qs.is_empty(), || "no questions emitted".into())?;
    let excluded: HashSet<[&str; 2]> = [["mod0", "head0"], ["mod1", "head2"]].into();
    for q in &qs {
        let (a, b) = match q.stem.as_slice() {
            [a, b] => (a.as_str(), b.as_str()),
            _ => return Err(format!("{}: stem {:?} is not a bigram", q.id, q.stem)),
        };
        ensure(!excluded.contains(&[a, b]), || format!("{}: excluded stem {a} {b}", q.id))?;
        ensure(q.kind == QuestionKind::Paraphrase7 && q.choices.len() == 7, || format!("{}: not 7-choice", q.id))?;
        let flat: Vec<&str> = q.choices.iter().map(|c| c[0].as_str()).collect();
        ensure(q.choices.iter().all(|c| c.len() == 1), || format!("{}: multi-word choice", q.id))?;
        ensure(flat.iter().collect::<HashSet<_>>().len() == 7, || format!("{}: repeated choice", q.id))?;
        let solution = format!("{a}_{b}");
        ensure(flat[q.solution] == solution, || format!("{}: solution {} != {solution}", q.id, flat[q.solution]))?;
        ensure(flat.iter().filter(|&&c| c == solution).count() == 1, || format!("{}: solution repeated", q.id))?;
        ensure(flat.contains(&a) && flat.contains(&b), || format!("{}: component unigrams missing", q.id))?;
        let sharing = flat
            .iter()
            .filter(|&&c| c != solution)
            .filter_map(|c| c.split_once('_'))
            .filter(|(x, y)| *x == a || *y == b || *x == b || *y == a)
            .count();
        ensure(sharing == 4, || format!("{}: {sharing} sharing pseudo-unigrams", q.id))?;
        ensure(flat.iter().all(|c| bench.lexicon.id(c).is_some()), || format!("{}: choice outside lexicon", q.id))?;
    }
    Ok(format!("{} questions, all match the layout", qs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 8] = [
        ("1 feature-count exactness", feature_counts, Some(Duration::from_secs(1))),
        ("2 augmentation counts", augmentation_counts, Some(Duration::from_secs(1))),
        ("3 linear-algebra oracles", linalg_oracles, Some(Duration::from_secs(30))),
        ("4 SMO oracle", smo_oracle, Some(Duration::from_secs(60))),
        ("5 calibration and prediction", calibration_properties, Some(Duration::from_secs(10))),
        ("6 end-to-end synthetic benchmark", end_to_end, Some(Duration::from_secs(300))),
        ("7 ablation harness", ablation, None),
        ("8 holistic generation", holistic_cli, None),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {took:.1?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
