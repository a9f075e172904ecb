use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::question::{Question, QuestionKind};
use crate::corpus::Lexicon;

/// Distractors sharing a component word with the stem.
pub const SHARING_DISTRACTORS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct HolisticQuestions {
    pub questions: Vec<Question>,
    /// Stems passed over for lack of sharing pseudo-unigrams.
    pub skipped: usize,
}

/// Two-word pseudo-unigrams `a_b` whose components are both lexicon terms.
fn pseudo_unigrams(lexicon: &Lexicon) -> Vec<(String, String, String)> {
    lexicon
        .entries()
        .filter_map(|(term, _)| {
            let (a, b) = term.split_once('_')?;
            (!b.contains('_') && lexicon.id(a).is_some() && lexicon.id(b).is_some())
                .then(|| (term.to_string(), a.to_string(), b.to_string()))
        })
        .collect()
}

/// Seven-choice paraphrase questions whose answer is the stem's own
/// pseudo-unigram.
///
/// For stem `a b` the choices are `a_b`, `a`, `b` and four other
/// pseudo-unigrams sharing `a` or `b` (two per side when possible), in
/// shuffled order. Stems listed in `exclude_stems` are never used.
pub fn generate_holistic_questions(
    lexicon: &Lexicon,
    n_questions: usize,
    exclude_stems: &HashSet<(String, String)>,
    seed: u64,
) -> HolisticQuestions {
    let all = pseudo_unigrams(lexicon);
    let mut candidates: Vec<&(String, String, String)> = all
        .iter()
        .filter(|(_, a, b)| !exclude_stems.contains(&(a.clone(), b.clone())))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);

    let mut questions = Vec::new();
    let mut skipped = 0;
    for (term, a, b) in candidates {
        if questions.len() == n_questions {
            break;
        }
        let shares = |w: &str| -> Vec<&String> {
            all.iter()
                .filter(|(t, x, y)| t != term && (x == w || y == w))
                .map(|(t, _, _)| t)
                .collect()
        };
        let side_a = shares(a);
        let side_b: Vec<&String> = shares(b).into_iter().filter(|t| !side_a.contains(t)).collect();
        if side_a.len() + side_b.len() < SHARING_DISTRACTORS {
            skipped += 1;
            continue;
        }
        let half = SHARING_DISTRACTORS / 2;
        let take_a = side_a.len().min(half.max(SHARING_DISTRACTORS - side_b.len().min(half)));
        let take_b = SHARING_DISTRACTORS - take_a;
        let mut sharing: Vec<&String> = side_a.choose_multiple(&mut rng, take_a).copied().collect();
        sharing.extend(side_b.choose_multiple(&mut rng, take_b).copied());

        let mut choices: Vec<String> = vec![term.clone(), a.clone(), b.clone()];
        choices.extend(sharing.into_iter().cloned());
        choices.shuffle(&mut rng);
        let solution = choices.iter().position(|c| c == term).expect("solution is among the choices");
        questions.push(Question {
            id: format!("holistic{}", questions.len()),
            kind: QuestionKind::Paraphrase7,
            stem: vec![a.clone(), b.clone()],
            choices: choices.into_iter().map(|c| vec![c]).collect(),
            solution,
        });
    }
    if skipped > 0 {
        log::warn!("{skipped} stems skipped: fewer than {SHARING_DISTRACTORS} sharing pseudo-unigrams");
    }
    HolisticQuestions { questions, skipped }
}
