use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    Analogy5,
    Analogy10,
    Paraphrase7,
    Paraphrase14,
}

impl QuestionKind {
    pub const ALL: [QuestionKind; 4] = [
        QuestionKind::Analogy5,
        QuestionKind::Analogy10,
        QuestionKind::Paraphrase7,
        QuestionKind::Paraphrase14,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Analogy5 => "analogy5",
            QuestionKind::Analogy10 => "analogy10",
            QuestionKind::Paraphrase7 => "paraphrase7",
            QuestionKind::Paraphrase14 => "paraphrase14",
        }
    }

    pub fn is_analogy(self) -> bool {
        matches!(self, QuestionKind::Analogy5 | QuestionKind::Analogy10)
    }

    /// Length of every classified tuple: stem pair + choice pair, or stem
    /// bigram + choice unigram.
    pub fn tuple_size(self) -> usize {
        if self.is_analogy() {
            4
        } else {
            3
        }
    }

    /// Choices stored with the question.
    pub fn n_base_choices(self) -> usize {
        if self.is_analogy() {
            5
        } else {
            7
        }
    }

    /// Whether every stored choice is also presented in shuffled form.
    pub fn is_expanded(self) -> bool {
        matches!(self, QuestionKind::Analogy10 | QuestionKind::Paraphrase14)
    }

    /// Choices presented to the classifier.
    pub fn n_choices(self) -> usize {
        self.n_base_choices() * if self.is_expanded() { 2 } else { 1 }
    }

    fn choice_len(self) -> usize {
        if self.is_analogy() {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QuestionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown question kind {s:?}")))
    }
}

/// The three other orderings of a positive analogy that keep it valid:
/// `<b,a,d,c>`, `<c,d,a,b>`, `<d,c,b,a>`.
pub fn expand_analogy_symmetries<S: Clone>(q: &[S; 4]) -> [[S; 4]; 3] {
    let [a, b, c, d] = q.clone();
    [
        [b.clone(), a.clone(), d.clone(), c.clone()],
        [c.clone(), d.clone(), a.clone(), b.clone()],
        [d, c, b, a],
    ]
}

/// `<a,b,c,d>` -> `<a,d,c,b>`.
pub fn shuffle_analogy<S: Clone>(q: &[S; 4]) -> [S; 4] {
    let [a, b, c, d] = q.clone();
    [a, d, c, b]
}

/// `<a,b,c>` -> `<b,a,c>`.
pub fn shuffle_paraphrase<S: Clone>(q: &[S; 3]) -> [S; 3] {
    let [a, b, c] = q.clone();
    [b, a, c]
}

/// A tuple with its label, tagged with the question it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTuple {
    pub tuple: Vec<String>,
    pub label: bool,
    pub group: String,
}

/// A multiple-choice question.
///
/// `choices` always holds the stored (unshuffled) choices. For the expanded
/// kinds each stored choice `i` is presented as tuples `2i` (as stored) and
/// `2i + 1` (shuffled), so the answer among presented tuples is
/// `2 * solution`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub kind: QuestionKind,
    pub stem: Vec<String>,
    pub choices: Vec<Vec<String>>,
    pub solution: usize,
}

impl Question {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::InvalidInput(format!("question {}: {detail}", self.id)));
        if self.id.is_empty() {
            return Err(Error::InvalidInput("question with empty id".into()));
        }
        if self.stem.len() != 2 {
            return bad(format!("stem has {} terms, expected 2", self.stem.len()));
        }
        let want = self.kind.n_base_choices();
        if self.choices.len() != want {
            return bad(format!("{} choices, {} expects {want}", self.choices.len(), self.kind));
        }
        let len = self.kind.choice_len();
        if let Some(c) = self.choices.iter().find(|c| c.len() != len) {
            return bad(format!("choice {c:?} should have {len} terms"));
        }
        if self.solution >= self.choices.len() {
            return bad(format!("solution {} out of range", self.solution));
        }
        if self.stem.iter().chain(self.choices.iter().flatten()).any(|t| t.is_empty()) {
            return bad("empty term".into());
        }
        Ok(())
    }

    fn base_tuple(&self, choice: usize) -> Vec<String> {
        let mut t = self.stem.clone();
        t.extend(self.choices[choice].iter().cloned());
        t
    }

    fn shuffled(&self, t: &[String]) -> Vec<String> {
        if self.kind.is_analogy() {
            vec![t[0].clone(), t[3].clone(), t[2].clone(), t[1].clone()]
        } else {
            vec![t[1].clone(), t[0].clone(), t[2].clone()]
        }
    }

    /// The tuples the classifier scores, in presentation order.
    pub fn choice_tuples(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.kind.n_choices());
        for i in 0..self.choices.len() {
            let t = self.base_tuple(i);
            if self.kind.is_expanded() {
                let s = self.shuffled(&t);
                out.push(t);
                out.push(s);
            } else {
                out.push(t);
            }
        }
        out
    }

    /// Index of the correct tuple in [`Question::choice_tuples`].
    pub fn solution_index(&self) -> usize {
        if self.kind.is_expanded() {
            2 * self.solution
        } else {
            self.solution
        }
    }

    /// Labeled training tuples: every presented tuple, with the positive
    /// analogy also contributing its three symmetric orderings.
    pub fn training_tuples(&self) -> Vec<LabeledTuple> {
        let solution = self.solution_index();
        let mut out = Vec::new();
        for (i, tuple) in self.choice_tuples().into_iter().enumerate() {
            let label = i == solution;
            if label && self.kind.is_analogy() {
                let q: [String; 4] = tuple.clone().try_into().expect("analogy tuples have 4 terms");
                for sym in expand_analogy_symmetries(&q) {
                    out.push(LabeledTuple {
                        tuple: sym.to_vec(),
                        label: true,
                        group: self.id.clone(),
                    });
                }
            }
            out.push(LabeledTuple {
                tuple,
                label,
                group: self.id.clone(),
            });
        }
        out
    }
}

fn retype(q: &Question, from: QuestionKind, to: QuestionKind) -> Result<Question> {
    if q.kind != from {
        return Err(Error::InvalidInput(format!(
            "question {} is {}, expected {from}",
            q.id, q.kind
        )));
    }
    q.validate()?;
    Ok(Question {
        kind: to,
        ..q.clone()
    })
}

/// Five-choice analogy -> ten-choice, each `<c,d>` also offered as `<a,d,c,b>`.
pub fn make_ten_choice(q: &Question) -> Result<Question> {
    retype(q, QuestionKind::Analogy5, QuestionKind::Analogy10)
}

/// Seven-choice paraphrase -> fourteen-choice, each `<a,b,c>` also offered as `<b,a,c>`.
pub fn make_fourteen_choice(q: &Question) -> Result<Question> {
    retype(q, QuestionKind::Paraphrase7, QuestionKind::Paraphrase14)
}

/// A relation subcategory with its paradigm pairs and, optionally, gold
/// prototypicality ratings of other pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParadigmSet {
    pub subcategory: String,
    pub pairs: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ratings: Vec<Rating>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rating {
    pub pair: [String; 2],
    pub score: f64,
}

impl ParadigmSet {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::InvalidInput(format!(
                "subcategory {} has no paradigm pairs",
                self.subcategory
            )));
        }
        if self.ratings.iter().any(|r| !r.score.is_finite()) {
            return Err(Error::NonFinite("rating"));
        }
        Ok(())
    }
}

/// Reads one JSON object per line. Blank lines and `#` lines are skipped.
pub fn read_jsonl<T, R>(reader: R, what: &'static str) -> Result<Vec<T>>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| Error::format(what, format!("line {}: {e}", n + 1)))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(w: &mut W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads and validates questions; ids must be unique.
pub fn read_questions<R: BufRead>(reader: R) -> Result<Vec<Question>> {
    let questions: Vec<Question> = read_jsonl(reader, "question file")?;
    let mut seen = std::collections::HashSet::new();
    for q in &questions {
        q.validate()?;
        if !seen.insert(q.id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate question id {}", q.id)));
        }
    }
    Ok(questions)
}

pub fn read_paradigms<R: BufRead>(reader: R) -> Result<Vec<ParadigmSet>> {
    let sets: Vec<ParadigmSet> = read_jsonl(reader, "paradigm file")?;
    for s in &sets {
        s.validate()?;
    }
    Ok(sets)
}
