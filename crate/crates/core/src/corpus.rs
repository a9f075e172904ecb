//! Tokenization, the term lexicon, frequency counting and co-occurrence
//! event extraction.
//!
//! A corpus is reduced to a stream of lexicon row ids (`None` for tokens
//! outside the lexicon). Three kinds of context are read off that stream:
//!
//! * unigram neighbours: the nearest lexicon unigram to the left and right,
//!   skipping everything that is not a lexicon unigram;
//! * nearest nouns: the closest noun-tagged lexicon token on each side;
//! * verb patterns: the closest verb-tagged lexicon token within a window on
//!   each side, keyed by which side it was found on.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse part of speech carried by every lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adj => "adj",
            Pos::Adv => "adv",
            Pos::Other => "other",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noun" | "n" => Ok(Pos::Noun),
            "verb" | "v" => Ok(Pos::Verb),
            "adj" | "a" | "s" => Ok(Pos::Adj),
            "adv" | "r" => Ok(Pos::Adv),
            "other" | "x" => Ok(Pos::Other),
            other => Err(Error::format("lexicon", format!("unknown POS tag {other:?}"))),
        }
    }
}

/// The closed term vocabulary. Row ids are dense and follow insertion order.
///
/// Multiword terms are joined with `_` (`search_engine`) and are matched as a
/// single token by [`tokenize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<(String, Pos)>,
    index: HashMap<String, usize>,
    max_words: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon {
            entries: Vec::new(),
            index: HashMap::new(),
            max_words: 1,
        }
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Pos)>,
        S: AsRef<str>,
    {
        let mut lex = Lexicon::new();
        for (term, pos) in entries {
            lex.insert(term.as_ref(), pos)?;
        }
        Ok(lex)
    }

    /// Appends a term. Terms are lowercased; each `_`-separated component
    /// must be non-empty and alphanumeric.
    pub fn insert(&mut self, term: &str, pos: Pos) -> Result<usize> {
        let term = term.trim().to_lowercase();
        let words: Vec<&str> = term.split('_').collect();
        if words
            .iter()
            .any(|w| w.is_empty() || !w.chars().all(char::is_alphanumeric))
        {
            return Err(Error::format("lexicon", format!("invalid term {term:?}")));
        }
        if self.index.contains_key(&term) {
            return Err(Error::format("lexicon", format!("duplicate term {term:?}")));
        }
        let id = self.entries.len();
        self.max_words = self.max_words.max(words.len());
        self.index.insert(term.clone(), id);
        self.entries.push((term, pos));
        Ok(id)
    }

    /// Parses the `term<TAB>pos` format. Blank lines and `#` comments are skipped.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, pos) = line.split_once('\t').ok_or_else(|| {
                Error::format("lexicon", format!("line {}: expected term<TAB>pos", lineno + 1))
            })?;
            lex.insert(term, pos.parse()?)?;
        }
        Ok(lex)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (term, pos) in &self.entries {
            out.push_str(term);
            out.push('\t');
            out.push_str(pos.as_str());
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.entries[id].0
    }

    pub fn pos(&self, id: usize) -> Pos {
        self.entries[id].1
    }

    pub fn is_unigram(&self, id: usize) -> bool {
        !self.entries[id].0.contains('_')
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Pos)> {
        self.entries.iter().map(|(t, p)| (t.as_str(), *p))
    }

    /// Longest multiword term, in words.
    pub fn max_words(&self) -> usize {
        self.max_words
    }

    /// Maps tokens to row ids; out-of-lexicon tokens become `None`.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Option<usize>> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new()
    }
}

/// Lowercased alphanumeric words; every other character separates.
pub fn split_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits `text` into words and greedily joins runs of words that form a
/// multiword lexicon term, longest match first.
pub fn tokenize(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let words = split_words(text);
    if lexicon.max_words() < 2 {
        return words;
    }
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    let mut key = String::new();
    while i < words.len() {
        let longest = lexicon.max_words().min(words.len() - i);
        let mut taken = 1;
        for len in (2..=longest).rev() {
            key.clear();
            for (n, w) in words[i..i + len].iter().enumerate() {
                if n > 0 {
                    key.push('_');
                }
                key.push_str(w);
            }
            if lexicon.id(&key).is_some() {
                out.push(key.clone());
                taken = len;
                break;
            }
        }
        if taken == 1 {
            out.push(words[i].clone());
        }
        i += taken;
    }
    out
}

/// Occurrence counts per lexicon row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqTable {
    counts: Vec<u64>,
    total: u64,
}

impl FreqTable {
    pub fn zeros(n_terms: usize) -> Self {
        FreqTable {
            counts: vec![0; n_terms],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        FreqTable { counts, total }
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn merge(&mut self, other: &FreqTable) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// `term<TAB>count` for every lexicon row.
    pub fn to_tsv(&self, lexicon: &Lexicon) -> String {
        let mut out = String::new();
        for (id, c) in self.counts.iter().enumerate() {
            out.push_str(lexicon.term(id));
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub fn read_tsv<R: BufRead>(reader: R, lexicon: &Lexicon) -> Result<Self> {
        let mut counts = vec![0u64; lexicon.len()];
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (term, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format("frequency table", line.clone()))?;
            let id = lexicon
                .id(term)
                .ok_or_else(|| Error::format("frequency table", format!("unknown term {term:?}")))?;
            counts[id] = count
                .trim()
                .parse()
                .map_err(|_| Error::format("frequency table", format!("bad count {count:?}")))?;
        }
        Ok(FreqTable::from_counts(counts))
    }
}

pub fn count_frequencies(ids: &[Option<usize>], lexicon: &Lexicon) -> FreqTable {
    let mut table = FreqTable::zeros(lexicon.len());
    for id in ids.iter().flatten() {
        table.counts[*id] += 1;
        table.total += 1;
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    UnigramLeft,
    UnigramRight,
    Noun,
    VerbPattern,
}

/// One observed (target, context) co-occurrence.
///
/// `context` is a lexicon row id for the unigram and noun kinds. For verb
/// patterns it is `2 * verb_row + side` with left = 0 and right = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoocEvent {
    pub target: usize,
    pub context: usize,
    pub kind: EventKind,
}

pub fn verb_context_id(verb: usize, side: Side) -> usize {
    2 * verb + if side == Side::Left { 0 } else { 1 }
}

pub fn split_verb_context(context: usize) -> (usize, Side) {
    let side = if context % 2 == 0 { Side::Left } else { Side::Right };
    (context / 2, side)
}

/// Nearest position satisfying `pred` before each index (forward scan) and
/// after each index (backward scan).
fn nearest_each_side<F>(ids: &[Option<usize>], pred: F) -> (Vec<Option<usize>>, Vec<Option<usize>>)
where
    F: Fn(usize) -> bool,
{
    let n = ids.len();
    let mut before = vec![None; n];
    let mut after = vec![None; n];
    let mut last = None;
    for i in 0..n {
        before[i] = last;
        if let Some(id) = ids[i] {
            if pred(id) {
                last = Some(i);
            }
        }
    }
    last = None;
    for i in (0..n).rev() {
        after[i] = last;
        if let Some(id) = ids[i] {
            if pred(id) {
                last = Some(i);
            }
        }
    }
    (before, after)
}

pub fn extract_unigram_contexts(ids: &[Option<usize>], lexicon: &Lexicon) -> Vec<CoocEvent> {
    let (before, after) = nearest_each_side(ids, |id| lexicon.is_unigram(id));
    let mut events = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let Some(target) = *id else { continue };
        if let Some(j) = before[i] {
            events.push(CoocEvent {
                target,
                context: ids[j].unwrap(),
                kind: EventKind::UnigramLeft,
            });
        }
        if let Some(j) = after[i] {
            events.push(CoocEvent {
                target,
                context: ids[j].unwrap(),
                kind: EventKind::UnigramRight,
            });
        }
    }
    events
}

pub fn extract_noun_contexts(ids: &[Option<usize>], lexicon: &Lexicon) -> Vec<CoocEvent> {
    let (before, after) = nearest_each_side(ids, |id| lexicon.pos(id) == Pos::Noun);
    let mut events = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let Some(target) = *id else { continue };
        for j in [before[i], after[i]].into_iter().flatten() {
            events.push(CoocEvent {
                target,
                context: ids[j].unwrap(),
                kind: EventKind::Noun,
            });
        }
    }
    events
}

pub fn extract_verb_patterns(
    ids: &[Option<usize>],
    lexicon: &Lexicon,
    window: usize,
) -> Result<Vec<CoocEvent>> {
    if window == 0 {
        return Err(Error::InvalidInput("verb window must be at least 1".into()));
    }
    let (before, after) = nearest_each_side(ids, |id| lexicon.pos(id) == Pos::Verb);
    let mut events = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let Some(target) = *id else { continue };
        if let Some(j) = before[i].filter(|&j| i - j <= window) {
            events.push(CoocEvent {
                target,
                context: verb_context_id(ids[j].unwrap(), Side::Left),
                kind: EventKind::VerbPattern,
            });
        }
        if let Some(j) = after[i].filter(|&j| j - i <= window) {
            events.push(CoocEvent {
                target,
                context: verb_context_id(ids[j].unwrap(), Side::Right),
                kind: EventKind::VerbPattern,
            });
        }
    }
    Ok(events)
}

/// Everything the spaces need from a corpus, with events in canonical
/// (target, context, kind) order.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    pub freq: FreqTable,
    pub unigram: Vec<CoocEvent>,
    pub noun: Vec<CoocEvent>,
    pub verb: Vec<CoocEvent>,
    pub n_tokens: usize,
}

impl CorpusStats {
    /// Each text is an independent token stream; contexts never cross texts.
    /// Shards are processed in parallel and merged by sorting, so the result
    /// does not depend on how the corpus is split across threads.
    pub fn collect<S: AsRef<str> + Sync>(texts: &[S], lexicon: &Lexicon, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidInput("verb window must be at least 1".into()));
        }
        let shards: Vec<CorpusStats> = texts
            .par_iter()
            .map(|text| {
                let tokens = tokenize(text.as_ref(), lexicon);
                let ids = lexicon.encode(&tokens);
                Ok(CorpusStats {
                    freq: count_frequencies(&ids, lexicon),
                    unigram: extract_unigram_contexts(&ids, lexicon),
                    noun: extract_noun_contexts(&ids, lexicon),
                    verb: extract_verb_patterns(&ids, lexicon, window)?,
                    n_tokens: tokens.len(),
                })
            })
            .collect::<Result<_>>()?;

        let mut merged = CorpusStats {
            freq: FreqTable::zeros(lexicon.len()),
            unigram: Vec::new(),
            noun: Vec::new(),
            verb: Vec::new(),
            n_tokens: 0,
        };
        for shard in shards {
            merged.freq.merge(&shard.freq);
            merged.unigram.extend(shard.unigram);
            merged.noun.extend(shard.noun);
            merged.verb.extend(shard.verb);
            merged.n_tokens += shard.n_tokens;
        }
        merged.unigram.par_sort_unstable();
        merged.noun.par_sort_unstable();
        merged.verb.par_sort_unstable();
        Ok(merged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(entries: &[(&str, Pos)]) -> Lexicon {
        Lexicon::from_entries(entries.iter().copied()).unwrap()
    }

    #[test]
    fn tokenize_basic_and_empty() {
        let l = Lexicon::new();
        assert_eq!(tokenize("The cat sat.", &l), vec!["the", "cat", "sat"]);
        assert!(tokenize("", &l).is_empty());
        assert!(tokenize(" ,.;", &l).is_empty());
    }

    #[test]
    fn tokenize_merges_longest_multiword() {
        let l = lex(&[
            ("search", Pos::Noun),
            ("engine", Pos::Noun),
            ("search_engine", Pos::Noun),
            ("search_engine_parts", Pos::Noun),
        ]);
        assert_eq!(
            tokenize("search engine parts", &l),
            vec!["search_engine_parts"]
        );
        let l = lex(&[("search_engine", Pos::Noun)]);
        assert_eq!(
            tokenize("Search engine, parts", &l),
            vec!["search_engine", "parts"]
        );
        assert_eq!(tokenize("search", &l), vec!["search"]);
    }

    #[test]
    fn lexicon_rejects_duplicates_and_bad_terms() {
        let mut l = Lexicon::new();
        l.insert("dog", Pos::Noun).unwrap();
        assert!(l.insert("DOG", Pos::Noun).is_err());
        assert!(l.insert("a__b", Pos::Noun).is_err());
        assert!(l.insert("a-b", Pos::Noun).is_err());
        assert!(Lexicon::read_tsv("dog\tnoun\ncat".as_bytes()).is_err());
        assert!(Lexicon::read_tsv("dog\tfish\n".as_bytes()).is_err());
    }

    #[test]
    fn lexicon_tsv_round_trip() {
        let l = lex(&[("dog", Pos::Noun), ("run", Pos::Verb), ("red_wine", Pos::Noun)]);
        let back = Lexicon::read_tsv(l.to_tsv().as_bytes()).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.id("run"), Some(1));
        assert_eq!(back.max_words(), 2);
    }

    #[test]
    fn frequencies() {
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Noun)]);
        let f = count_frequencies(&l.encode(&["a", "b", "a"]), &l);
        assert_eq!(f.counts(), &[2, 1]);
        assert_eq!(f.total(), 3);

        let l = lex(&[("a", Pos::Noun)]);
        let f = count_frequencies(&l.encode(&["x"]), &l);
        assert_eq!(f.count(0), 0);
        assert_eq!(f.total(), 0);
    }

    #[test]
    fn unigram_skips_oov() {
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Noun)]);
        let ids = l.encode(&["a", "zz", "b"]);
        let ev = extract_unigram_contexts(&ids, &l);
        assert_eq!(
            ev,
            vec![
                CoocEvent { target: 0, context: 1, kind: EventKind::UnigramRight },
                CoocEvent { target: 1, context: 0, kind: EventKind::UnigramLeft },
            ]
        );
        assert!(extract_unigram_contexts(&l.encode(&["a"]), &l).is_empty());
    }

    #[test]
    fn unigram_neighbours_skip_multiword_terms() {
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Noun), ("a_b", Pos::Noun)]);
        let ids = l.encode(&["a", "a_b", "b"]);
        let mut ev = extract_unigram_contexts(&ids, &l);
        ev.sort();
        // a_b is a target, never a context
        assert!(ev.contains(&CoocEvent { target: 2, context: 0, kind: EventKind::UnigramLeft }));
        assert!(ev.contains(&CoocEvent { target: 2, context: 1, kind: EventKind::UnigramRight }));
        assert!(ev.contains(&CoocEvent { target: 1, context: 0, kind: EventKind::UnigramLeft }));
        assert!(ev.iter().all(|e| e.context != 2));
    }

    #[test]
    fn noun_contexts_hand_enumerated() {
        let l = lex(&[("dog", Pos::Noun), ("run", Pos::Verb), ("park", Pos::Noun)]);
        let mut ev = extract_noun_contexts(&l.encode(&["dog", "run", "park"]), &l);
        ev.sort();
        let mut want = vec![
            CoocEvent { target: 1, context: 0, kind: EventKind::Noun },
            CoocEvent { target: 1, context: 2, kind: EventKind::Noun },
            CoocEvent { target: 0, context: 2, kind: EventKind::Noun },
            CoocEvent { target: 2, context: 0, kind: EventKind::Noun },
        ];
        want.sort();
        assert_eq!(ev, want);

        let l = lex(&[("run", Pos::Verb), ("red", Pos::Adj)]);
        assert!(extract_noun_contexts(&l.encode(&["run", "red"]), &l).is_empty());
    }

    #[test]
    fn verb_patterns_hand_enumerated() {
        let l = lex(&[("eat", Pos::Verb), ("red", Pos::Adj), ("apple", Pos::Noun)]);
        let ev = extract_verb_patterns(&l.encode(&["eat", "red", "apple"]), &l, 2).unwrap();
        let left = verb_context_id(0, Side::Left);
        assert_eq!(
            ev,
            vec![
                CoocEvent { target: 1, context: left, kind: EventKind::VerbPattern },
                CoocEvent { target: 2, context: left, kind: EventKind::VerbPattern },
            ]
        );
        // outside the window
        let ev = extract_verb_patterns(&l.encode(&["eat", "x", "y", "apple"]), &l, 2).unwrap();
        assert!(ev.is_empty());
        assert_ne!(verb_context_id(0, Side::Left), verb_context_id(0, Side::Right));
        assert_eq!(split_verb_context(verb_context_id(7, Side::Right)), (7, Side::Right));
        assert!(extract_verb_patterns(&[], &l, 0).is_err());
    }

    #[test]
    fn collect_is_shard_independent() {
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Verb), ("c", Pos::Adj)]);
        let one = CorpusStats::collect(&["a b c a", "c b a"], &l, 3).unwrap();
        let two = CorpusStats::collect(&["c b a", "a b c a"], &l, 3).unwrap();
        assert_eq!(one.unigram, two.unigram);
        assert_eq!(one.noun, two.noun);
        assert_eq!(one.verb, two.verb);
        assert_eq!(one.freq, two.freq);
        assert_eq!(one.n_tokens, 7);
    }
}
