//! Seeded generator for a small corpus with planted structure and the
//! questions whose answers follow from it.
//!
//! Every content term gets a topic (which nouns surround it) and a role
//! (which verbs it sits next to, and on which side):
//!
//! * relation `r` pairs `(x, y)`: `x` in source role `2r`, `y` in target
//!   role `2r + 1`, both with random topics;
//! * modifiers and heads each have a topic, in the modifier and head role;
//! * the synonym of compound `m h` mixes the topics of `m` and `h` and takes
//!   the head role, exactly like the pseudo-unigram `m_h` would.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::question::{ParadigmSet, Question, QuestionKind, Rating};
use crate::corpus::{Lexicon, Pos};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticParams {
    pub n_topics: usize,
    pub nouns_per_topic: usize,
    pub n_relations: usize,
    pub pairs_per_relation: usize,
    pub n_modifiers: usize,
    pub n_heads: usize,
    /// The first `pseudo_modifiers x pseudo_heads` compounds are in the
    /// lexicon as pseudo-unigrams.
    pub pseudo_modifiers: usize,
    pub pseudo_heads: usize,
    /// Compounds outside the pseudo-unigram grid that get a one-word synonym
    /// (and a paraphrase question).
    pub n_synonyms: usize,
    pub n_fillers: usize,
    pub sentences_per_term: usize,
    pub pair_sentences: usize,
    /// Share of synonyms that also occur as `s the m h`.
    pub appositive_rate: f64,
    pub appositive_sentences: usize,
    /// Chance that a sentence ignores the planted topic or role.
    pub noise: f64,
    pub solutions_per_stem: usize,
}

impl Default for SyntheticParams {
    /// About 50k tokens over a 200-term lexicon, 60 analogy and 60
    /// paraphrase questions.
    fn default() -> Self {
        SyntheticParams {
            n_topics: 8,
            nouns_per_topic: 4,
            n_relations: 4,
            pairs_per_relation: 5,
            n_modifiers: 10,
            n_heads: 10,
            pseudo_modifiers: 5,
            pseudo_heads: 4,
            n_synonyms: 60,
            n_fillers: 8,
            sentences_per_term: 60,
            pair_sentences: 10,
            appositive_rate: 0.5,
            appositive_sentences: 3,
            noise: 0.5,
            solutions_per_stem: 3,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("synthetic params: {what}")));
        if self.n_topics < 2 || self.nouns_per_topic < 2 {
            return bad("need at least 2 topics of 2 nouns");
        }
        if self.n_relations < 2 || self.pairs_per_relation < 4 {
            return bad("need at least 2 relations of 4 pairs");
        }
        if self.solutions_per_stem >= self.pairs_per_relation {
            return bad("solutions_per_stem must be below pairs_per_relation");
        }
        if self.n_modifiers < 3 || self.n_heads < 3 {
            return bad("need at least 3 modifiers and 3 heads");
        }
        if self.pseudo_modifiers > self.n_modifiers || self.pseudo_heads > self.n_heads {
            return bad("pseudo-unigram grid larger than the compound grid");
        }
        let free = self.n_modifiers * self.n_heads - self.pseudo_modifiers * self.pseudo_heads;
        if self.n_synonyms < 3 || self.n_synonyms > free {
            return bad("n_synonyms must lie in 3..=free compounds");
        }
        if !(0.0..=1.0).contains(&self.noise) || !(0.0..=1.0).contains(&self.appositive_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if self.sentences_per_term == 0 {
            return bad("sentences_per_term must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    /// One sentence per line.
    pub corpus: Vec<String>,
    pub lexicon: Lexicon,
    pub analogies: Vec<Question>,
    pub paraphrases: Vec<Question>,
    pub paradigms: Vec<ParadigmSet>,
}

impl SyntheticBenchmark {
    pub fn corpus_text(&self) -> String {
        let mut s = self.corpus.join("\n");
        s.push('\n');
        s
    }

    pub fn n_tokens(&self) -> usize {
        self.corpus.iter().map(|l| l.split_whitespace().count()).sum()
    }
}

const STOP_WORDS: [&str; 5] = ["the", "a", "of", "and", "to"];

struct Gen<'a> {
    p: &'a SyntheticParams,
    rng: ChaCha8Rng,
    topic_nouns: Vec<Vec<String>>,
    /// Two verbs per role.
    verbs: Vec<[String; 2]>,
    fillers: Vec<String>,
    lines: Vec<String>,
}

impl Gen<'_> {
    fn n_roles(&self) -> usize {
        2 * self.p.n_relations + 2
    }

    /// Term sits left of its verb in even roles, right of it in odd ones.
    fn sentence(&mut self, words: &str, topics: &[usize], role: usize, noise: f64) {
        let topic = if self.rng.random_bool(noise) {
            self.rng.random_range(0..self.p.n_topics)
        } else {
            *topics.choose(&mut self.rng).expect("at least one topic")
        };
        let role = if self.rng.random_bool(noise) {
            self.rng.random_range(0..self.n_roles())
        } else {
            role
        };
        let nouns = &self.topic_nouns[topic];
        let t1 = nouns.choose(&mut self.rng).unwrap().clone();
        let t2 = nouns.choose(&mut self.rng).unwrap().clone();
        let verb = self.verbs[role].choose(&mut self.rng).unwrap().clone();
        let stop = STOP_WORDS.choose(&mut self.rng).unwrap();
        let mut line = if role % 2 == 0 {
            format!("{stop} {t1} {words} {verb} {t2}")
        } else {
            format!("{t1} {verb} {words} {stop} {t2}")
        };
        if self.rng.random_bool(0.3) {
            line.push(' ');
            line.push_str(self.fillers.choose(&mut self.rng).unwrap());
        }
        self.lines.push(line);
    }
}

/// Generates corpus, lexicon, questions and paradigms from one seed.
pub fn generate_synthetic_benchmark(seed: u64, p: &SyntheticParams) -> Result<SyntheticBenchmark> {
    p.validate()?;
    let mut lex = Lexicon::new();
    let mut g = Gen {
        p,
        rng: ChaCha8Rng::seed_from_u64(seed),
        topic_nouns: Vec::new(),
        verbs: Vec::new(),
        fillers: Vec::new(),
        lines: Vec::new(),
    };

    for t in 0..p.n_topics {
        let nouns: Vec<String> = (0..p.nouns_per_topic).map(|i| format!("t{t}n{i}")).collect();
        for n in &nouns {
            lex.insert(n, Pos::Noun)?;
        }
        g.topic_nouns.push(nouns);
    }
    for role in 0..g.n_roles() {
        let vs = [format!("v{role}a"), format!("v{role}b")];
        for v in &vs {
            lex.insert(v, Pos::Verb)?;
        }
        g.verbs.push(vs);
    }
    let mod_role = 2 * p.n_relations;
    let head_role = mod_role + 1;

    // relation pairs
    let mut pairs: Vec<Vec<[String; 2]>> = Vec::new();
    for r in 0..p.n_relations {
        let mut rel = Vec::new();
        for i in 0..p.pairs_per_relation {
            let pair = [format!("r{r}s{i}"), format!("r{r}o{i}")];
            lex.insert(&pair[0], Pos::Noun)?;
            lex.insert(&pair[1], Pos::Noun)?;
            rel.push(pair);
        }
        pairs.push(rel);
    }
    let modifiers: Vec<String> = (0..p.n_modifiers).map(|i| format!("mod{i}")).collect();
    let heads: Vec<String> = (0..p.n_heads).map(|j| format!("head{j}")).collect();
    for m in &modifiers {
        lex.insert(m, Pos::Adj)?;
    }
    for h in &heads {
        lex.insert(h, Pos::Noun)?;
    }
    for i in 0..p.pseudo_modifiers {
        for j in 0..p.pseudo_heads {
            lex.insert(&format!("{}_{}", modifiers[i], heads[j]), Pos::Noun)?;
        }
    }
    let mut free: Vec<(usize, usize)> = (0..p.n_modifiers)
        .flat_map(|i| (0..p.n_heads).map(move |j| (i, j)))
        .filter(|&(i, j)| i >= p.pseudo_modifiers || j >= p.pseudo_heads)
        .collect();
    free.shuffle(&mut g.rng);
    free.truncate(p.n_synonyms);
    free.sort();
    let synonyms: Vec<String> = free.iter().map(|(i, j)| format!("syn{i}x{j}")).collect();
    for s in &synonyms {
        lex.insert(s, Pos::Noun)?;
    }
    g.fillers = (0..p.n_fillers).map(|i| format!("fill{i}")).collect();
    for f in &g.fillers {
        lex.insert(f, Pos::Adv)?;
    }

    // sentences
    let n = p.sentences_per_term;
    for (r, rel) in pairs.iter().enumerate() {
        for (i, [x, y]) in rel.iter().enumerate() {
            // later pairs are noisier, hence less typical of their relation
            let noise = (p.noise * (1.0 + i as f64 / p.pairs_per_relation as f64)).min(1.0);
            let (tx, ty) = (g.rng.random_range(0..p.n_topics), g.rng.random_range(0..p.n_topics));
            for _ in 0..n {
                g.sentence(x, &[tx], 2 * r, noise);
                g.sentence(y, &[ty], 2 * r + 1, noise);
            }
            for _ in 0..p.pair_sentences {
                let v1 = g.verbs[2 * r].choose(&mut g.rng).unwrap().clone();
                let v2 = g.verbs[2 * r + 1].choose(&mut g.rng).unwrap().clone();
                let stop = STOP_WORDS.choose(&mut g.rng).unwrap();
                g.lines.push(format!("{x} {v1} {stop} {v2} {y}"));
            }
        }
    }
    let mod_topic: Vec<usize> = (0..p.n_modifiers).map(|_| g.rng.random_range(0..p.n_topics)).collect();
    let head_topic: Vec<usize> = (0..p.n_heads).map(|_| g.rng.random_range(0..p.n_topics)).collect();
    for (i, m) in modifiers.iter().enumerate() {
        for _ in 0..n {
            g.sentence(m, &[mod_topic[i]], mod_role, p.noise);
        }
    }
    for (j, h) in heads.iter().enumerate() {
        for _ in 0..n {
            g.sentence(h, &[head_topic[j]], head_role, p.noise);
        }
    }
    for i in 0..p.pseudo_modifiers {
        for j in 0..p.pseudo_heads {
            let bigram = format!("{} {}", modifiers[i], heads[j]);
            for _ in 0..n {
                g.sentence(&bigram, &[mod_topic[i], head_topic[j]], head_role, p.noise);
            }
        }
    }
    for (&(i, j), s) in free.iter().zip(&synonyms) {
        for _ in 0..n {
            g.sentence(s, &[mod_topic[i], head_topic[j]], head_role, p.noise);
        }
        if g.rng.random_bool(p.appositive_rate) {
            for _ in 0..p.appositive_sentences {
                g.lines.push(format!("{s} the {} {}", modifiers[i], heads[j]));
            }
        }
    }
    let mut corpus = std::mem::take(&mut g.lines);
    corpus.shuffle(&mut g.rng);

    let analogies = analogy_questions(&mut g.rng, p, &pairs, &g.topic_nouns);
    let paraphrases = paraphrase_questions(&mut g.rng, &free, &synonyms, &modifiers, &heads);
    let paradigms = pairs
        .iter()
        .enumerate()
        .map(|(r, rel)| {
            let mut ratings: Vec<Rating> = rel
                .iter()
                .enumerate()
                .map(|(i, pair)| Rating {
                    pair: pair.clone(),
                    score: (rel.len() - i) as f64,
                })
                .collect();
            ratings.extend(rel.iter().map(|[x, y]| Rating {
                pair: [y.clone(), x.clone()],
                score: 0.0,
            }));
            ParadigmSet {
                subcategory: format!("rel{r}"),
                pairs: rel.iter().take(3).cloned().collect(),
                ratings,
            }
        })
        .collect();

    Ok(SyntheticBenchmark {
        corpus,
        lexicon: lex,
        analogies,
        paraphrases,
        paradigms,
    })
}

fn analogy_questions(
    rng: &mut ChaCha8Rng,
    p: &SyntheticParams,
    pairs: &[Vec<[String; 2]>],
    topic_nouns: &[Vec<String>],
) -> Vec<Question> {
    let mut out = Vec::new();
    for (r, rel) in pairs.iter().enumerate() {
        for (i, stem) in rel.iter().enumerate() {
            let others: Vec<usize> = (0..rel.len()).filter(|&j| j != i).collect();
            for &j in others.choose_multiple(rng, p.solutions_per_stem) {
                let [sx, sy] = &rel[j];
                let mut choices: Vec<Vec<String>> = vec![vec![sx.clone(), sy.clone()]];
                // a pair of another relation
                let r2 = (r + rng.random_range(1..pairs.len())) % pairs.len();
                let [ox, oy] = pairs[r2].choose(rng).unwrap();
                choices.push(vec![ox.clone(), oy.clone()]);
                // two sources of this relation
                let srcs: Vec<usize> = (0..rel.len()).filter(|&k| k != j).collect();
                let picked: Vec<&usize> = srcs.choose_multiple(rng, 2).collect();
                choices.push(vec![rel[*picked[0]][0].clone(), rel[*picked[1]][0].clone()]);
                // the solution reversed
                choices.push(vec![sy.clone(), sx.clone()]);
                // unrelated topic nouns
                let t = rng.random_range(0..topic_nouns.len());
                let pick: Vec<&String> = topic_nouns[t].choose_multiple(rng, 2).collect();
                choices.push(vec![pick[0].clone(), pick[1].clone()]);

                let mut order: Vec<usize> = (0..5).collect();
                order.shuffle(rng);
                let solution = order.iter().position(|&o| o == 0).unwrap();
                out.push(Question {
                    id: format!("a{}", out.len()),
                    kind: QuestionKind::Analogy5,
                    stem: stem.to_vec(),
                    choices: order.iter().map(|&o| choices[o].clone()).collect(),
                    solution,
                });
            }
        }
    }
    out
}

fn paraphrase_questions(
    rng: &mut ChaCha8Rng,
    compounds: &[(usize, usize)],
    synonyms: &[String],
    modifiers: &[String],
    heads: &[String],
) -> Vec<Question> {
    let mut out = Vec::new();
    for (q, (&(i, j), syn)) in compounds.iter().zip(synonyms).enumerate() {
        let m2 = (i + rng.random_range(1..modifiers.len())) % modifiers.len();
        let h2 = (j + rng.random_range(1..heads.len())) % heads.len();
        // synonyms of compounds sharing no word with the stem
        let unrelated: Vec<&String> = compounds
            .iter()
            .zip(synonyms)
            .filter(|((a, b), _)| *a != i && *b != j)
            .map(|(_, s)| s)
            .collect();
        let mut choices = vec![
            syn.clone(),
            modifiers[i].clone(),
            heads[j].clone(),
            modifiers[m2].clone(),
            heads[h2].clone(),
        ];
        choices.extend(unrelated.choose_multiple(rng, 2).map(|s| (*s).clone()));
        if choices.len() < 7 {
            continue;
        }
        let mut order: Vec<usize> = (0..7).collect();
        order.shuffle(rng);
        out.push(Question {
            id: format!("p{q}"),
            kind: QuestionKind::Paraphrase7,
            stem: vec![modifiers[i].clone(), heads[j].clone()],
            choices: order.iter().map(|&o| vec![choices[o].clone()]).collect(),
            solution: order.iter().position(|&o| o == 0).unwrap(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn default_sizes() {
        let b = generate_synthetic_benchmark(7, &SyntheticParams::default()).unwrap();
        assert_eq!(b.lexicon.len(), 200);
        let tokens = b.n_tokens();
        assert!((40_000..=60_000).contains(&tokens), "{tokens} tokens");
        assert_eq!(b.analogies.len(), 60);
        assert_eq!(b.paraphrases.len(), 60);
        assert_eq!(b.paradigms.len(), 4);
        for q in b.analogies.iter().chain(&b.paraphrases) {
            q.validate().unwrap();
            for t in q.stem.iter().chain(q.choices.iter().flatten()) {
                assert!(b.lexicon.id(t).is_some(), "{t} not in lexicon");
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let p = SyntheticParams::default();
        let a = generate_synthetic_benchmark(3, &p).unwrap();
        assert_eq!(a, generate_synthetic_benchmark(3, &p).unwrap());
        assert_ne!(a.corpus, generate_synthetic_benchmark(4, &p).unwrap().corpus);
    }

    #[test]
    fn pseudo_unigrams_occur_in_the_corpus() {
        let b = generate_synthetic_benchmark(1, &SyntheticParams::default()).unwrap();
        let hits = b
            .corpus
            .iter()
            .filter(|l| tokenize(l, &b.lexicon).iter().any(|t| t == "mod0_head0"))
            .count();
        assert!(hits >= 40, "{hits}");
    }

    #[test]
    fn bad_params_are_rejected() {
        let p = SyntheticParams {
            n_synonyms: 1000,
            ..SyntheticParams::default()
        };
        assert!(generate_synthetic_benchmark(0, &p).is_err());
    }
}
