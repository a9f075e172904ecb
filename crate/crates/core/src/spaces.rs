//! The three word spaces: the raw PPMI matrix over left/right unigram
//! contexts, the domain space (nearest-noun contexts) and the function space
//! (verb-pattern contexts), plus their on-disk bundle.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CoocEvent, CorpusStats, EventKind, FreqTable, Lexicon, Pos, Side};
use crate::error::{Error, Result};
use crate::linalg::{cosine_unchecked, ppmi_transform, project_rows, truncated_svd, DenseMatrix, SparseMatrix, SvdFactors};

/// The `(k, p)` grid over which similarity features are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub k_values: Vec<usize>,
    pub p_values: Vec<f64>,
}

impl Default for GridSpec {
    /// k = 100, 200, ..., 1000 and p = 0.0, 0.1, ..., 1.0.
    fn default() -> Self {
        GridSpec {
            k_values: (1..=10).map(|i| i * 100).collect(),
            p_values: (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl GridSpec {
    pub fn n_k(&self) -> usize {
        self.k_values.len()
    }

    pub fn n_p(&self) -> usize {
        self.p_values.len()
    }

    pub fn max_k(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let k_ok = !self.k_values.is_empty()
            && self.k_values[0] >= 1
            && self.k_values.windows(2).all(|w| w[0] < w[1]);
        let p_ok = !self.p_values.is_empty()
            && self.p_values.iter().all(|p| (0.0..=1.0).contains(p))
            && self.p_values.windows(2).all(|w| w[0] < w[1]);
        if k_ok && p_ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid grid {self:?}")))
        }
    }

    /// The k values usable against factors of rank `rank`.
    ///
    /// When the grid fits they are returned unchanged. Otherwise they are
    /// replaced by `n_k` evenly spaced ranks in `[1, rank]`, keeping the
    /// feature layout intact (values may repeat when `rank < n_k`).
    pub fn resolve_k(&self, rank: usize) -> Vec<usize> {
        if self.max_k() <= rank {
            return self.k_values.clone();
        }
        let n_k = self.n_k();
        (1..=n_k)
            .map(|i| (((i * rank) as f64 / n_k as f64).round() as usize).clamp(1, rank.max(1)))
            .collect()
    }
}

/// PPMI over (term, unigram, hand) with two columns per lexicon unigram.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPpmiSpace {
    matrix: SparseMatrix,
    /// Lexicon row -> unigram column pair index.
    unigram_index: Vec<Option<u32>>,
}

fn unigram_index(lexicon: &Lexicon) -> (Vec<Option<u32>>, usize) {
    let mut next = 0u32;
    let index = (0..lexicon.len())
        .map(|id| {
            lexicon.is_unigram(id).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    (index, next as usize)
}

impl RawPpmiSpace {
    pub fn build(events: &[CoocEvent], lexicon: &Lexicon) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyCounts);
        }
        let (index, n_unigrams) = unigram_index(lexicon);
        let mut triplets = Vec::with_capacity(events.len());
        for e in events {
            let hand = match e.kind {
                EventKind::UnigramLeft => 0,
                EventKind::UnigramRight => 1,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "raw PPMI space takes unigram events, got {other:?}"
                    )))
                }
            };
            let col = index
                .get(e.context)
                .copied()
                .flatten()
                .ok_or_else(|| Error::InvalidInput(format!("context {} is not a unigram", e.context)))?;
            if e.target >= lexicon.len() {
                return Err(Error::InvalidInput(format!("target {} outside lexicon", e.target)));
            }
            triplets.push((e.target as u32, 2 * col + hand, 1.0));
        }
        let counts = SparseMatrix::from_triplets(lexicon.len(), 2 * n_unigrams, triplets)?;
        Ok(RawPpmiSpace {
            matrix: ppmi_transform(&counts)?,
            unigram_index: index,
        })
    }

    fn from_parts(matrix: SparseMatrix, lexicon: &Lexicon) -> Result<Self> {
        let (index, n_unigrams) = unigram_index(lexicon);
        if matrix.n_rows() != lexicon.len() || matrix.n_cols() != 2 * n_unigrams {
            return Err(Error::format("raw_ppmi.bin", "shape does not match lexicon"));
        }
        Ok(RawPpmiSpace {
            matrix,
            unigram_index: index,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// PPMI(x, y, hand): association of row `x` with `y` seen on that side.
    /// Zero whenever either term has no row or column.
    pub fn ppmi(&self, x: Option<usize>, y: Option<usize>, hand: Side) -> f64 {
        let (Some(x), Some(y)) = (x, y) else { return 0.0 };
        let Some(col) = self.unigram_index.get(y).copied().flatten() else {
            return 0.0;
        };
        let hand = if hand == Side::Left { 0 } else { 1 };
        self.matrix.get(x, (2 * col + hand) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentKind {
    Domain,
    Function,
}

type ProjectionCache = RwLock<HashMap<(usize, u64), Arc<DenseMatrix>>>;

/// SVD-smoothed PPMI space with lazily cached `U_k Sigma_k^p` projections.
#[derive(Debug)]
pub struct LatentSpace {
    kind: LatentKind,
    factors: SvdFactors,
    n_contexts: usize,
    cache: ProjectionCache,
}

impl PartialEq for LatentSpace {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.factors == other.factors
    }
}

/// Column of a context within a latent count matrix, if it belongs there.
fn latent_columns(lexicon: &Lexicon, kind: LatentKind) -> (Vec<Option<u32>>, usize) {
    let wanted = match kind {
        LatentKind::Domain => Pos::Noun,
        LatentKind::Function => Pos::Verb,
    };
    let mut next = 0u32;
    let per_term: Vec<Option<u32>> = (0..lexicon.len())
        .map(|id| {
            (lexicon.pos(id) == wanted).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    match kind {
        LatentKind::Domain => (per_term, next as usize),
        // two columns per verb: (verb, left) and (verb, right)
        LatentKind::Function => {
            let cols = (0..2 * lexicon.len())
                .map(|ctx| per_term[ctx / 2].map(|c| 2 * c + (ctx % 2) as u32))
                .collect();
            (cols, 2 * next as usize)
        }
    }
}

impl LatentSpace {
    /// Counts -> PPMI -> truncated SVD at `min(rank, min(rows, cols))`.
    pub fn build(events: &[CoocEvent], lexicon: &Lexicon, kind: LatentKind, rank: usize) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyCounts);
        }
        let expected = match kind {
            LatentKind::Domain => EventKind::Noun,
            LatentKind::Function => EventKind::VerbPattern,
        };
        let (columns, n_cols) = latent_columns(lexicon, kind);
        let mut triplets = Vec::with_capacity(events.len());
        for e in events {
            if e.kind != expected {
                return Err(Error::InvalidInput(format!(
                    "{kind:?} space takes {expected:?} events, got {:?}",
                    e.kind
                )));
            }
            let col = columns
                .get(e.context)
                .copied()
                .flatten()
                .ok_or_else(|| Error::InvalidInput(format!("context {} has wrong POS", e.context)))?;
            if e.target >= lexicon.len() {
                return Err(Error::InvalidInput(format!("target {} outside lexicon", e.target)));
            }
            triplets.push((e.target as u32, col, 1.0));
        }
        let counts = SparseMatrix::from_triplets(lexicon.len(), n_cols, triplets)?;
        let ppmi = ppmi_transform(&counts)?;
        if ppmi.nnz() == 0 {
            return Err(Error::EmptyCounts);
        }
        let rank = rank.min(ppmi.n_rows()).min(ppmi.n_cols());
        let factors = truncated_svd(&ppmi, rank)?;
        Ok(LatentSpace::from_factors(kind, factors))
    }

    pub fn from_factors(kind: LatentKind, factors: SvdFactors) -> Self {
        LatentSpace {
            kind,
            n_contexts: factors.v.rows(),
            factors,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn kind(&self) -> LatentKind {
        self.kind
    }

    pub fn factors(&self) -> &SvdFactors {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.rank()
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    /// `U_k Sigma_k^p`, computed once per `(k, p)` and shared afterwards.
    pub fn projection(&self, k: usize, p: f64) -> Result<Arc<DenseMatrix>> {
        let key = (k, p.to_bits());
        if let Some(hit) = self.cache.read().expect("projection cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let fresh = Arc::new(project_rows(&self.factors, k, p)?);
        let mut cache = self.cache.write().expect("projection cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(fresh)))
    }

    /// Cosine between the projected rows of `x` and `y`; 0 if either is unmapped.
    pub fn similarity(&self, x: Option<usize>, y: Option<usize>, k: usize, p: f64) -> Result<f64> {
        let proj = self.projection(k, p)?;
        let (Some(x), Some(y)) = (x, y) else { return Ok(0.0) };
        if x >= proj.rows() || y >= proj.rows() {
            return Ok(0.0);
        }
        Ok(cosine_unchecked(proj.row(x), proj.row(y)))
    }

    /// Similarities at every grid point, k-major then p ascending.
    pub fn grid_similarities(&self, x: Option<usize>, y: Option<usize>, grid: &GridSpec) -> Result<Vec<f64>> {
        let ks = grid.resolve_k(self.rank());
        let mut out = Vec::with_capacity(ks.len() * grid.n_p());
        for &k in &ks {
            for &p in &grid.p_values {
                out.push(self.similarity(x, y, k, p)?);
            }
        }
        Ok(out)
    }
}

/// Recorded alongside a bundle in `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub format_version: u32,
    pub corpus_sha256: String,
    pub n_tokens: usize,
    pub n_terms: usize,
    pub verb_window: usize,
    pub requested_rank: usize,
    pub domain_rank: usize,
    pub function_rank: usize,
    pub raw_ppmi_shape: [usize; 2],
    pub domain_shape: [usize; 2],
    pub function_shape: [usize; 2],
    pub grid: GridSpec,
    pub domain_k_values: Vec<usize>,
    pub function_k_values: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// SVD rank to retain; defaults to the largest grid k.
    pub rank: Option<usize>,
    pub verb_window: usize,
    pub grid: GridSpec,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            rank: None,
            verb_window: 5,
            grid: GridSpec::default(),
        }
    }
}

/// Lexicon, frequencies and all three spaces built from one corpus.
#[derive(Debug)]
pub struct SpaceBundle {
    pub lexicon: Lexicon,
    pub freq: FreqTable,
    pub raw: RawPpmiSpace,
    pub domain: LatentSpace,
    pub function: LatentSpace,
    pub meta: BundleMeta,
}

pub fn corpus_checksum<S: AsRef<str>>(texts: &[S]) -> String {
    let mut h = Sha256::new();
    for t in texts {
        let bytes = t.as_ref().as_bytes();
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

const BUNDLE_VERSION: u32 = 1;

impl SpaceBundle {
    pub fn build<S: AsRef<str> + Sync>(texts: &[S], lexicon: Lexicon, opts: &BuildOptions) -> Result<Self> {
        opts.grid.validate()?;
        if lexicon.is_empty() {
            return Err(Error::InvalidInput("empty lexicon".into()));
        }
        let stats = CorpusStats::collect(texts, &lexicon, opts.verb_window)?;
        if stats.freq.total() == 0 {
            return Err(Error::EmptyCounts);
        }
        let requested = opts.rank.unwrap_or_else(|| opts.grid.max_k());
        log::info!(
            "corpus: {} tokens, {} unigram / {} noun / {} verb events",
            stats.n_tokens,
            stats.unigram.len(),
            stats.noun.len(),
            stats.verb.len()
        );
        let raw = RawPpmiSpace::build(&stats.unigram, &lexicon)?;
        let domain = LatentSpace::build(&stats.noun, &lexicon, LatentKind::Domain, requested)?;
        let function = LatentSpace::build(&stats.verb, &lexicon, LatentKind::Function, requested)?;
        let meta = BundleMeta {
            format_version: BUNDLE_VERSION,
            corpus_sha256: corpus_checksum(texts),
            n_tokens: stats.n_tokens,
            n_terms: lexicon.len(),
            verb_window: opts.verb_window,
            requested_rank: requested,
            domain_rank: domain.rank(),
            function_rank: function.rank(),
            raw_ppmi_shape: [raw.matrix.n_rows(), raw.matrix.n_cols()],
            domain_shape: [lexicon.len(), domain.n_contexts()],
            function_shape: [lexicon.len(), function.n_contexts()],
            domain_k_values: opts.grid.resolve_k(domain.rank()),
            function_k_values: opts.grid.resolve_k(function.rank()),
            grid: opts.grid.clone(),
        };
        Ok(SpaceBundle {
            lexicon,
            freq: stats.freq,
            raw,
            domain,
            function,
            meta,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.meta.grid
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.lexicon.id(term)
    }

    pub fn ppmi(&self, x: &str, y: &str, hand: Side) -> f64 {
        self.raw.ppmi(self.id(x), self.id(y), hand)
    }

    pub fn dom(&self, x: &str, y: &str, k: usize, p: f64) -> Result<f64> {
        self.domain.similarity(self.id(x), self.id(y), k, p)
    }

    pub fn fun(&self, x: &str, y: &str, k: usize, p: f64) -> Result<f64> {
        self.function.similarity(self.id(x), self.id(y), k, p)
    }

    /// Writes `raw_ppmi.bin`, `domain.factors`, `function.factors`,
    /// `lexicon.tsv`, `freq.tsv` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("raw_ppmi.bin"))?);
        self.raw.matrix.write_to(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("domain.factors"))?);
        self.domain.factors.write_to(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("function.factors"))?);
        self.function.factors.write_to(&mut w)?;
        w.flush()?;
        fs::write(dir.join("lexicon.tsv"), self.lexicon.to_tsv())?;
        fs::write(dir.join("freq.tsv"), self.freq.to_tsv(&self.lexicon))?;
        let mut meta = serde_json::to_string_pretty(&self.meta)?;
        meta.push('\n');
        fs::write(dir.join("meta.json"), meta)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let lexicon = Lexicon::read_tsv(BufReader::new(File::open(dir.join("lexicon.tsv"))?))?;
        let freq = FreqTable::read_tsv(BufReader::new(File::open(dir.join("freq.tsv"))?), &lexicon)?;
        let meta: BundleMeta = serde_json::from_reader(BufReader::new(File::open(dir.join("meta.json"))?))?;
        if meta.format_version != BUNDLE_VERSION {
            return Err(Error::format("meta.json", format!("unsupported version {}", meta.format_version)));
        }
        let matrix = SparseMatrix::read_from(&mut BufReader::new(File::open(dir.join("raw_ppmi.bin"))?))?;
        let raw = RawPpmiSpace::from_parts(matrix, &lexicon)?;
        let read_factors = |name: &str| -> Result<SvdFactors> {
            let f = SvdFactors::read_from(&mut BufReader::new(File::open(dir.join(name))?))?;
            if f.u.rows() != lexicon.len() {
                return Err(Error::format("factors", format!("{name} rows do not match lexicon")));
            }
            Ok(f)
        };
        let domain = LatentSpace::from_factors(LatentKind::Domain, read_factors("domain.factors")?);
        let function = LatentSpace::from_factors(LatentKind::Function, read_factors("function.factors")?);
        meta.grid.validate()?;
        Ok(SpaceBundle {
            lexicon,
            freq,
            raw,
            domain,
            function,
            meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_unigram_contexts, tokenize};

    fn lex(entries: &[(&str, Pos)]) -> Lexicon {
        Lexicon::from_entries(entries.iter().copied()).unwrap()
    }

    fn unigram_events(text: &str, l: &Lexicon) -> Vec<CoocEvent> {
        extract_unigram_contexts(&l.encode(&tokenize(text, l)), l)
    }

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        assert_eq!(g.n_k(), 10);
        assert_eq!(g.n_p(), 11);
        assert_eq!(g.k_values[0], 100);
        assert_eq!(g.max_k(), 1000);
        assert_eq!(g.p_values[3], 0.3);
        g.validate().unwrap();
    }

    #[test]
    fn grid_clamping() {
        let g = GridSpec::default();
        assert_eq!(g.resolve_k(1000), g.k_values);
        assert_eq!(g.resolve_k(50), vec![5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
        let small = g.resolve_k(3);
        assert_eq!(small.len(), 10);
        assert!(small.iter().all(|&k| (1..=3).contains(&k)));
        assert!(small.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*small.last().unwrap(), 3);
    }

    #[test]
    fn raw_ppmi_hand_counts() {
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Noun)]);
        let raw = RawPpmiSpace::build(&unigram_events("a b a b", &l), &l).unwrap();
        assert_eq!(raw.matrix().n_cols(), 4);
        // b sees a on its left twice, a sees b on its right twice
        assert!(raw.ppmi(Some(1), Some(0), Side::Left) > 0.0);
        assert!(raw.ppmi(Some(0), Some(1), Side::Right) > 0.0);
        assert_eq!(raw.ppmi(None, Some(1), Side::Left), 0.0);
        assert_eq!(raw.ppmi(Some(0), None, Side::Left), 0.0);
    }

    #[test]
    fn raw_ppmi_exact_counting_is_symmetric() {
        // Starting and ending on the same token makes the row and column
        // marginals line up, so exact counts give exact symmetry.
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Noun), ("c", Pos::Noun)]);
        let raw = RawPpmiSpace::build(&unigram_events("c a b c a c b b a c c a b c", &l), &l).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let l_xy = raw.ppmi(Some(x), Some(y), Side::Left);
                let r_yx = raw.ppmi(Some(y), Some(x), Side::Right);
                assert!((l_xy - r_yx).abs() < 1e-12, "{x} {y}");
            }
        }
    }

    #[test]
    fn latent_rejects_wrong_kind_and_empty() {
        let l = lex(&[("a", Pos::Noun)]);
        assert!(matches!(
            LatentSpace::build(&[], &l, LatentKind::Domain, 2),
            Err(Error::EmptyCounts)
        ));
        let ev = [CoocEvent { target: 0, context: 0, kind: EventKind::UnigramLeft }];
        assert!(LatentSpace::build(&ev, &l, LatentKind::Domain, 2).is_err());
    }

    #[test]
    fn identical_contexts_give_unit_similarity() {
        let l = lex(&[
            ("x", Pos::Adj),
            ("y", Pos::Adj),
            ("z", Pos::Adj),
            ("n1", Pos::Noun),
            ("n2", Pos::Noun),
            ("n3", Pos::Noun),
        ]);
        let ev = |t: usize, c: usize| CoocEvent { target: t, context: c, kind: EventKind::Noun };
        let events = vec![ev(0, 3), ev(0, 4), ev(1, 3), ev(1, 4), ev(2, 5), ev(3, 4), ev(4, 5), ev(5, 3)];
        let space = LatentSpace::build(&events, &l, LatentKind::Domain, 3).unwrap();
        let mut checked = 0;
        for k in 1..=space.rank() {
            for p in [0.0, 0.5, 1.0] {
                // a row orthogonal to the leading k factors projects to zero
                if space.projection(k, p).unwrap().row(0).iter().all(|v| v.abs() < 1e-12) {
                    continue;
                }
                let s = space.similarity(Some(0), Some(1), k, p).unwrap();
                assert!((s - 1.0).abs() < 1e-9, "k={k} p={p} s={s}");
                checked += 1;
            }
        }
        assert!(checked >= 3);
        assert_eq!(space.similarity(None, Some(1), 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cache_matches_fresh_projection() {
        let l = lex(&[("a", Pos::Noun), ("b", Pos::Noun), ("c", Pos::Noun), ("d", Pos::Verb)]);
        let ev = |t: usize, c: usize| CoocEvent { target: t, context: c, kind: EventKind::Noun };
        let events = vec![ev(0, 1), ev(0, 2), ev(1, 0), ev(2, 1), ev(3, 0), ev(3, 2), ev(2, 2)];
        let space = LatentSpace::build(&events, &l, LatentKind::Domain, 3).unwrap();
        let cached = space.projection(2, 0.3).unwrap();
        let again = space.projection(2, 0.3).unwrap();
        assert!(Arc::ptr_eq(&cached, &again));
        assert_eq!(*cached, project_rows(space.factors(), 2, 0.3).unwrap());
    }
}
