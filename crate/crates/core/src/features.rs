//! The four-block feature vector for an n-tuple of terms.
//!
//! Layout, for a tuple `x_0 .. x_{n-1}`:
//!
//! 1. `LF[i]` for `i` ascending.
//! 2. `PPMI[i,j,left]`, `PPMI[i,j,right]` for ordered pairs `i != j` in
//!    lexicographic order.
//! 3. `DOM[i,j,k,p]` for `i < j` lexicographic, then k ascending, then p
//!    ascending.
//! 4. `FUN[i,j,k,p]`, same order as block 3.
//!
//! Disabled blocks, and PPMI pairs outside an enabled pair subset, are
//! omitted rather than zeroed.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{FreqTable, Side};
use crate::error::{Error, Result};
use crate::spaces::{GridSpec, SpaceBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSet {
    pub lf: bool,
    pub ppmi: bool,
    pub dom: bool,
    pub fun: bool,
}

impl BlockSet {
    pub const ALL: BlockSet = BlockSet {
        lf: true,
        ppmi: true,
        dom: true,
        fun: true,
    };

    pub const fn new(lf: bool, ppmi: bool, dom: bool, fun: bool) -> Self {
        BlockSet { lf, ppmi, dom, fun }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lf || self.ppmi || self.dom || self.fun)
    }
}

impl Default for BlockSet {
    fn default() -> Self {
        BlockSet::ALL
    }
}

impl fmt::Display for BlockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.lf, "lf"),
            (self.ppmi, "ppmi"),
            (self.dom, "dom"),
            (self.fun, "fun"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for BlockSet {
    type Err = Error;

    /// Comma-separated subset of `lf,ppmi,dom,fun`, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = BlockSet::new(false, false, false, false);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "all" => set = BlockSet::ALL,
                "lf" => set.lf = true,
                "ppmi" => set.ppmi = true,
                "dom" => set.dom = true,
                "fun" => set.fun = true,
                other => return Err(Error::InvalidInput(format!("unknown feature block {other:?}"))),
            }
        }
        if set.is_empty() {
            return Err(Error::InvalidInput("no feature blocks selected".into()));
        }
        Ok(set)
    }
}

/// Identity of one position in a feature vector. `k` and `p` are grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureId {
    Lf(usize),
    Ppmi(usize, usize, Side),
    Dom(usize, usize, usize, usize),
    Fun(usize, usize, usize, usize),
}

/// Which features a tuple of size `n` is mapped to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub n: usize,
    pub grid: GridSpec,
    pub blocks: BlockSet,
    /// Unordered index pairs `(i, j)`, `i < j`, whose PPMI features are kept.
    /// `None` keeps every pair.
    pub ppmi_pairs: Option<Vec<(usize, usize)>>,
}

impl FeatureSpec {
    pub fn new(n: usize, grid: GridSpec) -> Self {
        FeatureSpec {
            n,
            grid,
            blocks: BlockSet::ALL,
            ppmi_pairs: None,
        }
    }

    pub fn with_blocks(mut self, blocks: BlockSet) -> Self {
        self.blocks = blocks;
        self
    }

    /// Restricts the PPMI block to the given unordered pairs.
    pub fn with_ppmi_pairs(mut self, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut canon = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            let (i, j) = (a.min(b), a.max(b));
            if i == j || j >= self.n {
                return Err(Error::InvalidInput(format!("invalid PPMI pair ({a},{b}) for n={}", self.n)));
            }
            canon.push((i, j));
        }
        canon.sort_unstable();
        canon.dedup();
        self.ppmi_pairs = Some(canon);
        Ok(self)
    }

    fn pair_enabled(&self, i: usize, j: usize) -> bool {
        match &self.ppmi_pairs {
            None => true,
            Some(pairs) => pairs.contains(&(i.min(j), i.max(j))),
        }
    }

    /// Sizes of the LF, PPMI, DOM and FUN blocks.
    pub fn block_lens(&self) -> [usize; 4] {
        let n = self.n;
        let unordered = n * n.saturating_sub(1) / 2;
        let grid = self.grid.n_k() * self.grid.n_p();
        let ppmi_pairs = match &self.ppmi_pairs {
            None => unordered,
            Some(p) => p.len(),
        };
        [
            if self.blocks.lf { n } else { 0 },
            if self.blocks.ppmi { 4 * ppmi_pairs } else { 0 },
            if self.blocks.dom { unordered * grid } else { 0 },
            if self.blocks.fun { unordered * grid } else { 0 },
        ]
    }

    pub fn len(&self) -> usize {
        self.block_lens().iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every feature in canonical order.
    pub fn layout(&self) -> Vec<FeatureId> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.len());
        if self.blocks.lf {
            out.extend((0..n).map(FeatureId::Lf));
        }
        if self.blocks.ppmi {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if self.pair_enabled(i, j) {
                        out.push(FeatureId::Ppmi(i, j, Side::Left));
                        out.push(FeatureId::Ppmi(i, j, Side::Right));
                    }
                }
            }
        }
        for (on, make) in [
            (self.blocks.dom, FeatureId::Dom as fn(usize, usize, usize, usize) -> FeatureId),
            (self.blocks.fun, FeatureId::Fun),
        ] {
            if !on {
                continue;
            }
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..self.grid.n_k() {
                        for p in 0..self.grid.n_p() {
                            out.push(make(i, j, k, p));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn feature_names(&self) -> Vec<String> {
        let k = &self.grid.k_values;
        let p = &self.grid.p_values;
        self.layout()
            .into_iter()
            .map(|id| match id {
                FeatureId::Lf(i) => format!("LF[{i}]"),
                FeatureId::Ppmi(i, j, h) => format!("PPMI[{i},{j},{}]", h.as_str()),
                FeatureId::Dom(i, j, ki, pi) => format!("DOM[{i},{j},{},{}]", k[ki], p[pi]),
                FeatureId::Fun(i, j, ki, pi) => format!("FUN[{i},{j},{},{}]", k[ki], p[pi]),
            })
            .collect()
    }

    /// SHA-256 over the canonical JSON form of this `FeatureSpec`.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("feature spec serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Positions of `sub`'s features inside vectors laid out by `self`.
    ///
    /// Lets an ablation reuse vectors computed once with the full spec.
    pub fn select_columns(&self, sub: &FeatureSpec) -> Result<Vec<usize>> {
        if sub.n != self.n || sub.grid != self.grid {
            return Err(Error::InvalidInput("sub-spec has different tuple size or grid".into()));
        }
        let positions: HashMap<FeatureId, usize> =
            self.layout().into_iter().enumerate().map(|(i, id)| (id, i)).collect();
        sub.layout()
            .into_iter()
            .map(|id| {
                positions
                    .get(&id)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("feature {id:?} not in the full spec")))
            })
            .collect()
    }
}

/// Triple spec whose PPMI block keeps only the given pairs of
/// `{(0,1), (0,2), (1,2)}`, i.e. `<a,b>`, `<a,c>`, `<b,c>`.
pub fn ppmi_pair_subset_mask(grid: GridSpec, subsets: &[(usize, usize)]) -> Result<FeatureSpec> {
    FeatureSpec::new(3, grid).with_ppmi_pairs(subsets)
}

/// A featurized tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, columns: &[usize]) -> FeatureVector {
        FeatureVector(columns.iter().map(|&c| self.0[c]).collect())
    }
}

/// `ln(freq + 1)`; terms outside the lexicon count as frequency 0.
pub fn lf(freq: &FreqTable, id: Option<usize>) -> f64 {
    id.map_or(0.0, |id| (freq.count(id) as f64).ln_1p())
}

/// Maps tuples to feature vectors against a fixed set of spaces.
#[derive(Debug, Clone)]
pub struct Featurizer<'a> {
    bundle: &'a SpaceBundle,
    spec: FeatureSpec,
}

impl<'a> Featurizer<'a> {
    pub fn new(bundle: &'a SpaceBundle, spec: FeatureSpec) -> Result<Self> {
        spec.grid.validate()?;
        Ok(Featurizer { bundle, spec })
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn bundle(&self) -> &SpaceBundle {
        self.bundle
    }

    pub fn featurize<S: AsRef<str>>(&self, tuple: &[S]) -> Result<FeatureVector> {
        let spec = &self.spec;
        if tuple.len() != spec.n {
            return Err(Error::LengthMismatch {
                expected: spec.n,
                got: tuple.len(),
            });
        }
        let b = self.bundle;
        let ids: Vec<Option<usize>> = tuple.iter().map(|t| b.id(t.as_ref())).collect();
        let n = spec.n;
        let mut values = Vec::with_capacity(spec.len());
        if spec.blocks.lf {
            values.extend(ids.iter().map(|&id| lf(&b.freq, id)));
        }
        if spec.blocks.ppmi {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if spec.pair_enabled(i, j) {
                        values.push(b.raw.ppmi(ids[i], ids[j], Side::Left));
                        values.push(b.raw.ppmi(ids[i], ids[j], Side::Right));
                    }
                }
            }
        }
        for (on, space) in [(spec.blocks.dom, &b.domain), (spec.blocks.fun, &b.function)] {
            if !on {
                continue;
            }
            for i in 0..n {
                for j in i + 1..n {
                    values.extend(space.grid_similarities(ids[i], ids[j], &spec.grid)?);
                }
            }
        }
        debug_assert_eq!(values.len(), spec.len());
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(FeatureVector(values))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header of feature names, then one row per vector.
pub fn write_feature_csv<W: Write>(w: &mut W, spec: &FeatureSpec, rows: &[FeatureVector]) -> Result<()> {
    let header: Vec<String> = spec.feature_names().iter().map(|n| csv_field(n)).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        if row.len() != spec.len() {
            return Err(Error::LengthMismatch {
                expected: spec.len(),
                got: row.len(),
            });
        }
        let cells: Vec<String> = row.as_slice().iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
