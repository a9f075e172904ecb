//! Sparse count matrices, the PPMI transform, truncated SVD with singular
//! value power weighting, and cosine similarity.

use std::io::{Read, Write};

use crate::binio;
use crate::error::{Error, Result};

const SPARSE_MAGIC: &[u8; 4] = b"TSPM";
const FACTORS_MAGIC: &[u8; 4] = b"TSVF";
const FORMAT_VERSION: u32 = 1;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Nonnegative sparse matrix in canonical (row, col) triplet order.
///
/// No duplicate coordinates, and every stored value is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SparseMatrix {
    /// Builds from unordered triplets, summing duplicates and dropping zeros.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(u32, u32, f64)>,
    ) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r as usize >= n_rows || c as usize >= n_cols {
                return Err(Error::InvalidInput(format!(
                    "entry ({r},{c}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("entry ({r},{c}) has value {v}")));
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 > 0.0);
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::LengthMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i as u32, j as u32, v));
                }
            }
        }
        SparseMatrix::from_triplets(n_rows, n_cols, t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    /// Stored value, or 0 when the cell is empty or out of range.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if r >= self.n_rows || c >= self.n_cols {
            return 0.0;
        }
        let key = (r as u32, c as u32);
        self.entries
            .binary_search_by_key(&key, |&(r, c, _)| (r, c))
            .map_or(0.0, |i| self.entries[i].2)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for &(r, c, v) in &self.entries {
            d.set(r as usize, c as usize, v);
        }
        d
    }

    /// `magic, version, n_rows, n_cols, nnz`, then `(row u32, col u32, value f64)`.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        binio::write_header(w, SPARSE_MAGIC, FORMAT_VERSION)?;
        binio::write_u64(w, self.n_rows as u64)?;
        binio::write_u64(w, self.n_cols as u64)?;
        binio::write_u64(w, self.entries.len() as u64)?;
        for &(r, c, v) in &self.entries {
            binio::write_u32(w, r)?;
            binio::write_u32(w, c)?;
            binio::write_f64(w, v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        binio::read_header(r, SPARSE_MAGIC, FORMAT_VERSION, "sparse matrix")?;
        let n_rows = binio::read_usize(r)?;
        let n_cols = binio::read_usize(r)?;
        let nnz = binio::read_usize(r)?;
        let mut entries = Vec::with_capacity(nnz.min(1 << 24));
        for _ in 0..nnz {
            let row = binio::read_u32(r)?;
            let col = binio::read_u32(r)?;
            let v = binio::read_f64(r)?;
            entries.push((row, col, v));
        }
        let sorted = entries
            .windows(2)
            .all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1));
        let valid = entries
            .iter()
            .all(|&(row, col, v)| (row as usize) < n_rows && (col as usize) < n_cols && v > 0.0);
        if !sorted || !valid {
            return Err(Error::format("sparse matrix", "entries not canonical"));
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }
}

/// `max(0, ln(f_ij * F / (f_i. * f_.j)))`; non-positive cells are dropped.
pub fn ppmi_transform(counts: &SparseMatrix) -> Result<SparseMatrix> {
    let mut row_sums = vec![0.0; counts.n_rows];
    let mut col_sums = vec![0.0; counts.n_cols];
    let mut total = 0.0;
    for &(r, c, v) in &counts.entries {
        row_sums[r as usize] += v;
        col_sums[c as usize] += v;
        total += v;
    }
    if total <= 0.0 {
        return Err(Error::EmptyCounts);
    }
    let entries = counts
        .entries
        .iter()
        .filter_map(|&(r, c, v)| {
            let pmi = ((v * total) / (row_sums[r as usize] * col_sums[c as usize])).ln();
            (pmi > 0.0).then_some((r, c, pmi))
        })
        .collect();
    Ok(SparseMatrix {
        n_rows: counts.n_rows,
        n_cols: counts.n_cols,
        entries,
    })
}

/// Truncated SVD factors: `M ~= U diag(sigma) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `magic, version, n_rows, n_cols, rank`, then sigma, U and V row-major.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        binio::write_header(w, FACTORS_MAGIC, FORMAT_VERSION)?;
        binio::write_u64(w, self.u.rows() as u64)?;
        binio::write_u64(w, self.v.rows() as u64)?;
        binio::write_u64(w, self.rank() as u64)?;
        binio::write_f64s(w, &self.sigma)?;
        binio::write_f64s(w, self.u.as_slice())?;
        binio::write_f64s(w, self.v.as_slice())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        binio::read_header(r, FACTORS_MAGIC, FORMAT_VERSION, "svd factors")?;
        let n_rows = binio::read_usize(r)?;
        let n_cols = binio::read_usize(r)?;
        let rank = binio::read_usize(r)?;
        let sigma = binio::read_f64s(r, rank)?;
        let u = DenseMatrix::from_row_major(n_rows, rank, binio::read_f64s(r, n_rows * rank)?)?;
        let v = DenseMatrix::from_row_major(n_cols, rank, binio::read_f64s(r, n_cols * rank)?)?;
        Ok(SvdFactors { u, sigma, v })
    }
}

/// Sweep limit for the Jacobi iteration; convergence normally takes < 20.
const MAX_SWEEPS: usize = 100;

/// One-sided (Hestenes) Jacobi SVD of a dense `m x n` matrix with `m >= n`,
/// given as its `n` columns. Returns the rotated columns (`A V`) and `V`
/// (as columns). On return the columns are mutually orthogonal to working
/// precision relative to their norms.
fn hestenes_jacobi(mut cols: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = cols.len();
    let m = cols.first().map_or(0, Vec::len);
    let tol = f64::EPSILON * (m.max(1) as f64);
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (a, b) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += a[i] * a[i];
                        beta += b[i] * b[i];
                        gamma += a[i] * b[i];
                    }
                    (alpha, beta, gamma)
                };
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((cols, v));
        }
    }
    Err(Error::NoConvergence {
        what: "jacobi svd",
        iterations: MAX_SWEEPS,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (a, b) = (&mut lo[p], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Top-`r` singular triplets of `m`.
///
/// Singular values that are zero to working precision are not returned, so
/// the retained rank is `min(r, numerical rank)`. Each column of U is signed
/// so that its largest-magnitude entry is positive.
pub fn truncated_svd(m: &SparseMatrix, r: usize) -> Result<SvdFactors> {
    let max = m.n_rows.min(m.n_cols);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { requested: r, max });
    }
    let dense = m.to_dense();
    dense_truncated_svd(&dense, r)
}

pub fn dense_truncated_svd(a: &DenseMatrix, r: usize) -> Result<SvdFactors> {
    let (rows, cols) = (a.rows(), a.cols());
    let max = rows.min(cols);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { requested: r, max });
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    // Orthogonalize the columns of whichever orientation is tall.
    let transposed = cols > rows;
    let (m, n) = if transposed { (cols, rows) } else { (rows, cols) };
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..m)
                .map(|i| if transposed { a.get(j, i) } else { a.get(i, j) })
                .collect()
        })
        .collect();
    let (work, right) = hestenes_jacobi(columns)?;

    let norms: Vec<f64> = work
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma_max = norms[order[0]];
    let cutoff = sigma_max * (m.max(n) as f64) * f64::EPSILON;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&j| norms[j] > cutoff && norms[j] > 0.0)
        .take(r)
        .collect();
    let k = kept.len();

    // left: m x k (normalized work columns), rightm: n x k (V columns)
    let mut left = DenseMatrix::zeros(m, k);
    let mut rightm = DenseMatrix::zeros(n, k);
    let mut sigma = Vec::with_capacity(k);
    for (out, &j) in kept.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        for i in 0..m {
            left.set(i, out, work[j][i] / s);
        }
        for i in 0..n {
            rightm.set(i, out, right[j][i]);
        }
    }
    let (mut u, mut v) = if transposed {
        (rightm, left)
    } else {
        (left, rightm)
    };
    for c in 0..k {
        let mut best = 0;
        for i in 1..u.rows() {
            if u.get(i, c).abs() > u.get(best, c).abs() {
                best = i;
            }
        }
        if u.get(best, c) < 0.0 {
            for i in 0..u.rows() {
                u.set(i, c, -u.get(i, c));
            }
            for i in 0..v.rows() {
                v.set(i, c, -v.get(i, c));
            }
        }
    }
    Ok(SvdFactors { u, sigma, v })
}

/// Rows of `U_k diag(sigma_k)^p`. A singular value of exactly zero scales
/// its column by zero for every `p`, including `p = 0`.
pub fn project_rows(f: &SvdFactors, k: usize, p: f64) -> Result<DenseMatrix> {
    if k == 0 || k > f.rank() {
        return Err(Error::RankExceeded { k, rank: f.rank() });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("power {p} outside [0, 1]")));
    }
    let scales: Vec<f64> = f.sigma[..k]
        .iter()
        .map(|&s| if s == 0.0 { 0.0 } else { s.powf(p) })
        .collect();
    let rows = f.u.rows();
    let mut data = Vec::with_capacity(rows * k);
    for i in 0..rows {
        let row = f.u.row(i);
        data.extend(row[..k].iter().zip(&scales).map(|(x, s)| x * s));
    }
    DenseMatrix::from_row_major(rows, k, data)
}

/// Cosine of the angle between `u` and `v`; 0 when either is the zero vector.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(cosine_unchecked(u, v))
}

pub(crate) fn cosine_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
}
