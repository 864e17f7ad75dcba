//! Block-circulant matrices over `F2[X]/(X^p - 1)` and protograph base
//! matrices.
//!
//! Conventions: a block `a(X)` stands for the circulant whose row `r` has ones
//! in columns `(r + s) mod p` for every exponent `s` of `a`. A binary row
//! vector split into length-`p` blocks is read as a list of coefficient
//! vectors, so that `v * circ(a)` is the polynomial product `v(X) a(X)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ring::PolyGF2;

/// `rows x cols` array of circulant blocks sharing one modulus.
#[derive(Clone, PartialEq, Eq)]
pub struct BlockCirculantMatrix {
    rows: usize,
    cols: usize,
    p: usize,
    blocks: Vec<PolyGF2>,
}

impl BlockCirculantMatrix {
    /// Builds a matrix from row-major blocks.
    pub fn new(rows: usize, cols: usize, blocks: Vec<PolyGF2>) -> Result<Self> {
        if blocks.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for a {}x{} block matrix",
                blocks.len(),
                rows,
                cols
            )));
        }
        let p = blocks[0].modulus();
        if let Some(b) = blocks.iter().find(|b| b.modulus() != p) {
            return Err(Error::ModulusMismatch(p, b.modulus()));
        }
        Ok(BlockCirculantMatrix { rows, cols, p, blocks })
    }

    pub fn zeros(rows: usize, cols: usize, p: usize) -> Result<Self> {
        let z = PolyGF2::zero(p)?;
        Self::new(rows, cols, vec![z; rows * cols])
    }

    pub fn identity(n: usize, p: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n, p)?;
        for i in 0..n {
            m.blocks[i * n + i] = PolyGF2::one(p)?;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    pub fn block(&self, i: usize, j: usize) -> &PolyGF2 {
        &self.blocks[i * self.cols + j]
    }

    pub fn blocks(&self) -> &[PolyGF2] {
        &self.blocks
    }

    /// Binary dimensions `(rows * p, cols * p)`.
    pub fn binary_shape(&self) -> (usize, usize) {
        (self.rows * self.p, self.cols * self.p)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let b = self.block(i, j);
                    if i == j {
                        b.is_one()
                    } else {
                        b.is_zero()
                    }
                })
            })
    }

    /// Block product: `(AB)[i][j] = sum_k A[i][k] B[k][j]`.
    pub fn mat_mul(&self, other: &BlockCirculantMatrix) -> Result<BlockCirculantMatrix> {
        if self.p != other.p {
            return Err(Error::ModulusMismatch(self.p, other.p));
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut blocks = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = PolyGF2::zero(self.p)?;
                for k in 0..self.cols {
                    let prod = self.block(i, k).mul(other.block(k, j))?;
                    acc = acc.add(&prod)?;
                }
                blocks.push(acc);
            }
        }
        Self::new(self.rows, other.cols, blocks)
    }

    /// `result[j][i] = transpose(A[i][j])`.
    pub fn block_transpose(&self) -> BlockCirculantMatrix {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                blocks.push(self.block(i, j).transpose());
            }
        }
        BlockCirculantMatrix { rows: self.cols, cols: self.rows, p: self.p, blocks }
    }

    /// Matrix of block weights.
    pub fn base_of(&self) -> BaseMatrix {
        let entries = self.blocks.iter().map(|b| b.weight() as u32).collect();
        BaseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
            punctured: vec![false; self.cols],
        }
    }

    /// Inverse of a square matrix with at most four block rows, by cofactor
    /// expansion over the commutative ring. The determinant must be a unit.
    pub fn invert_q(&self) -> Result<BlockCirculantMatrix> {
        let n = self.rows;
        if n != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot invert a {}x{} block matrix",
                self.rows, self.cols
            )));
        }
        if n > 4 {
            return Err(Error::DimensionMismatch(format!(
                "cofactor inversion supports at most 4 block rows, got {}",
                n
            )));
        }
        let idx: Vec<usize> = (0..n).collect();
        let det = self.minor_det(&idx, &idx)?;
        let det_inv = det.inverse()?;
        let mut blocks = Vec::with_capacity(n * n);
        // Signs vanish in characteristic 2: adj[i][j] = minor(j, i).
        for i in 0..n {
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let cof = if n == 1 {
                    PolyGF2::one(self.p)?
                } else {
                    self.minor_det(&rows, &cols)?
                };
                blocks.push(cof.mul(&det_inv)?);
            }
        }
        let inv = Self::new(n, n, blocks)?;
        if !self.mat_mul(&inv)?.is_identity() {
            return Err(Error::NotInvertible);
        }
        Ok(inv)
    }

    fn minor_det(&self, rows: &[usize], cols: &[usize]) -> Result<PolyGF2> {
        if rows.len() == 1 {
            return Ok(self.block(rows[0], cols[0]).clone());
        }
        let mut acc = PolyGF2::zero(self.p)?;
        let r0 = rows[0];
        for (k, &c) in cols.iter().enumerate() {
            let entry = self.block(r0, c);
            if entry.is_zero() {
                continue;
            }
            let sub_cols: Vec<usize> = cols
                .iter()
                .enumerate()
                .filter(|&(kk, _)| kk != k)
                .map(|(_, &cc)| cc)
                .collect();
            let sub = self.minor_det(&rows[1..], &sub_cols)?;
            acc = acc.add(&entry.mul(&sub)?)?;
        }
        Ok(acc)
    }
}

impl fmt::Debug for BlockCirculantMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BlockCirculantMatrix {}x{} (p={})", self.rows, self.cols, self.p)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:?}", self.block(i, j).support()))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Binary row vector split into circulant-sized blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockVector {
    p: usize,
    blocks: Vec<PolyGF2>,
}

impl BlockVector {
    pub fn new(blocks: Vec<PolyGF2>) -> Result<Self> {
        let p = blocks
            .first()
            .map(|b| b.modulus())
            .ok_or_else(|| Error::DimensionMismatch("empty block vector".into()))?;
        if let Some(b) = blocks.iter().find(|b| b.modulus() != p) {
            return Err(Error::ModulusMismatch(p, b.modulus()));
        }
        Ok(BlockVector { p, blocks })
    }

    pub fn zeros(len: usize, p: usize) -> Result<Self> {
        Self::new(vec![PolyGF2::zero(p)?; len])
    }

    /// Splits a 0/1 vector of length `len * p` into blocks.
    pub fn from_bits(bits: &[u8], p: usize) -> Result<Self> {
        if p == 0 || bits.len() % p != 0 || bits.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "bit vector of length {} is not a multiple of p = {}",
                bits.len(),
                p
            )));
        }
        let blocks = bits
            .chunks(p)
            .map(|c| PolyGF2::from_bits(p, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.blocks.iter().flat_map(|b| b.to_bits()).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    pub fn blocks(&self) -> &[PolyGF2] {
        &self.blocks
    }

    pub fn weight(&self) -> usize {
        self.blocks.iter().map(|b| b.weight()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.is_zero())
    }

    pub fn add(&self, other: &BlockVector) -> Result<BlockVector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "adding vectors of {} and {} blocks",
                self.len(),
                other.len()
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    /// `v * A`: block `j` of the result is `sum_i v_i(X) A[i][j](X)`.
    pub fn vec_mat_mul(&self, a: &BlockCirculantMatrix) -> Result<BlockVector> {
        if self.p != a.modulus() {
            return Err(Error::ModulusMismatch(self.p, a.modulus()));
        }
        if self.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "vector of {} blocks times {}x{} block matrix",
                self.len(),
                a.rows(),
                a.cols()
            )));
        }
        let mut out = Vec::with_capacity(a.cols());
        for j in 0..a.cols() {
            let mut acc = PolyGF2::zero(self.p)?;
            for (i, v) in self.blocks.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                acc = acc.add(&v.mul(a.block(i, j))?)?;
            }
            out.push(acc);
        }
        Self::new(out)
    }
}

/// Protograph base matrix: non-negative edge multiplicities plus a per-column
/// punctured flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    punctured: Vec<bool>,
}

impl BaseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} base matrix",
                entries.len(),
                rows,
                cols
            )));
        }
        Ok(BaseMatrix { rows, cols, entries, punctured: vec![false; cols] })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged base matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Circulant base matrix whose row `i` is `first_row` shifted right by `i`.
    pub fn circulant(first_row: &[u32]) -> Result<Self> {
        let n = first_row.len();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(first_row[(j + n - i) % n]);
            }
        }
        Self::new(n, n, entries)
    }

    pub fn with_punctured(mut self, punctured: Vec<bool>) -> Result<Self> {
        if punctured.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} punctured flags for {} columns",
                punctured.len(),
                self.cols
            )));
        }
        self.punctured = punctured;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn punctured(&self) -> &[bool] {
        &self.punctured
    }

    pub fn is_punctured(&self, j: usize) -> bool {
        self.punctured[j]
    }

    /// Check node degrees.
    pub fn row_sums(&self) -> Vec<u32> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).sum()).collect()
    }

    /// Variable node degrees.
    pub fn col_sums(&self) -> Vec<u32> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Integer matrix product (punctured flags are dropped).
    pub fn mul(&self, other: &BaseMatrix) -> Result<BaseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = vec![0u32; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                entries[i * other.cols + j] =
                    (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        BaseMatrix::new(self.rows, other.cols, entries)
    }

    /// True if square and every row is the first one shifted right.
    pub fn is_circulant(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| self.get(i, j) == self.get(0, (j + self.cols - i) % self.cols))
            })
    }

    /// Elementwise `<=`.
    pub fn dominated_by(&self, other: &BaseMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }

    /// Text form: one whitespace-separated row per line, then an optional
    /// `punctured: <cols>` line listing punctured column indices.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        let punct: Vec<String> = (0..self.cols)
            .filter(|&j| self.punctured[j])
            .map(|j| j.to_string())
            .collect();
        if !punct.is_empty() {
            s.push_str(&format!("punctured: {}\n", punct.join(",")));
        }
        s
    }
}

impl FromStr for BaseMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut punct_cols = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("punctured:") {
                punct_cols = parse_index_list(rest)?;
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>().map_err(|_| Error::Parse(format!("bad entry `{}`", t))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty base matrix".into()));
        }
        let base = BaseMatrix::from_rows(&rows)?;
        let mut flags = vec![false; base.cols()];
        for c in punct_cols {
            if c >= flags.len() {
                return Err(Error::Parse(format!("punctured column {} out of range", c)));
            }
            flags[c] = true;
        }
        base.with_punctured(flags)
    }
}

/// Parses `1,3` or `1 3` into indices.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad index `{}`", t))))
        .collect()
}
