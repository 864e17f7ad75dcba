//! Tanner graphs lifted from block-circulant matrices, and the extended
//! parity-check matrix that adds the amplifier's state variables as punctured
//! variable nodes.
//!
//! Lifting is circulant only: block `(i, j)` of weight `w` connects every
//! type-`j` variable node to `w` distinct type-`i` check nodes. The lifting
//! factor is the circulant size `p` (called `L` in the docs below to keep it
//! apart from the amplifier matrix `Q`).

use std::io::Write;

use crate::crypto::PrivateKey;
use crate::error::{Error, Result};
use crate::qc::{BaseMatrix, BlockCirculantMatrix};
use crate::ring::PolyGF2;

/// Bipartite graph stored edge-major and sorted by check node, with a
/// prefix-indexed variable-node view.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    num_vn: usize,
    num_cn: usize,
    /// Variable node of each edge. Edges of check node `c` are
    /// `cn_ptr[c]..cn_ptr[c + 1]`.
    edge_vn: Vec<u32>,
    cn_ptr: Vec<usize>,
    /// Edges of variable node `v` are `vn_edges[vn_ptr[v]..vn_ptr[v + 1]]`.
    vn_ptr: Vec<usize>,
    vn_edges: Vec<u32>,
    vn_type: Vec<u16>,
    cn_type: Vec<u16>,
    punctured: Vec<bool>,
    num_vn_types: usize,
    num_cn_types: usize,
}

impl TannerGraph {
    /// Builds a graph from `(vn, cn)` pairs. Parallel edges are rejected.
    pub fn from_edges(
        num_vn: usize,
        num_cn: usize,
        edges: &[(usize, usize)],
        vn_type: Vec<u16>,
        cn_type: Vec<u16>,
        punctured: Vec<bool>,
    ) -> Result<Self> {
        if vn_type.len() != num_vn || punctured.len() != num_vn || cn_type.len() != num_cn {
            return Err(Error::DimensionMismatch("node label arrays".into()));
        }
        let mut sorted: Vec<(usize, usize)> = edges.iter().map(|&(v, c)| (c, v)).collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("parallel edges in Tanner graph".into()));
        }
        if let Some(&(c, v)) = sorted.iter().find(|&&(c, v)| c >= num_cn || v >= num_vn) {
            return Err(Error::DimensionMismatch(format!("edge ({}, {}) out of range", v, c)));
        }
        let mut cn_ptr = vec![0usize; num_cn + 1];
        for &(c, _) in &sorted {
            cn_ptr[c + 1] += 1;
        }
        for c in 0..num_cn {
            cn_ptr[c + 1] += cn_ptr[c];
        }
        let edge_vn: Vec<u32> = sorted.iter().map(|&(_, v)| v as u32).collect();
        Ok(Self::finish(num_vn, num_cn, edge_vn, cn_ptr, vn_type, cn_type, punctured))
    }

    fn finish(
        num_vn: usize,
        num_cn: usize,
        edge_vn: Vec<u32>,
        cn_ptr: Vec<usize>,
        vn_type: Vec<u16>,
        cn_type: Vec<u16>,
        punctured: Vec<bool>,
    ) -> Self {
        let mut vn_ptr = vec![0usize; num_vn + 1];
        for &v in &edge_vn {
            vn_ptr[v as usize + 1] += 1;
        }
        for v in 0..num_vn {
            vn_ptr[v + 1] += vn_ptr[v];
        }
        let mut fill = vn_ptr.clone();
        let mut vn_edges = vec![0u32; edge_vn.len()];
        for (e, &v) in edge_vn.iter().enumerate() {
            vn_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        let num_vn_types = vn_type.iter().map(|&t| t as usize + 1).max().unwrap_or(0);
        let num_cn_types = cn_type.iter().map(|&t| t as usize + 1).max().unwrap_or(0);
        TannerGraph {
            num_vn,
            num_cn,
            edge_vn,
            cn_ptr,
            vn_ptr,
            vn_edges,
            vn_type,
            cn_type,
            punctured,
            num_vn_types,
            num_cn_types,
        }
    }

    pub fn num_vn(&self) -> usize {
        self.num_vn
    }

    pub fn num_cn(&self) -> usize {
        self.num_cn
    }

    pub fn num_edges(&self) -> usize {
        self.edge_vn.len()
    }

    pub fn num_vn_types(&self) -> usize {
        self.num_vn_types
    }

    pub fn num_cn_types(&self) -> usize {
        self.num_cn_types
    }

    /// Edge index range of check node `c`.
    #[inline]
    pub fn cn_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.cn_ptr[c]..self.cn_ptr[c + 1]
    }

    /// Edge indices of variable node `v`.
    #[inline]
    pub fn vn_edges(&self, v: usize) -> &[u32] {
        &self.vn_edges[self.vn_ptr[v]..self.vn_ptr[v + 1]]
    }

    #[inline]
    pub fn edge_vn(&self, e: usize) -> usize {
        self.edge_vn[e] as usize
    }

    pub fn vn_type(&self, v: usize) -> usize {
        self.vn_type[v] as usize
    }

    pub fn cn_type(&self, c: usize) -> usize {
        self.cn_type[c] as usize
    }

    pub fn vn_types(&self) -> &[u16] {
        &self.vn_type
    }

    pub fn cn_types(&self) -> &[u16] {
        &self.cn_type
    }

    pub fn is_punctured(&self, v: usize) -> bool {
        self.punctured[v]
    }

    pub fn punctured(&self) -> &[bool] {
        &self.punctured
    }

    pub fn cn_degree(&self, c: usize) -> usize {
        self.cn_ptr[c + 1] - self.cn_ptr[c]
    }

    pub fn vn_degree(&self, v: usize) -> usize {
        self.vn_ptr[v + 1] - self.vn_ptr[v]
    }

    /// All `(vn, cn)` pairs in check-node order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for c in 0..self.num_cn {
            for e in self.cn_edges(c) {
                out.push((self.edge_vn(e), c));
            }
        }
        out
    }

    /// Number of edges between each (check type, variable type) pair,
    /// row-major over check types.
    pub fn edge_type_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_cn_types * self.num_vn_types];
        for c in 0..self.num_cn {
            let ct = self.cn_type(c);
            for e in self.cn_edges(c) {
                counts[ct * self.num_vn_types + self.vn_type(self.edge_vn(e))] += 1;
            }
        }
        counts
    }

    /// True if every check node sees an even number of ones in `word`.
    pub fn syndrome_is_zero(&self, word: &[u8]) -> bool {
        (0..self.num_cn).all(|c| {
            self.cn_edges(c).fold(0u8, |acc, e| acc ^ word[self.edge_vn(e)]) & 1 == 0
        })
    }

    /// Writes `vn cn` per line.
    pub fn write_adjacency<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (v, c) in self.edges() {
            writeln!(w, "{} {}", v, c)?;
        }
        Ok(())
    }
}

/// Lifts a block-circulant parity-check matrix into its Tanner graph.
///
/// Check node `i * L + r` and variable node `j * L + (r + s) mod L` are
/// joined for every exponent `s` of block `(i, j)`. Type labels are the block
/// row/column indices; `punctured_cols` flags whole block columns.
pub fn graph_from_qc(m: &BlockCirculantMatrix, punctured_cols: &[bool]) -> Result<TannerGraph> {
    if punctured_cols.len() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} punctured flags for {} block columns",
            punctured_cols.len(),
            m.cols()
        )));
    }
    let p = m.modulus();
    for b in m.blocks() {
        if b.weight() > p {
            return Err(Error::BlockTooHeavy { weight: b.weight(), p });
        }
    }
    let num_vn = m.cols() * p;
    let num_cn = m.rows() * p;
    let total: usize = m.blocks().iter().map(|b| b.weight()).sum::<usize>() * p;
    let mut edge_vn = Vec::with_capacity(total);
    let mut cn_ptr = Vec::with_capacity(num_cn + 1);
    cn_ptr.push(0);
    for i in 0..m.rows() {
        for r in 0..p {
            for j in 0..m.cols() {
                for &s in m.block(i, j).support() {
                    edge_vn.push((j * p + (r + s as usize) % p) as u32);
                }
            }
            cn_ptr.push(edge_vn.len());
        }
    }
    let vn_type = (0..num_vn).map(|v| (v / p) as u16).collect();
    let cn_type = (0..num_cn).map(|c| (c / p) as u16).collect();
    let punctured = (0..num_vn).map(|v| punctured_cols[v / p]).collect();
    Ok(TannerGraph::finish(num_vn, num_cn, edge_vn, cn_ptr, vn_type, cn_type, punctured))
}

/// Extended parity-check matrix `[[Q, I], [0, H]]` and its base matrix
/// `[[B_Q, I], [0, B_H]]`, with the right `N0` columns punctured.
pub fn build_ext(key: &PrivateKey) -> Result<(BlockCirculantMatrix, BaseMatrix)> {
    extended_matrix(key.h(), key.q())
}

pub(crate) fn extended_matrix(
    h: &BlockCirculantMatrix,
    q: &BlockCirculantMatrix,
) -> Result<(BlockCirculantMatrix, BaseMatrix)> {
    let n0 = q.rows();
    let p = q.modulus();
    if h.rows() != 1 || h.cols() != n0 || q.cols() != n0 || h.modulus() != p {
        return Err(Error::DimensionMismatch("H must be 1 x N0 and Q N0 x N0".into()));
    }
    let zero = PolyGF2::zero(p)?;
    let one = PolyGF2::one(p)?;
    let cols = 2 * n0;
    let mut blocks = Vec::with_capacity((n0 + 1) * cols);
    for i in 0..n0 {
        for j in 0..n0 {
            blocks.push(q.block(i, j).clone());
        }
        for j in 0..n0 {
            blocks.push(if i == j { one.clone() } else { zero.clone() });
        }
    }
    for _ in 0..n0 {
        blocks.push(zero.clone());
    }
    for j in 0..n0 {
        blocks.push(h.block(0, j).clone());
    }
    let h_ext = BlockCirculantMatrix::new(n0 + 1, cols, blocks)?;
    let punctured: Vec<bool> = (0..cols).map(|j| j >= n0).collect();
    let b_ext = h_ext.base_of().with_punctured(punctured)?;
    Ok((h_ext, b_ext))
}

/// `[[B_Q, I], [0, B_H]]` from the two base matrices.
pub fn ext_base(b_q: &BaseMatrix, b_h: &BaseMatrix) -> Result<BaseMatrix> {
    let n0 = b_q.rows();
    if b_q.cols() != n0 || b_h.cols() != n0 {
        return Err(Error::DimensionMismatch("B_Q must be N0 x N0 and B_H R0 x N0".into()));
    }
    let r0 = b_h.rows();
    let cols = 2 * n0;
    let mut entries = Vec::with_capacity((n0 + r0) * cols);
    for i in 0..n0 {
        for j in 0..n0 {
            entries.push(b_q.get(i, j));
        }
        for j in 0..n0 {
            entries.push(u32::from(i == j));
        }
    }
    for i in 0..r0 {
        entries.extend(std::iter::repeat(0).take(n0));
        for j in 0..n0 {
            entries.push(b_h.get(i, j));
        }
    }
    BaseMatrix::new(n0 + r0, cols, entries)?.with_punctured((0..cols).map(|j| j >= n0).collect())
}
