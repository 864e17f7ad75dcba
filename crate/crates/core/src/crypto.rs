//! McEliece-style public-key encryption with a QC-LDPC private code and a
//! Hamming weight amplifier `Q`.
//!
//! The private key is `H = (h_0 .. h_{N0-1})` together with the sparse
//! invertible `N0 x N0` block matrix `Q`. The public code has parity-check
//! matrix `H' = HQ` and is published as the parity part of a systematic
//! generator matrix. Three decryption strategies are offered:
//!
//! * `basic`: transform `c~ = cQ^T`, decode with `H`, undo the transform;
//! * `mdpc`: decode `c` directly with `H'`;
//! * `proto`: decode `(c | punctured)` on the extended matrix `[[Q, I], [0, H]]`.
//!
//! No CCA-2 conversion is applied: plaintexts are encoded systematically.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{Algorithm, ChannelObservation, DecodeOutcome, Decoder, DecoderConfig};
use crate::de;
use crate::error::{Error, Result};
use crate::graph::{extended_matrix, graph_from_qc, TannerGraph};
use crate::qc::{BaseMatrix, BlockCirculantMatrix, BlockVector};
use crate::ring::PolyGF2;

/// Default number of key-generation attempts.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    pub p: usize,
    pub n0: usize,
    /// Weight of each block of `H`.
    pub dc_per_block: Vec<usize>,
    /// First row of the circulant base matrix of `Q`.
    pub bq_first_row: Vec<usize>,
    pub error_weight: usize,
    pub rng_seed: u64,
}

impl SystemParams {
    pub fn new(p: usize, dc_per_block: Vec<usize>, bq_first_row: Vec<usize>, error_weight: usize) -> Self {
        SystemParams {
            p,
            n0: dc_per_block.len(),
            dc_per_block,
            bq_first_row,
            error_weight,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_error_weight(mut self, e: usize) -> Self {
        self.error_weight = e;
        self
    }

    /// Code length `n = N0 p`.
    pub fn n(&self) -> usize {
        self.n0 * self.p
    }

    /// Dimension `k = (N0 - 1) p`.
    pub fn k(&self) -> usize {
        (self.n0 - 1) * self.p
    }

    pub fn dc(&self) -> usize {
        self.dc_per_block.iter().sum()
    }

    pub fn dq(&self) -> usize {
        self.bq_first_row.iter().sum()
    }

    pub fn base_h(&self) -> BaseMatrix {
        let row: Vec<u32> = self.dc_per_block.iter().map(|&d| d as u32).collect();
        BaseMatrix::from_rows(&[row]).expect("non-empty row")
    }

    pub fn base_q(&self) -> BaseMatrix {
        let row: Vec<u32> = self.bq_first_row.iter().map(|&d| d as u32).collect();
        BaseMatrix::circulant(&row).expect("non-empty row")
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p % 2 == 0 {
            return Err(Error::InvalidModulus(self.p));
        }
        if self.n0 < 2 || self.n0 > 4 {
            return Err(Error::InvalidParams(format!("N0 = {} not in 2..=4", self.n0)));
        }
        if self.dc_per_block.len() != self.n0 || self.bq_first_row.len() != self.n0 {
            return Err(Error::InvalidParams("dc and bq lists must have N0 entries".into()));
        }
        if self.dc_per_block.iter().chain(&self.bq_first_row).any(|&w| w > self.p) {
            return Err(Error::InvalidParams("block weight exceeds p".into()));
        }
        if self.dq() < 1 {
            return Err(Error::InvalidParams("d_Q must be at least 1".into()));
        }
        if self.dc() < 1 {
            return Err(Error::InvalidParams("d_c must be at least 1".into()));
        }
        if self.error_weight > self.n() {
            return Err(Error::InvalidParams(format!(
                "error weight {} exceeds n = {}",
                self.error_weight,
                self.n()
            )));
        }
        Ok(())
    }

    /// `p,N0,dc_list,bq_list` with space-separated lists.
    pub fn key_header(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        format!("{},{},{},{}", self.p, self.n0, join(&self.dc_per_block), join(&self.bq_first_row))
    }

    fn from_key_header(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("bad key header `{}`", line)));
        }
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad number `{}`", s)));
        let list = |s: &str| s.split_whitespace().map(num).collect::<Result<Vec<_>>>();
        let p = num(fields[0])?;
        let n0 = num(fields[1])?;
        let params = SystemParams {
            p,
            n0,
            dc_per_block: list(fields[2])?,
            bq_first_row: list(fields[3])?,
            error_weight: 0,
            rng_seed: 0,
        };
        params.validate()?;
        Ok(params)
    }
}

impl FromStr for SystemParams {
    type Err = Error;

    /// Key/value text: `p=4801`, `N0=2`, `dc=15,15`, `bq=2,1`, and optionally
    /// `e=<weight>` and `seed=<u64>`. `#` starts a comment.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = None;
        let mut n0 = None;
        let mut dc = None;
        let mut bq = None;
        let mut e = 0usize;
        let mut seed = 0u64;
        let list = |v: &str| {
            v.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad number `{}`", t))))
                .collect::<Result<Vec<_>>>()
        };
        for raw in s.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{}`", line)))?;
            let v = v.trim();
            let bad = || Error::Parse(format!("bad value for `{}`", k.trim()));
            match k.trim().to_ascii_lowercase().as_str() {
                "p" => p = Some(v.parse::<usize>().map_err(|_| bad())?),
                "n0" => n0 = Some(v.parse::<usize>().map_err(|_| bad())?),
                "dc" => dc = Some(list(v)?),
                "bq" => bq = Some(list(v)?),
                "e" => e = v.parse().map_err(|_| bad())?,
                "seed" => seed = v.parse().map_err(|_| bad())?,
                other => return Err(Error::Parse(format!("unknown key `{}`", other))),
            }
        }
        let dc = dc.ok_or_else(|| Error::Parse("missing `dc`".into()))?;
        let params = SystemParams {
            p: p.ok_or_else(|| Error::Parse("missing `p`".into()))?,
            n0: n0.unwrap_or(dc.len()),
            dc_per_block: dc,
            bq_first_row: bq.ok_or_else(|| Error::Parse("missing `bq`".into()))?,
            error_weight: e,
            rng_seed: seed,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey {
    params: SystemParams,
    h: BlockCirculantMatrix,
    q: BlockCirculantMatrix,
    q_inv: BlockCirculantMatrix,
    h_prime: BlockCirculantMatrix,
}

impl PrivateKey {
    fn assemble(params: SystemParams, h: BlockCirculantMatrix, q: BlockCirculantMatrix) -> Result<Self> {
        let q_inv = q.invert_q()?;
        let h_prime = h.mat_mul(&q)?;
        Ok(PrivateKey { params, h, q, q_inv, h_prime })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn h(&self) -> &BlockCirculantMatrix {
        &self.h
    }

    pub fn q(&self) -> &BlockCirculantMatrix {
        &self.q
    }

    pub fn q_inv(&self) -> &BlockCirculantMatrix {
        &self.q_inv
    }

    /// Public parity-check matrix `H' = HQ`.
    pub fn h_prime(&self) -> &BlockCirculantMatrix {
        &self.h_prime
    }

    pub fn to_text(&self) -> String {
        let mut s = self.params.key_header();
        s.push('\n');
        for b in self.h.blocks().iter().chain(self.q.blocks()) {
            s.push_str(&b.to_text());
            s.push('\n');
        }
        s
    }
}

impl FromStr for PrivateKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty key file".into()))?;
        let params = SystemParams::from_key_header(header)?;
        let n0 = params.n0;
        let polys = lines.map(|l| l.parse::<PolyGF2>()).collect::<Result<Vec<_>>>()?;
        if polys.len() != n0 + n0 * n0 {
            return Err(Error::Parse(format!(
                "private key needs {} polynomials, found {}",
                n0 + n0 * n0,
                polys.len()
            )));
        }
        if polys.iter().any(|b| b.modulus() != params.p) {
            return Err(Error::Parse("polynomial modulus does not match header".into()));
        }
        let h = BlockCirculantMatrix::new(1, n0, polys[..n0].to_vec())?;
        let q = BlockCirculantMatrix::new(n0, n0, polys[n0..].to_vec())?;
        PrivateKey::assemble(params, h, q)
    }
}

/// Parity part of the systematic generator matrix `G' = [I | P]`: for
/// `u = (u_0, .., u_{N0-2})` the redundancy block is `sum_j u_j g_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    params: SystemParams,
    parity_blocks: Vec<PolyGF2>,
}

impl PublicKey {
    pub fn p(&self) -> usize {
        self.params.p
    }

    pub fn n0(&self) -> usize {
        self.params.n0
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn k(&self) -> usize {
        self.params.k()
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn parity_blocks(&self) -> &[PolyGF2] {
        &self.parity_blocks
    }

    /// `G'` as a `(N0 - 1) x N0` block matrix.
    pub fn generator(&self) -> Result<BlockCirculantMatrix> {
        let k0 = self.n0() - 1;
        let p = self.p();
        let mut blocks = Vec::with_capacity(k0 * self.n0());
        for i in 0..k0 {
            for j in 0..k0 {
                blocks.push(if i == j { PolyGF2::one(p)? } else { PolyGF2::zero(p)? });
            }
            blocks.push(self.parity_blocks[i].clone());
        }
        BlockCirculantMatrix::new(k0, self.n0(), blocks)
    }

    /// Systematic encoding `uG'`.
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.k() {
            return Err(Error::DimensionMismatch(format!(
                "plaintext of length {} (k = {})",
                u.len(),
                self.k()
            )));
        }
        let uv = BlockVector::from_bits(u, self.p())?;
        let mut parity = PolyGF2::zero(self.p())?;
        for (uj, gj) in uv.blocks().iter().zip(&self.parity_blocks) {
            if !uj.is_zero() {
                parity = parity.add(&uj.mul(gj)?)?;
            }
        }
        let mut x = u.to_vec();
        x.extend(parity.to_bits());
        Ok(x)
    }

    pub fn to_text(&self) -> String {
        let mut s = self.params.key_header();
        s.push('\n');
        for b in &self.parity_blocks {
            s.push_str(&b.to_text());
            s.push('\n');
        }
        s
    }
}

impl FromStr for PublicKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty key file".into()))?;
        let params = SystemParams::from_key_header(header)?;
        let parity_blocks = lines.map(|l| l.parse::<PolyGF2>()).collect::<Result<Vec<_>>>()?;
        if parity_blocks.len() != params.n0 - 1 {
            return Err(Error::Parse(format!(
                "public key needs {} polynomials, found {}",
                params.n0 - 1,
                parity_blocks.len()
            )));
        }
        if parity_blocks.iter().any(|b| b.modulus() != params.p) {
            return Err(Error::Parse("polynomial modulus does not match header".into()));
        }
        Ok(PublicKey { params, parity_blocks })
    }
}

fn random_poly<R: Rng + ?Sized>(rng: &mut R, p: usize, weight: usize) -> Result<PolyGF2> {
    let exps = sample(rng, p, weight).into_vec();
    PolyGF2::from_exponents(p, &exps)
}

/// Generates a key pair from `params.rng_seed` with the default attempt
/// budget.
pub fn keygen(params: &SystemParams) -> Result<(PrivateKey, PublicKey)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    keygen_with_rng(params, &mut rng, DEFAULT_MAX_ATTEMPTS)
}

/// Samples `H` and `Q` until `Q` is invertible and the last block of `HQ` is
/// a unit, then derives the systematic public key.
pub fn keygen_with_rng<R: Rng + ?Sized>(
    params: &SystemParams,
    rng: &mut R,
    max_attempts: usize,
) -> Result<(PrivateKey, PublicKey)> {
    params.validate()?;
    let (p, n0) = (params.p, params.n0);
    for _ in 0..max_attempts {
        let h_blocks = params
            .dc_per_block
            .iter()
            .map(|&w| random_poly(rng, p, w))
            .collect::<Result<Vec<_>>>()?;
        let mut q_blocks = Vec::with_capacity(n0 * n0);
        for i in 0..n0 {
            for j in 0..n0 {
                q_blocks.push(random_poly(rng, p, params.bq_first_row[(j + n0 - i) % n0])?);
            }
        }
        let h = BlockCirculantMatrix::new(1, n0, h_blocks)?;
        let q = BlockCirculantMatrix::new(n0, n0, q_blocks)?;
        let key = match PrivateKey::assemble(params.clone(), h, q) {
            Ok(k) => k,
            Err(Error::NotInvertible) => continue,
            Err(e) => return Err(e),
        };
        match public_from_private(&key) {
            Ok(public) => return Ok((key, public)),
            Err(Error::NotInvertible) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleLimitExceeded(max_attempts))
}

/// `g_j = transpose(h'_j h'_last^{-1})`, so that `x' = (u, sum_j u_j g_j)`
/// satisfies `x' H'^T = 0`.
pub fn public_from_private(key: &PrivateKey) -> Result<PublicKey> {
    let hp = key.h_prime();
    let n0 = hp.cols();
    let last_inv = hp.block(0, n0 - 1).inverse()?;
    let parity_blocks = (0..n0 - 1)
        .map(|j| Ok(hp.block(0, j).mul(&last_inv)?.transpose()))
        .collect::<Result<Vec<_>>>()?;
    let mut params = key.params().clone();
    params.error_weight = 0;
    params.rng_seed = 0;
    Ok(PublicKey { params, parity_blocks })
}

/// Ciphertext bits plus the error weight the sender used, which the
/// decoders take as their channel parameter.
#[derive(Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub bits: Vec<u8>,
    pub error_weight: usize,
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext(n={}, e={})", self.bits.len(), self.error_weight)
    }
}

impl Ciphertext {
    /// `e=<weight>` line followed by the bits as a 0/1 string.
    pub fn to_text(&self) -> String {
        format!("e={}\n{}\n", self.error_weight, bits_to_string(&self.bits))
    }
}

impl FromStr for Ciphertext {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty ciphertext".into()))?;
        let error_weight = head
            .strip_prefix("e=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad ciphertext header `{}`", head)))?;
        let bits = parse_bits(lines.next().unwrap_or(""))?;
        Ok(Ciphertext { bits, error_weight })
    }
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b & 1 == 1 { '1' } else { '0' }).collect()
}

/// Parses a 0/1 string, ignoring whitespace.
pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Parse(format!("unexpected character `{}` in bit string", c))),
        })
        .collect()
}

/// Uniformly random weight-`weight` vector of length `n`.
pub fn random_error<R: Rng + ?Sized>(rng: &mut R, n: usize, weight: usize) -> Result<Vec<u8>> {
    if weight > n {
        return Err(Error::InvalidParams(format!("error weight {} exceeds n = {}", weight, n)));
    }
    let mut e = vec![0u8; n];
    for i in sample(rng, n, weight).into_iter() {
        e[i] = 1;
    }
    Ok(e)
}

/// `c = uG' + e` with `e` uniform among weight-`e_weight` vectors.
pub fn encrypt<R: RngCore + ?Sized>(
    u: &[u8],
    public: &PublicKey,
    e_weight: usize,
    rng: &mut R,
) -> Result<Ciphertext> {
    encrypt_inner(u, public, e_weight, rng).map(|(c, _)| c)
}

/// As [`encrypt`] but also returns the sampled error vector.
#[cfg(any(test, feature = "test-utils"))]
pub fn encrypt_with_error<R: RngCore + ?Sized>(
    u: &[u8],
    public: &PublicKey,
    e_weight: usize,
    rng: &mut R,
) -> Result<(Ciphertext, Vec<u8>)> {
    encrypt_inner(u, public, e_weight, rng)
}

fn encrypt_inner<R: RngCore + ?Sized>(
    u: &[u8],
    public: &PublicKey,
    e_weight: usize,
    rng: &mut R,
) -> Result<(Ciphertext, Vec<u8>)> {
    let mut bits = public.encode(u)?;
    let e = random_error(rng, public.n(), e_weight)?;
    for (c, &x) in bits.iter_mut().zip(&e) {
        *c ^= x;
    }
    Ok((Ciphertext { bits, error_weight: e_weight }, e))
}

/// `c~ = cQ^T`.
pub fn transform_ciphertext(c: &Ciphertext, key: &PrivateKey) -> Result<Ciphertext> {
    let p = key.params().p;
    if c.bits.len() != key.params().n() {
        return Err(Error::DimensionMismatch(format!(
            "ciphertext of length {} (n = {})",
            c.bits.len(),
            key.params().n()
        )));
    }
    let v = BlockVector::from_bits(&c.bits, p)?;
    let t = v.vec_mat_mul(&key.q().block_transpose())?;
    Ok(Ciphertext { bits: t.to_bits(), error_weight: c.error_weight })
}

/// True if `x H^T = 0` for a `1 x N0` block parity-check matrix `h`.
pub fn is_codeword(x: &[u8], h: &BlockCirculantMatrix) -> Result<bool> {
    let v = BlockVector::from_bits(x, h.modulus())?;
    Ok(v.vec_mat_mul(&h.block_transpose())?.is_zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Basic,
    Mdpc,
    Proto,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(Strategy::Basic),
            "mdpc" => Ok(Strategy::Mdpc),
            "proto" => Ok(Strategy::Proto),
            _ => Err(Error::Parse(format!("unknown strategy `{}`", s))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Basic => "basic",
            Strategy::Mdpc => "mdpc",
            Strategy::Proto => "proto",
        })
    }
}

/// Decoding matrix of a strategy: `H`, `H'` or the extended matrix, with its
/// punctured block columns.
pub fn decoding_matrix(key: &PrivateKey, strategy: Strategy) -> Result<(BlockCirculantMatrix, Vec<bool>)> {
    let n0 = key.params().n0;
    Ok(match strategy {
        Strategy::Basic => (key.h().clone(), vec![false; n0]),
        Strategy::Mdpc => (key.h_prime().clone(), vec![false; n0]),
        Strategy::Proto => {
            let (m, b) = extended_matrix(key.h(), key.q())?;
            (m, b.punctured().to_vec())
        }
    })
}

/// Ensemble-level base matrix a strategy decodes on: `B_H`, `B_H B_Q` or
/// `[[B_Q, I], [0, B_H]]` with the right half punctured.
pub fn strategy_base(params: &SystemParams, strategy: Strategy) -> Result<BaseMatrix> {
    params.validate()?;
    let (b_h, b_q) = (params.base_h(), params.base_q());
    match strategy {
        Strategy::Basic => Ok(b_h),
        Strategy::Mdpc => b_h.mul(&b_q),
        Strategy::Proto => crate::graph::ext_base(&b_q, &b_h),
    }
}

/// Crossover probability handed to the decoder for error weight `e`:
/// `e / n`, or `min(e d_Q, n/2 - 1) / n` for the basic strategy. A zero
/// error weight is treated as half an error so the LLRs stay finite.
pub fn channel_crossover(params: &SystemParams, strategy: Strategy, e: usize) -> f64 {
    let n = params.n() as f64;
    let eff = match strategy {
        Strategy::Basic => ((e * params.dq()) as f64).min(n / 2.0 - 1.0),
        _ => e as f64,
    };
    eff.max(0.5) / n
}

/// Decoding context for one key pair, strategy and error weight. Holds the
/// Tanner graph and the resolved decoder configuration; shareable across
/// threads, each thread using its own [`Decoder`].
pub struct Decryptor<'k> {
    key: &'k PrivateKey,
    strategy: Strategy,
    graph: TannerGraph,
    base: BaseMatrix,
    config: DecoderConfig,
    crossover: f64,
    q_t: BlockCirculantMatrix,
    q_t_inv: BlockCirculantMatrix,
}

impl<'k> Decryptor<'k> {
    /// For TMP without an explicit weight schedule, the quantization
    /// threshold and per-iteration weights are derived from density
    /// evolution on the decoding base matrix.
    pub fn new(key: &'k PrivateKey, strategy: Strategy, config: &DecoderConfig, error_weight: usize) -> Result<Self> {
        config.validate()?;
        let (m, punct) = decoding_matrix(key, strategy)?;
        let base = m.base_of().with_punctured(punct.clone())?;
        let graph = graph_from_qc(&m, &punct)?;
        let crossover = channel_crossover(key.params(), strategy, error_weight);
        let mut config = config.clone();
        if config.algorithm == Algorithm::Tmp && config.tmp.cn_weights.is_none() {
            let t = de::optimal_tmp_threshold(&base, &de::DeConfig::default())?;
            config.tmp = de::tmp_decoder_settings(&base, crossover, t, config.max_iterations, config.llr_clip);
        }
        Ok(Decryptor {
            key,
            strategy,
            graph,
            base,
            config,
            crossover,
            q_t: key.q().block_transpose(),
            q_t_inv: key.q_inv().block_transpose(),
        })
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    pub fn decoder(&self) -> Decoder<'_> {
        Decoder::new(&self.graph)
    }

    /// Decodes and returns the plaintext; the recovered codeword is checked
    /// against `H'` before anything is returned.
    pub fn decrypt(&self, c: &Ciphertext, decoder: &mut Decoder<'_>) -> Result<Vec<u8>> {
        let params = self.key.params();
        let (n, p) = (params.n(), params.p);
        if c.bits.len() != n {
            return Err(Error::DimensionMismatch(format!("ciphertext of length {} (n = {})", c.bits.len(), n)));
        }
        let types = self.graph.num_vn_types();
        let crossover = vec![self.crossover; types];
        let codeword = match self.strategy {
            Strategy::Mdpc => {
                let ch = ChannelObservation::new(&self.graph, &c.bits, crossover)?;
                checked(decoder.decode(&ch, &self.config)?)?
            }
            Strategy::Basic => {
                let ct = BlockVector::from_bits(&c.bits, p)?.vec_mat_mul(&self.q_t)?;
                let ch = ChannelObservation::new(&self.graph, &ct.to_bits(), crossover)?;
                let x = checked(decoder.decode(&ch, &self.config)?)?;
                BlockVector::from_bits(&x, p)?.vec_mat_mul(&self.q_t_inv)?.to_bits()
            }
            Strategy::Proto => {
                let mut rx = c.bits.clone();
                rx.resize(2 * n, 0);
                let ch = ChannelObservation::new(&self.graph, &rx, crossover)?;
                let mut x = checked(decoder.decode(&ch, &self.config)?)?;
                x.truncate(n);
                x
            }
        };
        if !is_codeword(&codeword, self.key.h_prime())? {
            return Err(Error::DecodeFailure { iterations: self.config.max_iterations });
        }
        Ok(codeword[..params.k()].to_vec())
    }
}

fn checked(out: DecodeOutcome) -> Result<Vec<u8>> {
    if out.converged {
        Ok(out.word)
    } else {
        Err(Error::DecodeFailure { iterations: out.iterations })
    }
}

/// One-shot decryption. Builds the decoding graph on every call; use
/// [`Decryptor`] for repeated decryptions under one key.
pub fn decrypt(
    c: &Ciphertext,
    key: &PrivateKey,
    public: &PublicKey,
    strategy: Strategy,
    config: &DecoderConfig,
) -> Result<Vec<u8>> {
    if public.params().key_header() != key.params().key_header() {
        return Err(Error::InvalidParams("public and private key parameters differ".into()));
    }
    let d = Decryptor::new(key, strategy, config, c.error_weight)?;
    let mut dec = d.decoder();
    d.decrypt(c, &mut dec)
}
