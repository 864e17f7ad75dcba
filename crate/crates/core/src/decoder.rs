//! Flooding-schedule message-passing decoders over a [`TannerGraph`]:
//! attenuated sum-product (LLR domain) and ternary message passing.
//!
//! Punctured variable nodes carry the neutral observation (LLR 0, ternary
//! erasure). A decoder owns its message buffers; several decoders can share
//! one graph.

use crate::error::{Error, Result};
use crate::graph::TannerGraph;

/// Message-passing rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Spa,
    Tmp,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spa" | "bp" => Ok(Algorithm::Spa),
            "tmp" => Ok(Algorithm::Tmp),
            _ => Err(Error::Parse(format!("unknown algorithm `{}`", s))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Spa => "spa",
            Algorithm::Tmp => "tmp",
        })
    }
}

/// Per-iteration weights of check-to-variable messages for TMP, one value
/// per edge type `(check type, variable type)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TmpWeights {
    pub num_cn_types: usize,
    pub num_vn_types: usize,
    /// `iterations[l][ct * num_vn_types + vt]` is used in iteration `l + 1`;
    /// the last entry is reused past the end.
    pub iterations: Vec<Vec<f64>>,
}

impl TmpWeights {
    pub fn constant(num_cn_types: usize, num_vn_types: usize, w: f64) -> Self {
        TmpWeights {
            num_cn_types,
            num_vn_types,
            iterations: vec![vec![w; num_cn_types * num_vn_types]],
        }
    }

    fn at(&self, iteration: usize) -> &[f64] {
        let idx = iteration.min(self.iterations.len() - 1);
        &self.iterations[idx]
    }
}

/// TMP-specific settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TmpConfig {
    /// Quantization threshold `T`.
    pub threshold: f64,
    /// Channel weight override; `None` uses `ln((1 - d) / d)` per VN type.
    pub channel_weight: Option<f64>,
    /// Check-message weights; `None` means all ones.
    pub cn_weights: Option<TmpWeights>,
}

impl Default for TmpConfig {
    fn default() -> Self {
        TmpConfig { threshold: 1.0, channel_weight: None, cn_weights: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConfig {
    pub algorithm: Algorithm,
    pub max_iterations: usize,
    /// Attenuation `alpha` of check-node extrinsics (SPA).
    pub attenuation: f64,
    /// LLR saturation magnitude.
    pub llr_clip: f64,
    pub tmp: TmpConfig,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            algorithm: Algorithm::Spa,
            max_iterations: 100,
            attenuation: 1.0,
            llr_clip: 25.0,
            tmp: TmpConfig::default(),
        }
    }
}

impl DecoderConfig {
    pub fn spa() -> Self {
        Self::default()
    }

    pub fn tmp() -> Self {
        DecoderConfig { algorithm: Algorithm::Tmp, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be at least 1".into()));
        }
        if !(self.attenuation > 0.0 && self.attenuation <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "attenuation {} outside (0, 1]",
                self.attenuation
            )));
        }
        if !(self.tmp.threshold > 0.0) {
            return Err(Error::InvalidParams("TMP threshold must be positive".into()));
        }
        if !(self.llr_clip > 0.0) {
            return Err(Error::InvalidParams("llr_clip must be positive".into()));
        }
        if let Some(w) = &self.tmp.cn_weights {
            if w.iterations.is_empty() || w.iterations.iter().any(|r| r.len() != w.num_cn_types * w.num_vn_types) {
                return Err(Error::InvalidParams("malformed TMP weight schedule".into()));
            }
        }
        Ok(())
    }
}

/// Hard BSC observations plus per-VN-type crossover probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelObservation {
    /// `+1` for a received 0, `-1` for a received 1, `0` for punctured.
    pub hard: Vec<i8>,
    /// Crossover probability per variable-node type.
    pub crossover: Vec<f64>,
}

impl ChannelObservation {
    /// `received` has one bit per variable node; entries of punctured nodes
    /// are ignored.
    pub fn new(graph: &TannerGraph, received: &[u8], crossover: Vec<f64>) -> Result<Self> {
        if received.len() != graph.num_vn() {
            return Err(Error::DimensionMismatch(format!(
                "{} received bits for {} variable nodes",
                received.len(),
                graph.num_vn()
            )));
        }
        if crossover.len() != graph.num_vn_types() {
            return Err(Error::DimensionMismatch("one crossover per VN type required".into()));
        }
        let mut observed_type = vec![false; crossover.len()];
        let hard = received
            .iter()
            .enumerate()
            .map(|(v, &b)| {
                if graph.is_punctured(v) {
                    0
                } else {
                    observed_type[graph.vn_type(v)] = true;
                    if b & 1 == 0 {
                        1
                    } else {
                        -1
                    }
                }
            })
            .collect();
        for (t, &d) in crossover.iter().enumerate() {
            if observed_type[t] && !(d > 0.0 && d < 0.5) {
                return Err(Error::InvalidParams(format!(
                    "crossover {} for VN type {} outside (0, 1/2)",
                    d, t
                )));
            }
        }
        Ok(ChannelObservation { hard, crossover })
    }

    /// Channel LLRs, saturated at `clip`.
    pub fn llrs(&self, graph: &TannerGraph, clip: f64) -> Vec<f64> {
        let mags: Vec<f64> = self.crossover.iter().map(|&d| channel_llr(d, clip)).collect();
        self.hard
            .iter()
            .enumerate()
            .map(|(v, &h)| h as f64 * mags[graph.vn_type(v)])
            .collect()
    }
}

/// `ln((1 - d) / d)` saturated at `clip`.
pub fn channel_llr(delta: f64, clip: f64) -> f64 {
    if delta <= 0.0 {
        return clip;
    }
    if delta >= 1.0 {
        return -clip;
    }
    ((1.0 - delta) / delta).ln().clamp(-clip, clip)
}

/// Two-input check-node rule `2 atanh(tanh(a/2) tanh(b/2))`.
pub fn boxplus(a: f64, b: f64) -> f64 {
    atanh2((a / 2.0).tanh() * (b / 2.0).tanh())
}

/// `2 atanh(x)` with a finite result at `|x| = 1`.
#[inline]
fn atanh2(x: f64) -> f64 {
    let x = x.clamp(-1.0 + 1e-16, 1.0 - 1e-16);
    ((1.0 + x) / (1.0 - x)).ln()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Hard decision per variable node (punctured ones included).
    pub word: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Message buffers bound to one graph.
pub struct Decoder<'g> {
    graph: &'g TannerGraph,
    edge_type: Vec<u32>,
    llr_c2v: Vec<f64>,
    llr_v2c: Vec<f64>,
    tern_c2v: Vec<i8>,
    tern_v2c: Vec<i8>,
    scratch: Vec<f64>,
    word: Vec<u8>,
}

impl<'g> Decoder<'g> {
    pub fn new(graph: &'g TannerGraph) -> Self {
        let nvt = graph.num_vn_types();
        let mut edge_type = vec![0u32; graph.num_edges()];
        for c in 0..graph.num_cn() {
            let ct = graph.cn_type(c);
            for e in graph.cn_edges(c) {
                edge_type[e] = (ct * nvt + graph.vn_type(graph.edge_vn(e))) as u32;
            }
        }
        Decoder {
            graph,
            edge_type,
            llr_c2v: Vec::new(),
            llr_v2c: Vec::new(),
            tern_c2v: Vec::new(),
            tern_v2c: Vec::new(),
            scratch: Vec::new(),
            word: vec![0; graph.num_vn()],
        }
    }

    pub fn graph(&self) -> &TannerGraph {
        self.graph
    }

    /// Dispatches on `config.algorithm`.
    pub fn decode(&mut self, channel: &ChannelObservation, config: &DecoderConfig) -> Result<DecodeOutcome> {
        match config.algorithm {
            Algorithm::Spa => self.decode_spa(channel, config),
            Algorithm::Tmp => self.decode_tmp(channel, config),
        }
    }

    pub fn decode_spa(&mut self, channel: &ChannelObservation, config: &DecoderConfig) -> Result<DecodeOutcome> {
        let llrs = channel.llrs(self.graph, config.llr_clip);
        self.decode_spa_llr(&llrs, config)
    }

    /// Sum-product decoding from raw channel LLRs (one per variable node).
    pub fn decode_spa_llr(&mut self, llrs: &[f64], config: &DecoderConfig) -> Result<DecodeOutcome> {
        config.validate()?;
        let g = self.graph;
        if llrs.len() != g.num_vn() {
            return Err(Error::DimensionMismatch("one LLR per variable node required".into()));
        }
        let clip = config.llr_clip;
        let alpha = config.attenuation;
        let ne = g.num_edges();
        self.llr_c2v.clear();
        self.llr_c2v.resize(ne, 0.0);
        self.llr_v2c.clear();
        self.llr_v2c.resize(ne, 0.0);
        let ch: Vec<f64> = llrs.iter().map(|&l| l.clamp(-clip, clip)).collect();
        for e in 0..ne {
            self.llr_v2c[e] = ch[g.edge_vn(e)];
        }

        for it in 1..=config.max_iterations {
            // Check nodes: forward-backward products of tanh(m / 2).
            for c in 0..g.num_cn() {
                let r = g.cn_edges(c);
                let d = r.len();
                self.scratch.clear();
                self.scratch.extend(self.llr_v2c[r.clone()].iter().map(|&m| (m / 2.0).tanh()));
                let mut fwd = 1.0;
                for k in 0..d {
                    self.llr_c2v[r.start + k] = fwd;
                    fwd *= self.scratch[k];
                }
                let mut bwd = 1.0;
                for k in (0..d).rev() {
                    let prod = self.llr_c2v[r.start + k] * bwd;
                    self.llr_c2v[r.start + k] = (alpha * atanh2(prod)).clamp(-clip, clip);
                    bwd *= self.scratch[k];
                }
            }
            // Variable nodes.
            for v in 0..g.num_vn() {
                let edges = g.vn_edges(v);
                let total: f64 = ch[v] + edges.iter().map(|&e| self.llr_c2v[e as usize]).sum::<f64>();
                for &e in edges {
                    let e = e as usize;
                    self.llr_v2c[e] = (total - self.llr_c2v[e]).clamp(-clip, clip);
                }
                self.word[v] = u8::from(total < 0.0);
            }
            if g.syndrome_is_zero(&self.word) {
                return Ok(DecodeOutcome { word: self.word.clone(), converged: true, iterations: it });
            }
        }
        Ok(DecodeOutcome {
            word: self.word.clone(),
            converged: false,
            iterations: config.max_iterations,
        })
    }

    /// Ternary message passing.
    pub fn decode_tmp(&mut self, channel: &ChannelObservation, config: &DecoderConfig) -> Result<DecodeOutcome> {
        config.validate()?;
        let g = self.graph;
        if channel.hard.len() != g.num_vn() || channel.crossover.len() != g.num_vn_types() {
            return Err(Error::DimensionMismatch("channel does not match graph".into()));
        }
        let ntypes = g.num_cn_types() * g.num_vn_types();
        if let Some(w) = &config.tmp.cn_weights {
            if w.num_cn_types * w.num_vn_types != ntypes || w.num_vn_types != g.num_vn_types() {
                return Err(Error::DimensionMismatch("TMP weights do not match graph types".into()));
            }
        }
        let unit = vec![1.0; ntypes];
        let t = config.tmp.threshold;
        let wch: Vec<f64> = channel
            .crossover
            .iter()
            .map(|&d| config.tmp.channel_weight.unwrap_or_else(|| channel_llr(d, config.llr_clip)))
            .collect();
        let ne = g.num_edges();
        self.tern_c2v.clear();
        self.tern_c2v.resize(ne, 0);
        self.tern_v2c.clear();
        self.tern_v2c.resize(ne, 0);
        let ch_term: Vec<f64> = (0..g.num_vn())
            .map(|v| channel.hard[v] as f64 * wch[g.vn_type(v)])
            .collect();
        for e in 0..ne {
            self.tern_v2c[e] = quantize(ch_term[g.edge_vn(e)], t);
        }

        for it in 1..=config.max_iterations {
            let w: &[f64] = match &config.tmp.cn_weights {
                Some(s) => s.at(it - 1),
                None => &unit,
            };
            for c in 0..g.num_cn() {
                let r = g.cn_edges(c);
                let mut zeros = 0usize;
                let mut zero_at = 0usize;
                let mut sign = 1i8;
                for e in r.clone() {
                    match self.tern_v2c[e] {
                        0 => {
                            zeros += 1;
                            zero_at = e;
                        }
                        m => sign *= m,
                    }
                }
                match zeros {
                    0 => {
                        for e in r {
                            self.tern_c2v[e] = sign * self.tern_v2c[e];
                        }
                    }
                    1 => {
                        for e in r {
                            self.tern_c2v[e] = 0;
                        }
                        self.tern_c2v[zero_at] = sign;
                    }
                    _ => {
                        for e in r {
                            self.tern_c2v[e] = 0;
                        }
                    }
                }
            }
            for v in 0..g.num_vn() {
                let edges = g.vn_edges(v);
                let mut s = ch_term[v];
                for &e in edges {
                    let e = e as usize;
                    s += w[self.edge_type[e] as usize] * self.tern_c2v[e] as f64;
                }
                for &e in edges {
                    let e = e as usize;
                    let ext = s - w[self.edge_type[e] as usize] * self.tern_c2v[e] as f64;
                    self.tern_v2c[e] = quantize(ext, t);
                }
                self.word[v] = if s > 0.0 {
                    0
                } else if s < 0.0 {
                    1
                } else {
                    u8::from(channel.hard[v] < 0)
                };
            }
            if g.syndrome_is_zero(&self.word) {
                return Ok(DecodeOutcome { word: self.word.clone(), converged: true, iterations: it });
            }
        }
        Ok(DecodeOutcome {
            word: self.word.clone(),
            converged: false,
            iterations: config.max_iterations,
        })
    }
}

/// Ternary quantizer with closed threshold: `S >= T -> +1`, `S <= -T -> -1`.
#[inline]
pub fn quantize(s: f64, t: f64) -> i8 {
    if s >= t {
        1
    } else if s <= -t {
        -1
    } else {
        0
    }
}

/// Ternary check-node rule: product of the incoming messages.
pub fn tmp_check(incoming: &[i8]) -> i8 {
    incoming.iter().product()
}
