//! Protograph density evolution over the BSC and decoding-threshold search.

pub mod quantized;
pub mod ternary;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

pub use quantized::{spa_de_step, BoxplusTable, QuantGrid, QuantizedDensity, SpaDe, SpaState};
pub use ternary::{tmp_cn_update, tmp_vn_update, TernaryDensity, WeightedIncoming};

use crate::decoder::{channel_llr, Algorithm, TmpConfig, TmpWeights};
use crate::error::{Error, Result};
use crate::qc::BaseMatrix;

/// How TMP check-message weights evolve over iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightMode {
    /// Log-likelihood ratio of each edge type's message error probability,
    /// recomputed every iteration.
    PerIteration,
    /// One constant weight for every edge type and iteration.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeConfig {
    pub max_iterations: usize,
    /// A probe succeeds when every variable-node type's error probability
    /// drops below this value.
    pub target: f64,
    /// Absolute bisection tolerance on the crossover probability.
    pub tolerance: f64,
    pub llr_clip: f64,
    /// TMP quantization threshold; `None` searches [`TMP_THRESHOLD_GRID`].
    pub tmp_threshold: Option<f64>,
    pub weight_mode: WeightMode,
    pub grid: QuantGrid,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            max_iterations: 2000,
            target: 1e-8,
            tolerance: 1e-5,
            llr_clip: 25.0,
            tmp_threshold: None,
            weight_mode: WeightMode::PerIteration,
            grid: QuantGrid::default(),
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.target > 0.0) || !(self.tolerance > 0.0) || !(self.llr_clip > 0.0) {
            return Err(Error::InvalidParams("DE iterations, target, tolerance and clip must be positive".into()));
        }
        if let Some(t) = self.tmp_threshold {
            if !(t > 0.0) {
                return Err(Error::InvalidParams(format!("TMP threshold {t} must be positive")));
            }
        }
        Ok(())
    }
}

/// Coarse grid of TMP quantization thresholds tried before local refinement.
pub const TMP_THRESHOLD_GRID: [f64; 16] =
    [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0];

/// Result of one DE run at a fixed channel parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Largest per-type error probability at the last iteration.
    pub error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub delta: f64,
    pub outcome: ProbeOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdResult {
    pub algorithm: Algorithm,
    /// Largest crossover probability at which DE was seen to converge.
    pub delta_star: f64,
    /// `delta_star * n` rounded, when a block length was supplied.
    pub n_delta: Option<u64>,
    /// DE iteration counts of the probes, in probe order.
    pub converged_at: Vec<usize>,
    pub probes: Vec<Probe>,
    /// TMP quantization threshold used.
    pub tmp_threshold: Option<f64>,
}

impl ThresholdResult {
    /// Unrounded `delta_star * n`.
    pub fn scaled(&self, n: usize) -> f64 {
        self.delta_star * n as f64
    }
}

impl fmt::Display for ThresholdResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} delta* = {:.6}", self.algorithm, self.delta_star)?;
        if let Some(nd) = self.n_delta {
            write!(f, ", n*delta* = {nd}")?;
        }
        if let Some(t) = self.tmp_threshold {
            write!(f, ", T = {t}")?;
        }
        Ok(())
    }
}

/// Nonzero base-matrix entries, with per-row and per-column views.
#[derive(Clone, Debug)]
pub(crate) struct EdgeTypes {
    pub list: Vec<(usize, usize)>,
    pub by_cn: Vec<Vec<usize>>,
    pub by_vn: Vec<Vec<usize>>,
}

impl EdgeTypes {
    pub fn new(base: &BaseMatrix) -> Self {
        let mut list = Vec::new();
        let mut by_cn = vec![Vec::new(); base.rows()];
        let mut by_vn = vec![Vec::new(); base.cols()];
        for i in 0..base.rows() {
            for j in 0..base.cols() {
                if base.get(i, j) > 0 {
                    by_cn[i].push(list.len());
                    by_vn[j].push(list.len());
                    list.push((i, j));
                }
            }
        }
        EdgeTypes { list, by_cn, by_vn }
    }

    #[cfg(test)]
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.list.iter().position(|&e| e == (i, j))
    }
}

/// Declares a run failed once its error has not reached a new minimum for
/// a while. Comparing against the best value so far, rather than the
/// previous iteration, also catches runs that settle into an oscillation.
#[derive(Debug)]
pub(crate) struct StallDetector {
    best: f64,
    since_best: usize,
    iterations: usize,
}

impl Default for StallDetector {
    fn default() -> Self {
        StallDetector { best: f64::INFINITY, since_best: 0, iterations: 0 }
    }
}

impl StallDetector {
    const MIN_ITERATIONS: usize = 10;
    const PATIENCE: usize = 50;
    const RELATIVE: f64 = 1e-10;

    pub fn stalled(&mut self, err: f64) -> bool {
        self.iterations += 1;
        if err < self.best * (1.0 - Self::RELATIVE) {
            self.best = err;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.iterations >= Self::MIN_ITERATIONS && self.since_best >= Self::PATIENCE
    }
}


/// Runs DE once at crossover `delta`.
pub fn probe(base: &BaseMatrix, algorithm: Algorithm, delta: f64, config: &DeConfig) -> Result<ProbeOutcome> {
    config.validate()?;
    check_delta(delta)?;
    match algorithm {
        Algorithm::Spa => quantized::run(base, delta, config.grid, config.max_iterations, config.target),
        Algorithm::Tmp => {
            let t = config.tmp_threshold.unwrap_or(1.0);
            Ok(ternary::run(base, delta, t, &config.weight_mode, config.max_iterations, config.target, config.llr_clip))
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParams(format!("crossover {delta} outside (0, 0.5)")));
    }
    Ok(())
}

/// Largest crossover probability for which DE converges, by a halving scan
/// from 0.4, bisection, and a final check at half the result. Every probe
/// is kept; a converged probe above a failed one is reported as
/// [`Error::NonMonotone`].
pub fn find_threshold(base: &BaseMatrix, algorithm: Algorithm, config: &DeConfig, n: Option<usize>) -> Result<ThresholdResult> {
    config.validate()?;
    let mut config = config.clone();
    let tmp_threshold = match algorithm {
        Algorithm::Tmp => {
            let t = match config.tmp_threshold {
                Some(t) => t,
                None => optimal_tmp_threshold(base, &config)?,
            };
            config.tmp_threshold = Some(t);
            Some(t)
        }
        Algorithm::Spa => None,
    };
    let probes = bisect(config.tolerance, |d| probe(base, algorithm, d, &config))?;
    let delta_star = probes.iter().filter(|p| p.outcome.converged).map(|p| p.delta).fold(0.0, f64::max);
    Ok(ThresholdResult {
        algorithm,
        delta_star,
        n_delta: n.map(|n| (delta_star * n as f64).round() as u64),
        converged_at: probes.iter().map(|p| p.outcome.iterations).collect(),
        probes,
        tmp_threshold,
    })
}

const SCAN_START: f64 = 0.4;
const SCAN_FLOOR: f64 = 1e-7;

fn bisect(tolerance: f64, mut run: impl FnMut(f64) -> Result<ProbeOutcome>) -> Result<Vec<Probe>> {
    let mut probes = Vec::new();
    let mut hi = SCAN_START;
    let mut probe = |d: f64, probes: &mut Vec<Probe>| -> Result<bool> {
        let outcome = run(d)?;
        probes.push(Probe { delta: d, outcome });
        Ok(outcome.converged)
    };
    if probe(hi, &mut probes)? {
        return finish(probes);
    }
    let mut lo = hi / 2.0;
    while !probe(lo, &mut probes)? {
        hi = lo;
        lo /= 2.0;
        if lo < SCAN_FLOOR {
            return finish(probes);
        }
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut probes)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Spot check well inside the converging region.
    if lo / 2.0 >= SCAN_FLOOR && !probes.iter().any(|p| p.delta == lo / 2.0) {
        probe(lo / 2.0, &mut probes)?;
    }
    finish(probes)
}

fn finish(probes: Vec<Probe>) -> Result<Vec<Probe>> {
    let best = probes.iter().filter(|p| p.outcome.converged).map(|p| p.delta).fold(0.0, f64::max);
    let worst = probes.iter().filter(|p| !p.outcome.converged).map(|p| p.delta).fold(f64::INFINITY, f64::min);
    if best > worst {
        return Err(Error::NonMonotone(format!("DE converged at {best} but failed at {worst}")));
    }
    Ok(probes)
}

/// TMP quantization threshold maximizing the DE threshold: the best point
/// of [`TMP_THRESHOLD_GRID`], refined in steps of 0.05 around it. Ties go
/// to the smaller value.
/// Results are memoized per process.
pub fn optimal_tmp_threshold(base: &BaseMatrix, config: &DeConfig) -> Result<f64> {
    config.validate()?;
    static CACHE: OnceLock<Mutex<HashMap<String, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = format!(
        "{}|{}|{}|{}|{}|{:?}",
        base.to_text(),
        config.max_iterations,
        config.target,
        config.tolerance,
        config.llr_clip,
        config.weight_mode
    );
    if let Some(&t) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(t);
    }
    let t = search_tmp_threshold(base, config)?;
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, t);
    Ok(t)
}

fn search_tmp_threshold(base: &BaseMatrix, config: &DeConfig) -> Result<f64> {
    let search_tol = config.tolerance.max(1e-5);
    let eval = |t: f64| -> Result<f64> {
        let cfg = DeConfig { tmp_threshold: Some(t), tolerance: search_tol, ..config.clone() };
        let probes = bisect(search_tol, |d| probe(base, Algorithm::Tmp, d, &cfg))?;
        Ok(probes.iter().filter(|p| p.outcome.converged).map(|p| p.delta).fold(0.0, f64::max))
    };
    let mut best = (f64::NEG_INFINITY, 1.0);
    for &t in &TMP_THRESHOLD_GRID {
        let d = eval(t)?;
        if d > best.0 {
            best = (d, t);
        }
    }
    let center = best.1;
    for k in -4i32..=4 {
        let t = center + 0.05 * k as f64;
        if k == 0 || t <= 0.0 {
            continue;
        }
        let d = eval(t)?;
        if d > best.0 || (d == best.0 && t < best.1) {
            best = (d, t);
        }
    }
    Ok(best.1)
}

/// TMP weight schedule from DE at crossover `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct TmpSchedule {
    pub threshold: f64,
    pub channel_weight: f64,
    pub cn_weights: TmpWeights,
}

/// Runs TMP DE at `delta` and records, per iteration and edge type, the
/// weight `ln((1 - eps) / eps)` of the check messages, `eps` being their
/// error probability given non-erasure. Without a configured threshold
/// `T` the optimal one is searched first.
pub fn tmp_weight_schedule(base: &BaseMatrix, delta: f64, iterations: usize, config: &DeConfig) -> Result<TmpSchedule> {
    config.validate()?;
    check_delta(delta)?;
    let threshold = match config.tmp_threshold {
        Some(t) => t,
        None => optimal_tmp_threshold(base, config)?,
    };
    Ok(TmpSchedule {
        threshold,
        channel_weight: channel_llr(delta, config.llr_clip),
        cn_weights: ternary::weight_schedule(base, delta, threshold, iterations, config.llr_clip),
    })
}

/// Decoder settings for TMP at crossover `delta` with threshold `t`.
pub fn tmp_decoder_settings(base: &BaseMatrix, delta: f64, t: f64, iterations: usize, clip: f64) -> TmpConfig {
    TmpConfig {
        threshold: t,
        channel_weight: Some(channel_llr(delta, clip)),
        cn_weights: Some(ternary::weight_schedule(base, delta, t, iterations, clip)),
    }
}
