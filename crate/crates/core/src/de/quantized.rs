//! Quantized density evolution for the sum-product algorithm over a BSC.
//!
//! LLR densities live on a uniform grid `-llr_max ..= llr_max` whose two
//! end points act as saturation bins. Check nodes use a precomputed
//! two-input boxplus table, variable nodes FFT-based convolution.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{EdgeTypes, ProbeOutcome, StallDetector};
use crate::decoder::channel_llr;
use crate::error::{Error, Result};
use crate::qc::BaseMatrix;

/// Uniform LLR grid with `2 * half_bins + 1` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantGrid {
    pub half_bins: usize,
    pub llr_max: f64,
}

impl Default for QuantGrid {
    /// 2^11 bins over `[-25, 25]`.
    fn default() -> Self {
        QuantGrid { half_bins: 1024, llr_max: 25.0 }
    }
}

impl QuantGrid {
    pub fn new(half_bins: usize, llr_max: f64) -> Result<Self> {
        if half_bins == 0 || half_bins > u16::MAX as usize || !(llr_max > 0.0) {
            return Err(Error::InvalidParams(format!("invalid grid ({half_bins} half bins, max {llr_max})")));
        }
        Ok(QuantGrid { half_bins, llr_max })
    }

    pub fn len(&self) -> usize {
        2 * self.half_bins + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.llr_max / self.half_bins as f64
    }

    /// LLR value of grid index `i`.
    pub fn value(&self, i: usize) -> f64 {
        (i as f64 - self.half_bins as f64) * self.step()
    }

    /// Nearest grid index, saturating at the ends.
    pub fn index_of(&self, llr: f64) -> usize {
        let k = self.half_bins as f64;
        ((llr / self.step()).round().clamp(-k, k) + k) as usize
    }
}

/// Probability mass function over a [`QuantGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedDensity {
    grid: QuantGrid,
    pmf: Vec<f64>,
}

impl QuantizedDensity {
    pub fn from_pmf(grid: QuantGrid, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(QuantizedDensity { grid, pmf })
    }

    /// Unit mass at the grid point nearest to `llr`.
    pub fn point(grid: QuantGrid, llr: f64) -> Self {
        let mut pmf = vec![0.0; grid.len()];
        pmf[grid.index_of(llr)] = 1.0;
        QuantizedDensity { grid, pmf }
    }

    /// Channel LLR density of a BSC with crossover `delta` (all-zero word).
    pub fn channel(grid: QuantGrid, delta: f64) -> Self {
        let l = channel_llr(delta, grid.llr_max);
        let mut pmf = vec![0.0; grid.len()];
        pmf[grid.index_of(l)] += 1.0 - delta;
        pmf[grid.index_of(-l)] += delta;
        QuantizedDensity { grid, pmf }
    }

    pub fn grid(&self) -> QuantGrid {
        self.grid
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn is_valid(&self) -> bool {
        self.pmf.iter().all(|&p| p >= 0.0) && (self.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9
    }

    /// Mass on negative LLRs plus half the mass at zero.
    pub fn error_probability(&self) -> f64 {
        let k = self.grid.half_bins;
        self.pmf[..k].iter().sum::<f64>() + 0.5 * self.pmf[k]
    }

    fn normalize(&mut self) {
        let s: f64 = self.pmf.iter().sum();
        if s > 0.0 {
            self.pmf.iter_mut().for_each(|p| *p /= s);
        }
    }

    fn to_sign_mag(&self) -> SignMag {
        let k = self.grid.half_bins;
        let mut plus = vec![0.0; k + 1];
        let mut minus = vec![0.0; k + 1];
        plus.copy_from_slice(&self.pmf[k..]);
        for m in 1..=k {
            minus[m] = self.pmf[k - m];
        }
        SignMag { plus, minus }
    }

    fn from_sign_mag(grid: QuantGrid, sm: &SignMag) -> Self {
        let k = grid.half_bins;
        let mut pmf = vec![0.0; grid.len()];
        pmf[k..].copy_from_slice(&sm.plus);
        pmf[k] += sm.minus[0];
        for m in 1..=k {
            pmf[k - m] = sm.minus[m];
        }
        let mut d = QuantizedDensity { grid, pmf };
        d.normalize();
        d
    }
}

/// Density split by sign; index is the LLR magnitude in grid steps.
#[derive(Clone, Debug)]
struct SignMag {
    plus: Vec<f64>,
    minus: Vec<f64>,
}

/// Bins lighter than this are skipped by the check-node rule; the mass
/// dropped per combination is below `2^11 * PRUNE`, far under any DE
/// success target.
const PRUNE: f64 = 1e-20;

impl SignMag {
    fn support(&self) -> Vec<usize> {
        (0..self.plus.len()).filter(|&m| self.plus[m] + self.minus[m] > PRUNE).collect()
    }

    /// A zero magnitude carries no sign.
    fn settle(mut plus: Vec<f64>, mut minus: Vec<f64>) -> SignMag {
        plus[0] += minus[0];
        minus[0] = 0.0;
        SignMag { plus, minus }
    }
}

/// Two-input boxplus on grid magnitudes:
/// `table[a][b] = round(2 atanh(tanh(a D / 2) tanh(b D / 2)) / D)`.
#[derive(Debug)]
pub struct BoxplusTable {
    grid: QuantGrid,
    table: Vec<u16>,
}

impl BoxplusTable {
    pub fn new(grid: QuantGrid) -> Self {
        let k = grid.half_bins;
        let d = grid.step();
        let th: Vec<f64> = (0..=k).map(|a| (a as f64 * d / 2.0).tanh()).collect();
        let mut table = vec![0u16; (k + 1) * (k + 1)];
        for a in 0..=k {
            for b in 0..=a {
                let x = th[a] * th[b];
                let llr = if x >= 1.0 { grid.llr_max } else { 2.0 * x.atanh() };
                let m = ((llr / d).round() as usize).min(b);
                table[a * (k + 1) + b] = m as u16;
                table[b * (k + 1) + a] = m as u16;
            }
        }
        BoxplusTable { grid, table }
    }

    /// Table for `grid`, built once per process and shared.
    pub fn shared(grid: QuantGrid) -> Arc<BoxplusTable> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<BoxplusTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((grid.half_bins, grid.llr_max.to_bits()))
            .or_insert_with(|| Arc::new(BoxplusTable::new(grid)))
            .clone()
    }

    pub fn grid(&self) -> QuantGrid {
        self.grid
    }

    /// Output magnitude index for input magnitudes `a`, `b`.
    pub fn get(&self, a: usize, b: usize) -> usize {
        self.table[a * (self.grid.half_bins + 1) + b] as usize
    }

    fn combine(&self, x: &SignMag, y: &SignMag) -> SignMag {
        let k = self.grid.half_bins;
        let mut plus = vec![0.0; k + 1];
        let mut minus = vec![0.0; k + 1];
        let nx = x.support();
        let ny = y.support();
        for &a in &nx {
            let (xp, xm) = (x.plus[a], x.minus[a]);
            let row = &self.table[a * (k + 1)..(a + 1) * (k + 1)];
            for &b in &ny {
                let (yp, ym) = (y.plus[b], y.minus[b]);
                let m = row[b] as usize;
                plus[m] += xp * yp + xm * ym;
                minus[m] += xp * ym + xm * yp;
            }
        }
        SignMag::settle(plus, minus)
    }

    /// `combine(x, x)`, visiting each unordered pair once.
    fn square(&self, x: &SignMag) -> SignMag {
        let k = self.grid.half_bins;
        let mut plus = vec![0.0; k + 1];
        let mut minus = vec![0.0; k + 1];
        let nx = x.support();
        for (ia, &a) in nx.iter().enumerate() {
            let (xp, xm) = (x.plus[a], x.minus[a]);
            let row = &self.table[a * (k + 1)..(a + 1) * (k + 1)];
            let m = row[a] as usize;
            plus[m] += xp * xp + xm * xm;
            minus[m] += 2.0 * xp * xm;
            let (xp2, xm2) = (2.0 * xp, 2.0 * xm);
            for &b in &nx[..ia] {
                let (yp, ym) = (x.plus[b], x.minus[b]);
                let m = row[b] as usize;
                plus[m] += xp2 * yp + xm2 * ym;
                minus[m] += xp2 * ym + xm2 * yp;
            }
        }
        SignMag::settle(plus, minus)
    }

    /// Boxplus of two independent densities.
    pub fn boxplus(&self, x: &QuantizedDensity, y: &QuantizedDensity) -> Result<QuantizedDensity> {
        if x.grid != self.grid || y.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(QuantizedDensity::from_sign_mag(self.grid, &self.combine(&x.to_sign_mag(), &y.to_sign_mag())))
    }

    /// `x` combined `count` times with itself; `None` is the identity
    /// (an infinitely reliable message).
    fn power(&self, x: &SignMag, count: u32) -> Option<SignMag> {
        let mut result: Option<SignMag> = None;
        let mut base = x.clone();
        let mut c = count;
        while c > 0 {
            if c & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => self.combine(&r, &base),
                });
            }
            c >>= 1;
            if c > 0 {
                base = self.square(&base);
            }
        }
        result
    }

    fn combine_opt(&self, x: Option<SignMag>, y: &Option<SignMag>) -> Option<SignMag> {
        match (x, y) {
            (None, y) => y.clone(),
            (x, None) => x,
            (Some(x), Some(y)) => Some(self.combine(&x, y)),
        }
    }
}

/// Per-edge-type message densities of a SPA DE run.
#[derive(Clone, Debug)]
pub struct SpaState {
    /// Variable-to-check densities, one per edge type.
    pub v2c: Vec<QuantizedDensity>,
    /// Check-to-variable densities, one per edge type.
    pub c2v: Vec<QuantizedDensity>,
    /// A-posteriori density of each variable-node type after the last step.
    pub app: Vec<QuantizedDensity>,
}

/// SPA density evolution on one base matrix.
pub struct SpaDe<'a> {
    base: &'a BaseMatrix,
    edges: EdgeTypes,
    table: Arc<BoxplusTable>,
    planner: FftPlanner<f64>,
}

impl<'a> SpaDe<'a> {
    pub fn new(base: &'a BaseMatrix, grid: QuantGrid) -> Self {
        SpaDe { base, edges: EdgeTypes::new(base), table: BoxplusTable::shared(grid), planner: FftPlanner::new() }
    }

    pub fn grid(&self) -> QuantGrid {
        self.table.grid()
    }

    /// Edge types `(row, col)` in state order.
    pub fn edge_types(&self) -> &[(usize, usize)] {
        &self.edges.list
    }

    fn channel_density(&self, j: usize, delta: f64) -> QuantizedDensity {
        if self.base.is_punctured(j) {
            QuantizedDensity::point(self.grid(), 0.0)
        } else {
            QuantizedDensity::channel(self.grid(), delta)
        }
    }

    /// State before the first iteration: every variable node forwards its
    /// channel density.
    pub fn initial_state(&self, delta: f64) -> SpaState {
        let v2c = self.edges.list.iter().map(|&(_, j)| self.channel_density(j, delta)).collect();
        let app = (0..self.base.cols()).map(|j| self.channel_density(j, delta)).collect();
        let c2v = vec![QuantizedDensity::point(self.grid(), 0.0); self.edges.list.len()];
        SpaState { v2c, c2v, app }
    }

    fn check_state(&self, state: &SpaState) -> Result<()> {
        let n = self.edges.list.len();
        if state.v2c.len() != n || state.c2v.len() != n {
            return Err(Error::DimensionMismatch(format!("state holds {} edge types, base has {n}", state.v2c.len())));
        }
        let g = self.grid();
        if state.v2c.iter().chain(&state.c2v).any(|d| d.grid != g) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// One flooding iteration (check side, then variable side). Returns the
    /// a-posteriori error probability of each variable-node type.
    pub fn step(&mut self, state: &mut SpaState, delta: f64) -> Result<Vec<f64>> {
        self.check_state(state)?;
        self.check_update(state);
        self.variable_update(state, delta);
        Ok(state.app.iter().map(QuantizedDensity::error_probability).collect())
    }

    fn check_update(&self, state: &mut SpaState) {
        let b = self.base;
        let g = self.grid();
        let tab = &*self.table;
        for i in 0..b.rows() {
            let types = &self.edges.by_cn[i];
            let sm: Vec<SignMag> = types.iter().map(|&t| state.v2c[t].to_sign_mag()).collect();
            let counts: Vec<u32> = types.iter().map(|&t| b.get(i, self.edges.list[t].1)).collect();
            let partial: Vec<Option<SignMag>> = sm.iter().zip(&counts).map(|(x, &c)| tab.power(x, c - 1)).collect();
            let full: Vec<Option<SignMag>> =
                partial.iter().zip(&sm).map(|(p, x)| tab.combine_opt(Some(x.clone()), p)).collect();
            for (k, &t) in types.iter().enumerate() {
                let mut acc = partial[k].clone();
                for (k2, f) in full.iter().enumerate() {
                    if k2 != k {
                        acc = tab.combine_opt(acc, f);
                    }
                }
                state.c2v[t] = match acc {
                    Some(x) => QuantizedDensity::from_sign_mag(g, &x),
                    None => QuantizedDensity::point(g, g.llr_max),
                };
            }
        }
    }

    fn variable_update(&mut self, state: &mut SpaState, delta: f64) {
        let g = self.grid();
        let (k, len) = (g.half_bins, g.len());
        for j in 0..self.base.cols() {
            let types = self.edges.by_vn[j].clone();
            let counts: Vec<u32> = types.iter().map(|&t| self.base.get(self.edges.list[t].0, j)).collect();
            let ch = self.channel_density(j, delta);
            if types.is_empty() {
                state.app[j] = ch;
                continue;
            }
            let factors = 1 + counts.iter().sum::<u32>() as usize;
            let size = (factors * (len - 1) + 1).next_power_of_two();
            let fft = self.planner.plan_fft_forward(size);
            let ifft = self.planner.plan_fft_inverse(size);
            let transform = |pmf: &[f64]| {
                let mut buf = vec![Complex::new(0.0, 0.0); size];
                for (b, &p) in buf.iter_mut().zip(pmf) {
                    b.re = p;
                }
                fft.process(&mut buf);
                buf
            };
            let f_ch = transform(&ch.pmf);
            let f_in: Vec<Vec<Complex<f64>>> = types.iter().map(|&t| transform(&state.c2v[t].pmf)).collect();
            let product = |skip: Option<usize>| {
                let mut buf = f_ch.clone();
                for (q, f) in f_in.iter().enumerate() {
                    let e = counts[q] - u32::from(skip == Some(q));
                    if e == 0 {
                        continue;
                    }
                    for (b, &x) in buf.iter_mut().zip(f) {
                        *b *= x.powu(e);
                    }
                }
                ifft.process(&mut buf);
                buf.into_iter().map(|c| (c.re / size as f64).max(0.0)).collect::<Vec<f64>>()
            };
            // Sum of `m` grid values has index offset `m * k`.
            let fold = |raw: &[f64], m: usize| {
                let mut pmf = vec![0.0; len];
                for (r, &p) in raw.iter().enumerate() {
                    let idx = (r as i64 - (m * k) as i64 + k as i64).clamp(0, 2 * k as i64) as usize;
                    pmf[idx] += p;
                }
                let mut d = QuantizedDensity { grid: g, pmf };
                d.normalize();
                d
            };
            for (q, &t) in types.iter().enumerate() {
                state.v2c[t] = fold(&product(Some(q)), factors - 1);
            }
            // Saturation preserves signs, so the folded density keeps the exact error.
            let app = fold(&product(None), factors);
            state.app[j] = app;
        }
    }
}

/// One SPA DE iteration on `base` at crossover `delta`.
pub fn spa_de_step(state: &mut SpaState, base: &BaseMatrix, delta: f64, grid: QuantGrid) -> Result<Vec<f64>> {
    SpaDe::new(base, grid).step(state, delta)
}

/// Runs SPA DE at one channel parameter.
pub(crate) fn run(base: &BaseMatrix, delta: f64, grid: QuantGrid, max_iterations: usize, target: f64) -> Result<ProbeOutcome> {
    let mut de = SpaDe::new(base, grid);
    let mut state = de.initial_state(delta);
    let mut stall = StallDetector::default();
    let mut err = f64::INFINITY;
    for it in 1..=max_iterations {
        err = de.step(&mut state, delta)?.into_iter().fold(0.0, f64::max);
        if err < target {
            return Ok(ProbeOutcome { converged: true, iterations: it, error: err });
        }
        if stall.stalled(err) {
            return Ok(ProbeOutcome { converged: false, iterations: it, error: err });
        }
    }
    Ok(ProbeOutcome { converged: false, iterations: max_iterations, error: err })
}
