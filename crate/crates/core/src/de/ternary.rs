//! Exact density evolution for ternary message passing over a BSC.
//!
//! Densities are conditioned on the all-zero codeword, so `p_minus` is the
//! probability of a wrong non-erased message.

use super::{EdgeTypes, ProbeOutcome, StallDetector, WeightMode};
use crate::decoder::{channel_llr, TmpWeights};
use crate::qc::BaseMatrix;

/// Probabilities of the messages `-1`, `0` (erasure) and `+1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TernaryDensity {
    pub p_minus: f64,
    pub p_zero: f64,
    pub p_plus: f64,
}

impl TernaryDensity {
    pub const ERASURE: TernaryDensity = TernaryDensity { p_minus: 0.0, p_zero: 1.0, p_plus: 0.0 };
    pub const CERTAIN: TernaryDensity = TernaryDensity { p_minus: 0.0, p_zero: 0.0, p_plus: 1.0 };

    pub fn new(p_minus: f64, p_zero: f64, p_plus: f64) -> Self {
        TernaryDensity { p_minus, p_zero, p_plus }
    }

    /// BSC observation with crossover `delta`.
    pub fn channel(delta: f64) -> Self {
        TernaryDensity { p_minus: delta, p_zero: 0.0, p_plus: 1.0 - delta }
    }

    pub fn is_valid(&self) -> bool {
        let s = self.p_minus + self.p_zero + self.p_plus;
        self.p_minus >= -1e-15 && self.p_zero >= -1e-15 && self.p_plus >= -1e-15 && (s - 1.0).abs() < 1e-12
    }

    /// Error probability given the message is not an erasure.
    pub fn conditional_error(&self) -> Option<f64> {
        let nz = self.p_minus + self.p_plus;
        (nz > 0.0).then(|| self.p_minus / nz)
    }
}

/// Check-node rule: the outgoing message is the product of the incoming
/// ones. With `a_i = 1 - p0_i` and `b_i = p+_i - p-_i`, the output is
/// `((A - B) / 2, 1 - A, (A + B) / 2)` for `A = prod a_i`, `B = prod b_i`.
pub fn tmp_cn_update(incoming: &[TernaryDensity]) -> TernaryDensity {
    tmp_cn_update_counts(incoming.iter().map(|d| (*d, 1)))
}

/// As [`tmp_cn_update`] with each density repeated `count` times.
pub fn tmp_cn_update_counts(incoming: impl IntoIterator<Item = (TernaryDensity, u32)>) -> TernaryDensity {
    let mut a = 1.0f64;
    let mut b = 1.0f64;
    for (d, c) in incoming {
        if c == 0 {
            continue;
        }
        a *= (1.0 - d.p_zero).powi(c as i32);
        b *= (d.p_plus - d.p_minus).powi(c as i32);
    }
    TernaryDensity { p_minus: ((a - b) / 2.0).max(0.0), p_zero: (1.0 - a).max(0.0), p_plus: ((a + b) / 2.0).max(0.0) }
}

/// Incoming messages of one edge type at a variable node.
#[derive(Clone, Copy, Debug)]
pub struct WeightedIncoming {
    pub density: TernaryDensity,
    pub count: u32,
    pub weight: f64,
}

/// Distribution of the sum of `count` iid ternary messages, indexed by
/// `k + count` for `k` in `-count..=count`.
fn trinomial(d: &TernaryDensity, count: u32) -> Vec<f64> {
    let c = count as usize;
    let mut dist = vec![0.0; 2 * c + 1];
    dist[c] = 1.0;
    let mut lo = c;
    let mut hi = c;
    for _ in 0..c {
        let mut next = vec![0.0; 2 * c + 1];
        for k in lo..=hi {
            let pk = dist[k];
            if pk == 0.0 {
                continue;
            }
            next[k - 1] += pk * d.p_minus;
            next[k] += pk * d.p_zero;
            next[k + 1] += pk * d.p_plus;
        }
        lo -= 1;
        hi += 1;
        dist = next;
    }
    dist
}

/// Exact distribution of `w_ch * m_ch + sum w_t * m` as sorted atoms.
fn sum_atoms(channel: Option<(f64, f64)>, incoming: &[WeightedIncoming]) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = match channel {
        Some((delta, w_ch)) => vec![(-w_ch, delta), (w_ch, 1.0 - delta)],
        None => vec![(0.0, 1.0)],
    };
    for inc in incoming {
        if inc.count == 0 {
            continue;
        }
        let dist = trinomial(&inc.density, inc.count);
        let c = inc.count as i64;
        let mut next = Vec::with_capacity(atoms.len() * dist.len());
        for &(v, p) in &atoms {
            for (k, &q) in dist.iter().enumerate() {
                if q > 0.0 {
                    next.push((v + inc.weight * (k as i64 - c) as f64, p * q));
                }
            }
        }
        atoms = merge_atoms(next);
    }
    atoms
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match out.last_mut() {
            Some(last) if (last.0 - v).abs() <= 1e-12 * (1.0 + v.abs()) => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    out
}

const TIE: f64 = 1e-12;

/// Variable-node rule: `S = w_ch * m_ch + sum w * m`, quantized to `+1` if
/// `S >= T`, `-1` if `S <= -T`, erasure otherwise. `channel` is
/// `Some((delta, w_ch))` for observed nodes and `None` for punctured ones.
pub fn tmp_vn_update(channel: Option<(f64, f64)>, incoming: &[WeightedIncoming], threshold: f64) -> TernaryDensity {
    let atoms = sum_atoms(channel, incoming);
    let mut pm = 0.0;
    let mut pp = 0.0;
    for (v, p) in atoms {
        if v >= threshold - TIE {
            pp += p;
        } else if v <= -threshold + TIE {
            pm += p;
        }
    }
    TernaryDensity { p_minus: pm, p_zero: (1.0 - pm - pp).max(0.0), p_plus: pp }
}

/// Probability that the sign of `S` is wrong, ties counted as one half.
fn decision_error(channel: Option<(f64, f64)>, incoming: &[WeightedIncoming]) -> f64 {
    let atoms = sum_atoms(channel, incoming);
    atoms
        .iter()
        .map(|&(v, p)| if v < -TIE { p } else if v <= TIE { 0.5 * p } else { 0.0 })
        .sum()
}

/// Weight `ln((1 - eps) / eps)` of a message type, saturated at `clip`.
pub fn message_weight(d: &TernaryDensity, clip: f64) -> f64 {
    match d.conditional_error() {
        Some(eps) => channel_llr(eps, clip),
        None => 0.0,
    }
}

/// State of one ternary DE run.
pub(crate) struct TernaryRun<'a> {
    base: &'a BaseMatrix,
    edges: EdgeTypes,
    delta: f64,
    threshold: f64,
    w_ch: f64,
    pub v2c: Vec<TernaryDensity>,
    pub c2v: Vec<TernaryDensity>,
    pub weights: Vec<f64>,
}

impl<'a> TernaryRun<'a> {
    pub fn new(base: &'a BaseMatrix, delta: f64, threshold: f64, clip: f64) -> Self {
        let edges = EdgeTypes::new(base);
        let w_ch = channel_llr(delta, clip);
        let init = |j: usize| {
            if base.is_punctured(j) {
                TernaryDensity::ERASURE
            } else if w_ch >= threshold - TIE {
                TernaryDensity::channel(delta)
            } else {
                TernaryDensity::ERASURE
            }
        };
        let v2c = edges.list.iter().map(|&(_, j)| init(j)).collect();
        let n = edges.list.len();
        TernaryRun {
            base,
            edges,
            delta,
            threshold,
            w_ch,
            v2c,
            c2v: vec![TernaryDensity::ERASURE; n],
            weights: vec![0.0; n],
        }
    }

    fn channel(&self, j: usize) -> Option<(f64, f64)> {
        (!self.base.is_punctured(j)).then_some((self.delta, self.w_ch))
    }

    /// One iteration; returns the largest decision error over VN types.
    pub fn step(&mut self, mode: &WeightMode, clip: f64) -> f64 {
        let b = self.base;
        let et = &self.edges;
        for (t, &(i, j)) in et.list.iter().enumerate() {
            let inc = et.by_cn[i].iter().map(|&t2| {
                let (_, j2) = et.list[t2];
                let c = b.get(i, j2) - u32::from(j2 == j);
                (self.v2c[t2], c)
            });
            self.c2v[t] = tmp_cn_update_counts(inc);
        }
        for t in 0..et.list.len() {
            self.weights[t] = match mode {
                WeightMode::PerIteration => message_weight(&self.c2v[t], clip),
                WeightMode::Fixed(w) => *w,
            };
        }
        let mut worst = 0.0f64;
        for j in 0..b.cols() {
            let full: Vec<WeightedIncoming> = et.by_vn[j]
                .iter()
                .map(|&t| WeightedIncoming {
                    density: self.c2v[t],
                    count: b.get(et.list[t].0, j),
                    weight: self.weights[t],
                })
                .collect();
            for (k, &t) in et.by_vn[j].iter().enumerate() {
                let mut ext = full.clone();
                ext[k].count -= 1;
                self.v2c[t] = tmp_vn_update(self.channel(j), &ext, self.threshold);
            }
            worst = worst.max(decision_error(self.channel(j), &full));
        }
        worst
    }
}

/// Runs ternary DE at one channel parameter.
pub(crate) fn run(
    base: &BaseMatrix,
    delta: f64,
    threshold: f64,
    mode: &WeightMode,
    max_iterations: usize,
    target: f64,
    clip: f64,
) -> ProbeOutcome {
    let mut state = TernaryRun::new(base, delta, threshold, clip);
    let mut stall = StallDetector::default();
    let mut err = f64::INFINITY;
    for it in 1..=max_iterations {
        err = state.step(mode, clip);
        if err < target {
            return ProbeOutcome { converged: true, iterations: it, error: err };
        }
        if stall.stalled(err) {
            return ProbeOutcome { converged: false, iterations: it, error: err };
        }
    }
    ProbeOutcome { converged: false, iterations: max_iterations, error: err }
}

/// Per-iteration check-message weights of a DE run, laid out for the
/// decoder (one entry per `(check type, variable type)` pair).
pub fn weight_schedule(base: &BaseMatrix, delta: f64, threshold: f64, iterations: usize, clip: f64) -> TmpWeights {
    let mut state = TernaryRun::new(base, delta, threshold, clip);
    let (rows, cols) = (base.rows(), base.cols());
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations.max(1) {
        state.step(&WeightMode::PerIteration, clip);
        let mut w = vec![0.0; rows * cols];
        for (t, &(i, j)) in state.edges.list.iter().enumerate() {
            w[i * cols + j] = state.weights[t];
        }
        out.push(w);
    }
    TmpWeights { num_cn_types: rows, num_vn_types: cols, iterations: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: f64, z: f64, p: f64) -> TernaryDensity {
        TernaryDensity::new(m, z, p)
    }

    fn close(a: &TernaryDensity, b: &TernaryDensity, tol: f64) -> bool {
        (a.p_minus - b.p_minus).abs() < tol && (a.p_zero - b.p_zero).abs() < tol && (a.p_plus - b.p_plus).abs() < tol
    }

    /// Enumerates every combination of incoming values.
    fn cn_enumeration(inputs: &[TernaryDensity]) -> TernaryDensity {
        let mut out = [0.0; 3];
        let n = inputs.len();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let mut prob = 1.0;
            let mut prod = 1i32;
            for inp in inputs {
                let (m, p) = match c % 3 {
                    0 => (-1, inp.p_minus),
                    1 => (0, inp.p_zero),
                    _ => (1, inp.p_plus),
                };
                c /= 3;
                prob *= p;
                prod *= m;
            }
            out[(prod + 1) as usize] += prob;
        }
        d(out[0], out[1], out[2])
    }

    #[test]
    fn cn_examples() {
        let x = d(0.1, 0.2, 0.7);
        assert!(close(&tmp_cn_update(&[x]), &x, 1e-15));
        assert!(close(&tmp_cn_update(&[x, TernaryDensity::ERASURE]), &TernaryDensity::ERASURE, 1e-15));
        assert!(close(&tmp_cn_update(&[x, x]), &d(0.14, 0.36, 0.50), 1e-12));
    }

    #[test]
    fn cn_matches_enumeration() {
        let pool = [d(0.1, 0.2, 0.7), d(0.05, 0.0, 0.95), d(0.3, 0.4, 0.3), d(0.0, 0.5, 0.5)];
        for k in 1..=4 {
            for start in 0..pool.len() {
                let inputs: Vec<_> = (0..k).map(|i| pool[(start + i) % pool.len()]).collect();
                assert!(close(&tmp_cn_update(&inputs), &cn_enumeration(&inputs), 1e-12));
            }
        }
    }

    #[test]
    fn vn_examples() {
        let delta = 0.03;
        let out = tmp_vn_update(Some((delta, 2.0)), &[], 1.0);
        assert!(close(&out, &d(delta, 0.0, 1.0 - delta), 1e-15));
        assert!(close(&tmp_vn_update(None, &[], 1.0), &TernaryDensity::ERASURE, 1e-15));

        let x = d(0.1, 0.2, 0.7);
        let inc = [WeightedIncoming { density: x, count: 2, weight: 1.0 }];
        let out = tmp_vn_update(None, &inc, 0.5);
        // ++ -> 2, +0 -> 1, 00 and +- -> 0, -0 -> -1, -- -> -2
        assert!(close(&out, &d(0.05, 0.18, 0.77), 1e-12));
    }

    #[test]
    fn vn_matches_enumeration_with_two_types() {
        let a = d(0.1, 0.3, 0.6);
        let b = d(0.2, 0.1, 0.7);
        let inc = [
            WeightedIncoming { density: a, count: 2, weight: 0.7 },
            WeightedIncoming { density: b, count: 1, weight: 1.9 },
        ];
        let (delta, w_ch, t) = (0.1, 1.3, 1.0);
        let mut exp = [0.0; 3];
        let vals = [(-1.0, 0usize), (0.0, 1), (1.0, 2)];
        for (ch, pc) in [(-1.0, delta), (1.0, 1.0 - delta)] {
            for &(m1, i1) in &vals {
                for &(m2, i2) in &vals {
                    for &(m3, i3) in &vals {
                        let pa = [a.p_minus, a.p_zero, a.p_plus];
                        let pb = [b.p_minus, b.p_zero, b.p_plus];
                        let p = pc * pa[i1] * pa[i2] * pb[i3];
                        let s = w_ch * ch + 0.7 * (m1 + m2) + 1.9 * m3;
                        let bin = if s >= t { 2 } else if s <= -t { 0 } else { 1 };
                        exp[bin] += p;
                    }
                }
            }
        }
        let out = tmp_vn_update(Some((delta, w_ch)), &inc, t);
        assert!(close(&out, &d(exp[0], exp[1], exp[2]), 1e-12));
    }

    #[test]
    fn punctured_type_gains_information() {
        // B_ext of ensemble B; punctured columns 2 and 3.
        let base = BaseMatrix::from_rows(&[vec![2, 1, 1, 0], vec![1, 2, 0, 1], vec![0, 0, 15, 15]])
            .unwrap()
            .with_punctured(vec![false, false, true, true])
            .unwrap();
        let mut run = TernaryRun::new(&base, 0.005, 1.0, 25.0);
        let et = EdgeTypes::new(&base);
        let t = et.index(2, 2).unwrap();
        assert_eq!(run.v2c[t].p_zero, 1.0);
        run.step(&WeightMode::PerIteration, 25.0);
        assert!(run.v2c[t].p_zero < 1.0);
        for x in run.v2c.iter().chain(&run.c2v) {
            assert!(x.is_valid());
        }
    }

    #[test]
    fn symmetric_base_gives_identical_weights() {
        let base = BaseMatrix::from_rows(&[vec![5, 5]]).unwrap();
        let w = weight_schedule(&base, 0.03, 1.0, 5, 25.0);
        for it in &w.iterations {
            assert_eq!(it[0], it[1]);
        }
        let w = weight_schedule(&base, 1e-13, 1.0, 1, 25.0);
        assert_eq!(w.iterations[0][0], 25.0);
    }
}
