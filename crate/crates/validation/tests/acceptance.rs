//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one `PASS` or `FAIL` line, uncaptured; the
//! process exits non-zero when any criterion fails. Positional arguments
//! select criteria by substring, e.g. `-- criterion_7`.
//!
//! Thresholds are computed once per process and shared between criteria.
//! The Monte Carlo comparison is also written as CSV to
//! `$CARGO_TARGET_TMPDIR/comparison.csv`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::HashMap;
use std::fs;
use std::sync::Mutex;

use common::*;
use hwa_ldpc::crypto::{is_codeword, keygen, strategy_base, Strategy, SystemParams};
use hwa_ldpc::de::{find_threshold, tmp_cn_update, DeConfig, TernaryDensity};
use hwa_ldpc::decoder::{Algorithm, DecoderConfig};
use hwa_ldpc::sim::{write_csv, FerExperiment, FerRecord};
use hwa_ldpc::{BlockCirculantMatrix, BlockVector, Error, PolyGF2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;
const TRIALS: usize = 200;
const LEDA_N: usize = 29878;

/// One sub-check of a criterion.
struct Check {
    ok: bool,
    detail: String,
}

fn within(label: &str, value: f64, reference: f64, tol: f64) -> Check {
    let ok = (value - reference).abs() <= tol;
    Check { ok, detail: format!("{label} {value:.2} (ref {reference} ±{tol}{})", if ok { "" } else { ", out of range" }) }
}

/// Outcome line of one criterion.
struct Report {
    id: u32,
    title: String,
    checks: Vec<Check>,
}

fn report(id: u32, title: &str, checks: Vec<Check>) -> Report {
    Report { id, title: title.to_string(), checks }
}

impl Report {
    fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    fn line(&self) -> String {
        let details: Vec<&str> = self.checks.iter().map(|c| c.detail.as_str()).collect();
        format!("{} [{}] {}: {}", if self.ok() { "PASS" } else { "FAIL" }, self.id, self.title, details.join("; "))
    }
}

static THRESHOLDS: Mutex<Option<HashMap<String, f64>>> = Mutex::new(None);

/// `n * delta*` of the base matrix a strategy decodes on.
fn scaled_threshold(params: &SystemParams, strategy: Strategy, alg: Algorithm) -> f64 {
    let key = format!("{}/{strategy}/{alg:?}", params.key_header());
    let mut guard = THRESHOLDS.lock().unwrap_or_else(|e| e.into_inner());
    let cache = guard.get_or_insert_with(HashMap::new);
    if let Some(&v) = cache.get(&key) {
        return v;
    }
    let base = strategy_base(params, strategy).unwrap();
    let n = params.n();
    let r = find_threshold(&base, alg, &DeConfig::default(), Some(n)).unwrap();
    let v = r.scaled(n);
    cache.insert(key, v);
    v
}

/// Decoding setup that characterizes each ensemble: A (whose amplifier is
/// a permutation) is decoded directly, B-D through the extended graph.
fn table_strategy(name: &str) -> Strategy {
    if name == "A" {
        Strategy::Mdpc
    } else {
        Strategy::Proto
    }
}

fn ensemble_thresholds(id: u32, title: &str, alg: Algorithm, reference: [f64; 4], tol: f64) -> Report {
    let checks: Vec<Check> = ["A", "B", "C", "D"]
        .iter()
        .zip(reference)
        .map(|(name, r)| within(name, scaled_threshold(&ensemble_params(name), table_strategy(name), alg), r, tol))
        .collect();
    report(id, title, checks)
}

fn criterion_1_tmp_thresholds() -> Report {
    ensemble_thresholds(1, "TMP density-evolution thresholds n*delta at n=9602", Algorithm::Tmp, [113.0, 103.0, 101.0, 80.0], 5.0)
}

fn criterion_2_spa_thresholds() -> Report {
    ensemble_thresholds(2, "SPA density-evolution thresholds n*delta at n=9602", Algorithm::Spa, [113.0, 121.0, 126.0, 127.0], 4.0)
}

fn criterion_3_basic_decoding_thresholds() -> Report {
    let rows = [("A", 113.0, 113.0), ("B", 99.0, 89.0), ("C", 87.0, 78.0), ("D", 72.0, 62.0)];
    let mut checks = Vec::new();
    for (name, spa, tmp) in rows {
        let params = ensemble_params(name);
        let dq = params.dq() as f64;
        let label = format!("dQ={}", params.dq());
        checks.push(within(&format!("{label} SPA"), scaled_threshold(&params, Strategy::Basic, Algorithm::Spa) / dq, spa, 4.0));
        checks.push(within(&format!("{label} TMP"), scaled_threshold(&params, Strategy::Basic, Algorithm::Tmp) / dq, tmp, 4.0));
    }
    report(3, "basic-decoding thresholds n*delta/dQ at n=9602", checks)
}

fn criterion_4_leda_thresholds() -> Report {
    let params = ensemble_params("LEDA");
    assert_eq!(params.n(), LEDA_N);
    let checks = vec![
        within("proto TMP", scaled_threshold(&params, Strategy::Proto, Algorithm::Tmp), 203.0, 7.0),
        within("mdpc TMP", scaled_threshold(&params, Strategy::Mdpc, Algorithm::Tmp), 227.0, 7.0),
    ];
    report(4, "TMP thresholds for B_H=(11 11), B_Q=(4 3) at n=29878", checks)
}

fn decoder(alg: Algorithm) -> DecoderConfig {
    match alg {
        Algorithm::Spa => DecoderConfig::spa(),
        _ => DecoderConfig::tmp(),
    }
}

fn simulate(name: &str, strategy: Strategy, alg: Algorithm, e: usize) -> FerRecord {
    let exp = FerExperiment::new(name, ensemble_params(name), strategy, decoder(alg), TRIALS, SEED);
    let r = exp.run(&[e]).unwrap().remove(0);
    eprintln!("  {name} {strategy} {alg:?} e={e}: {}/{} failures ({} undetected)", r.failures, r.trials, r.undetected);
    r
}

/// First FER = 1/2 crossing of a curve sampled at increasing `e`,
/// linearly interpolated.
fn midpoint(records: &[FerRecord]) -> Option<f64> {
    records.windows(2).find(|w| w[0].fer < 0.5 && w[1].fer >= 0.5).map(|w| {
        let (e0, e1) = (w[0].e as f64, w[1].e as f64);
        e0 + (0.5 - w[0].fer) / (w[1].fer - w[0].fer) * (e1 - e0)
    })
}

fn criterion_5_monte_carlo_waterfalls() -> Report {
    let mut checks = Vec::new();
    let mut csv = Vec::new();

    // (a) Proto decoding of B succeeds where basic decoding of its LDPC code
    // fails, on the same trials.
    let basic_pred = scaled_threshold(&ensemble_params("B"), Strategy::Basic, Algorithm::Spa) / ensemble_params("B").dq() as f64;
    let proto_pred = scaled_threshold(&ensemble_params("B"), Strategy::Proto, Algorithm::Spa);
    let mut gap = None;
    let mut e = basic_pred.ceil() as usize;
    while gap.is_none() && (e as f64) < proto_pred {
        let basic = simulate("B", Strategy::Basic, Algorithm::Spa, e);
        if basic.fer > 0.9 {
            let proto = simulate("B", Strategy::Proto, Algorithm::Spa, e);
            if proto.fer < 0.5 {
                gap = Some((e, proto.fer, basic.fer));
            }
            csv.push(proto);
        }
        csv.push(basic);
        e += 5;
    }
    checks.push(match gap {
        Some((e, p, b)) => Check { ok: true, detail: format!("(a) e={e}: proto FER {p:.3} < 0.5, basic FER {b:.3} > 0.9") },
        None => Check { ok: false, detail: format!("(a) no e in [{basic_pred:.0}, {proto_pred:.0}) with proto FER < 0.5 and basic FER > 0.9") },
    });

    // (b) Waterfall midpoints within 10% of the density-evolution prediction.
    let curves = [
        ("A", Strategy::Mdpc, Algorithm::Spa),
        ("B", Strategy::Proto, Algorithm::Spa),
        ("A", Strategy::Mdpc, Algorithm::Tmp),
        ("B", Strategy::Proto, Algorithm::Tmp),
        ("B", Strategy::Basic, Algorithm::Spa),
    ];
    for (name, strategy, alg) in curves {
        let params = ensemble_params(name);
        let scale = if strategy == Strategy::Basic { params.dq() as f64 } else { 1.0 };
        let pred = scaled_threshold(&params, strategy, alg) / scale;
        let (lo, hi) = ((0.9 * pred).ceil() as usize, (1.1 * pred).floor() as usize);
        let records: Vec<FerRecord> = [lo, pred.round() as usize, hi].iter().map(|&e| simulate(name, strategy, alg, e)).collect();
        let ok = records[0].fer < 0.5 && records[2].fer >= 0.5;
        let mid = midpoint(&records).map_or("none".to_string(), |m| format!("{m:.1}"));
        checks.push(Check {
            ok,
            detail: format!(
                "(b) {name} {strategy} {alg:?}: midpoint {mid} vs predicted {pred:.1} (FER {:.3} at e={lo}, {:.3} at e={hi})",
                records[0].fer, records[2].fer
            ),
        });
        csv.extend(records);
    }

    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("comparison.csv");
    write_csv(&csv, fs::File::create(&path).unwrap()).unwrap();
    eprintln!("  comparison written to {}", path.display());
    report(5, &format!("Monte Carlo at n=9602, 100 iterations, {TRIALS} paired trials per point"), checks)
}

fn criterion_6_roundtrip() -> Report {
    let r = FerExperiment::new("B", ensemble_params("B"), Strategy::Proto, DecoderConfig::spa(), 300, SEED).run(&[60]).unwrap().remove(0);
    let success = 1.0 - r.fer;
    let checks = vec![
        Check { ok: success > 0.99, detail: format!("success rate {:.4} over {} trials (> 0.99)", success, r.trials) },
        Check { ok: r.undetected == 0, detail: format!("{} undetected errors (= 0)", r.undetected) },
    ];
    report(6, "ensemble B, proto decoding, e=60", checks)
}

fn random_poly(rng: &mut impl Rng, p: usize) -> PolyGF2 {
    let bits: Vec<u8> = (0..p).map(|_| u8::from(rng.gen_bool(0.3))).collect();
    PolyGF2::from_bits(p, &bits).unwrap()
}

/// Ring products, transposes and block products for every odd p <= 64.
fn dense_algebra_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cases = 0;
    let mut bad = 0;
    for p in (1..=63).step_by(2) {
        for _ in 0..8 {
            let (a, c) = (random_poly(&mut rng, p), random_poly(&mut rng, p));
            let (da, dc) = (circulant(&a), circulant(&c));
            bad += usize::from(circulant(&a.mul(&c).unwrap()) != mul(&da, &dc));
            bad += usize::from(circulant(&a.transpose()) != transpose(&da));
            bad += usize::from(circulant(&a.add(&c).unwrap()) != (0..p).map(|r| (0..p).map(|s| da[r][s] ^ dc[r][s]).collect::<Vec<u8>>()).collect::<Dense>());
            cases += 3;
        }
        let m1 = BlockCirculantMatrix::new(2, 2, (0..4).map(|_| random_poly(&mut rng, p)).collect()).unwrap();
        let m2 = BlockCirculantMatrix::new(2, 3, (0..6).map(|_| random_poly(&mut rng, p)).collect()).unwrap();
        bad += usize::from(expand(&m1.mat_mul(&m2).unwrap()) != mul(&expand(&m1), &expand(&m2)));
        bad += usize::from(expand(&m2.block_transpose()) != transpose(&expand(&m2)));
        let bits: Vec<u8> = (0..2 * p).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let v = BlockVector::from_bits(&bits, p).unwrap();
        bad += usize::from(v.vec_mat_mul(&m2).unwrap().to_bits() != vec_mul(&bits, &expand(&m2)));
        cases += 3;
    }
    Check { ok: bad == 0, detail: format!("dense algebra p<=64: {} of {cases} cases agree", cases - bad) }
}

/// Every polynomial for odd p <= 13 against a search over all candidates.
fn inverse_oracle() -> Check {
    let mut cases = 0;
    let mut bad = 0;
    for p in (1..=13usize).step_by(2) {
        for a_mask in 0u32..1 << p {
            let a = PolyGF2::from_bits(p, &(0..p).map(|i| ((a_mask >> i) & 1) as u8).collect::<Vec<_>>()).unwrap();
            // Rows of circ(a) as masks; walk every c in Gray-code order while
            // tracking the first row of circ(c) * circ(a).
            let rows: Vec<u32> = circulant(&a).iter().map(|r| r.iter().enumerate().fold(0, |m, (j, &x)| m | (u32::from(x) << j))).collect();
            let (mut c, mut prod, mut found) = (0u32, 0u32, None);
            for step in 1u32..1 << p {
                let bit = step.trailing_zeros();
                c ^= 1 << bit;
                prod ^= rows[bit as usize];
                if prod == 1 {
                    found = Some(c);
                    break;
                }
            }
            let agree = match (a.inverse(), found) {
                (Ok(inv), Some(c)) => inv.to_bits() == (0..p).map(|i| ((c >> i) & 1) as u8).collect::<Vec<_>>(),
                (Err(Error::NotInvertible), None) => true,
                _ => false,
            };
            bad += usize::from(!agree);
            cases += 1;
        }
    }
    Check { ok: bad == 0, detail: format!("inverse p<=13: {} of {cases} polynomials agree", cases - bad) }
}

/// Ternary check-node rule against enumeration of all sign patterns.
fn check_node_oracle() -> Check {
    let grid = [0.0, 0.05, 0.2, 0.5];
    let densities: Vec<TernaryDensity> = grid
        .iter()
        .flat_map(|&m| grid.iter().map(move |&z| (m, z)))
        .filter(|(m, z)| m + z <= 1.0)
        .map(|(m, z)| TernaryDensity { p_minus: m, p_zero: z, p_plus: 1.0 - m - z })
        .collect();
    let mut cases = 0;
    let mut bad = 0;
    for k in 1..=4usize {
        let combos = densities.len().pow(k as u32);
        for idx in 0..combos {
            let inputs: Vec<TernaryDensity> = (0..k).map(|j| densities[idx / densities.len().pow(j as u32) % densities.len()]).collect();
            let mut expected = [0.0f64; 3];
            for pattern in 0..3usize.pow(k as u32) {
                let mut prob = 1.0;
                let mut out = 1i32;
                for (j, d) in inputs.iter().enumerate() {
                    let (value, pr) = match pattern / 3usize.pow(j as u32) % 3 {
                        0 => (-1, d.p_minus),
                        1 => (0, d.p_zero),
                        _ => (1, d.p_plus),
                    };
                    prob *= pr;
                    out *= value;
                }
                expected[(out + 1) as usize] += prob;
            }
            let got = tmp_cn_update(&inputs);
            let ok = (got.p_minus - expected[0]).abs() < 1e-12 && (got.p_zero - expected[1]).abs() < 1e-12 && (got.p_plus - expected[2]).abs() < 1e-12;
            bad += usize::from(!ok);
            cases += 1;
        }
    }
    Check { ok: bad == 0, detail: format!("TMP check node <=4 inputs: {} of {cases} input tuples agree", cases - bad) }
}

/// Public codewords mapped by Q^T satisfy the private parity checks.
fn syndrome_oracle() -> Check {
    let mut cases = 0;
    let mut bad = 0;
    for (params, keys) in [(SystemParams::new(127, vec![5, 5], vec![2, 1], 0), 3u64), (SystemParams::new(257, vec![9, 9], vec![3, 2], 0), 2)] {
        for seed in 0..keys {
            let (sk, pk) = keygen(&params.clone().with_seed(seed)).unwrap();
            let qt = sk.q().block_transpose();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let u: Vec<u8> = (0..pk.k()).map(|_| u8::from(rng.gen_bool(0.5))).collect();
                let x_pub = pk.encode(&u).unwrap();
                let x = BlockVector::from_bits(&x_pub, params.p).unwrap().vec_mat_mul(&qt).unwrap().to_bits();
                bad += usize::from(!(is_codeword(&x_pub, sk.h_prime()).unwrap() && is_codeword(&x, sk.h()).unwrap()));
                cases += 1;
            }
        }
    }
    Check { ok: bad == 0, detail: format!("syndrome equivalence: {} of {cases} codewords map into the private code", cases - bad) }
}

fn criterion_7_oracle_suites() -> Report {
    report(7, "oracle suites", vec![dense_algebra_oracle(), inverse_oracle(), check_node_oracle(), syndrome_oracle()])
}

type Criterion = (&'static str, u32, fn() -> Report);

const CRITERIA: [Criterion; 7] = [
    ("criterion_1_tmp_thresholds", 1, criterion_1_tmp_thresholds),
    ("criterion_2_spa_thresholds", 2, criterion_2_spa_thresholds),
    ("criterion_3_basic_decoding_thresholds", 3, criterion_3_basic_decoding_thresholds),
    ("criterion_4_leda_thresholds", 4, criterion_4_leda_thresholds),
    ("criterion_5_monte_carlo_waterfalls", 5, criterion_5_monte_carlo_waterfalls),
    ("criterion_6_roundtrip", 6, criterion_6_roundtrip),
    ("criterion_7_oracle_suites", 7, criterion_7_oracle_suites),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, id, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let line = match std::panic::catch_unwind(run) {
            Ok(r) => {
                if !r.ok() {
                    failed.push(id);
                }
                r.line()
            }
            Err(e) => {
                failed.push(id);
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
                format!("FAIL [{id}] {name}: panicked: {msg}")
            }
        };
        println!("{line}");
    }
    if !failed.is_empty() {
        println!("acceptance: criteria {failed:?} not met");
        std::process::exit(1);
    }
}
