//! Monte Carlo frame-error-rate simulation of the cryptosystem.
//!
//! Trial `t` of a run seeded with `s` draws its plaintext and error vector
//! from a generator derived only from `(s, t)`, so different strategies and
//! decoders see identical samples and can be compared pairwise.

use std::io::{Read, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::crypto::{encrypt, keygen, keygen_with_rng, Decryptor, PrivateKey, PublicKey, Strategy, SystemParams, DEFAULT_MAX_ATTEMPTS};
use crate::decoder::{Algorithm, DecoderConfig};
use crate::error::{Error, Result};

/// Exact CSV header written by [`write_csv`].
pub const CSV_HEADER: &str = "ensemble,strategy,algorithm,n,p,e,trials,failures,undetected,fer,wall_ms,seed";

/// Outcome counts at one error weight.
#[derive(Clone, Debug, PartialEq)]
pub struct FerRecord {
    pub ensemble: String,
    pub strategy: Strategy,
    pub algorithm: Algorithm,
    pub n: usize,
    pub p: usize,
    pub e: usize,
    pub trials: usize,
    /// Block errors: decoding failures plus wrong plaintexts.
    pub failures: usize,
    /// Wrong plaintexts returned without an error.
    pub undetected: usize,
    pub fer: f64,
    pub wall_ms: u64,
    pub seed: u64,
}

impl FerRecord {
    /// Wilson score interval for the frame error rate.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.failures, self.trials, z)
    }

    fn csv_fields(&self) -> [String; 12] {
        [
            self.ensemble.clone(),
            self.strategy.to_string(),
            self.algorithm.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.e.to_string(),
            self.trials.to_string(),
            self.failures.to_string(),
            self.undetected.to_string(),
            self.fer.to_string(),
            self.wall_ms.to_string(),
            self.seed.to_string(),
        ]
    }

    fn from_csv(f: &csv::StringRecord) -> Result<Self> {
        if f.len() != 12 {
            return Err(Error::Parse(format!("expected 12 CSV fields, got {}", f.len())));
        }
        let num = |i: usize| f[i].trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad integer '{}'", &f[i])));
        let failures = num(7)? as usize;
        let trials = num(6)? as usize;
        let undetected = num(8)? as usize;
        if failures > trials || undetected > failures {
            return Err(Error::Parse(format!("{failures} failures ({undetected} undetected) in {trials} trials")));
        }
        Ok(FerRecord {
            ensemble: f[0].to_string(),
            strategy: f[1].parse()?,
            algorithm: f[2].parse()?,
            n: num(3)? as usize,
            p: num(4)? as usize,
            e: num(5)? as usize,
            trials,
            failures,
            undetected,
            fer: f[9].trim().parse().map_err(|_| Error::Parse(format!("bad FER '{}'", &f[9])))?,
            wall_ms: num(10)?,
            seed: num(11)?,
        })
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn write_csv<W: Write>(records: &[FerRecord], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER.split(','))?;
    for r in records {
        out.write_record(r.csv_fields())?;
    }
    out.flush()
}

/// Reads a CSV produced by [`write_csv`]; the header must match exactly.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<FerRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows = reader.records();
    let header = rows.next().transpose().map_err(|e| Error::Parse(e.to_string()))?;
    if header.as_ref().map(|h| h.iter().collect::<Vec<_>>().join(",")).as_deref() != Some(CSV_HEADER) {
        return Err(Error::Parse(format!("CSV header must be '{CSV_HEADER}'")));
    }
    rows.map(|row| FerRecord::from_csv(&row.map_err(|e| Error::Parse(e.to_string()))?)).collect()
}

/// Parses `start:stop:step` (inclusive) or a single value.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad range bound '{x}'")));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b] => Ok((num(a)?..=num(b)?).collect()),
        [a, b, c] => {
            let step = num(c)?;
            if step == 0 {
                return Err(Error::Parse("range step must be positive".into()));
            }
            Ok((num(a)?..=num(b)?).step_by(step).collect())
        }
        _ => Err(Error::Parse(format!("bad range '{s}', expected start:stop:step"))),
    }
}

/// Key handling across trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KeyMode {
    /// One key pair per run, derived from the seed.
    #[default]
    Fixed,
    /// A fresh key pair for every trial.
    PerTrial,
}

/// One FER experiment: an ensemble, a decoding strategy and a decoder.
#[derive(Clone, Debug)]
pub struct FerExperiment {
    pub ensemble: String,
    pub params: SystemParams,
    pub strategy: Strategy,
    pub config: DecoderConfig,
    pub trials: usize,
    pub seed: u64,
    pub key_mode: KeyMode,
    /// When false, `wall_ms` is written as 0 so repeated runs produce
    /// byte-identical output.
    pub record_timing: bool,
}

const KEY_STREAM_OFFSET: u64 = 1 << 62;

/// Generator for the plaintext and error vector of one trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn trial_key_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(KEY_STREAM_OFFSET + trial as u64);
    rng
}

/// Plaintext of one trial; drawn before the error vector.
fn random_message<R: Rng>(rng: &mut R, k: usize) -> Vec<u8> {
    (0..k).map(|_| rng.gen::<bool>() as u8).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Trial {
    Success,
    Failure,
    Undetected,
}

fn run_trial(decryptor: &Decryptor<'_>, public: &PublicKey, e: usize, seed: u64, trial: usize) -> Result<Trial> {
    let mut rng = trial_rng(seed, trial);
    let u = random_message(&mut rng, public.k());
    let c = encrypt(&u, public, e, &mut rng)?;
    let mut dec = decryptor.decoder();
    match decryptor.decrypt(&c, &mut dec) {
        Ok(v) if v == u => Ok(Trial::Success),
        Ok(_) => Ok(Trial::Undetected),
        Err(Error::DecodeFailure { .. }) => Ok(Trial::Failure),
        Err(err) => Err(err),
    }
}

impl FerExperiment {
    pub fn new(ensemble: &str, params: SystemParams, strategy: Strategy, config: DecoderConfig, trials: usize, seed: u64) -> Self {
        FerExperiment {
            ensemble: ensemble.to_string(),
            params,
            strategy,
            config,
            trials,
            seed,
            key_mode: KeyMode::Fixed,
            record_timing: true,
        }
    }

    /// Key pair used by every trial in [`KeyMode::Fixed`].
    pub fn fixed_key(&self) -> Result<(PrivateKey, PublicKey)> {
        keygen(&self.params.clone().with_seed(self.seed))
    }

    /// Runs all trials at each error weight, in order.
    pub fn run(&self, e_values: &[usize]) -> Result<Vec<FerRecord>> {
        if self.trials == 0 {
            return Err(Error::InvalidParams("at least one trial is required".into()));
        }
        self.params.validate()?;
        self.config.validate()?;
        let fixed = match self.key_mode {
            KeyMode::Fixed => Some(self.fixed_key()?),
            KeyMode::PerTrial => None,
        };
        let mut out = Vec::with_capacity(e_values.len());
        for &e in e_values {
            if e > self.params.n() {
                return Err(Error::InvalidParams(format!("error weight {e} exceeds n = {}", self.params.n())));
            }
            let start = Instant::now();
            let outcomes: Vec<Trial> = match &fixed {
                Some((sk, pk)) => {
                    let d = Decryptor::new(sk, self.strategy, &self.config, e)?;
                    (0..self.trials)
                        .into_par_iter()
                        .map(|t| run_trial(&d, pk, e, self.seed, t))
                        .collect::<Result<_>>()?
                }
                None => (0..self.trials)
                    .into_par_iter()
                    .map(|t| {
                        let (sk, pk) = keygen_with_rng(&self.params, &mut trial_key_rng(self.seed, t), DEFAULT_MAX_ATTEMPTS)?;
                        let d = Decryptor::new(&sk, self.strategy, &self.config, e)?;
                        run_trial(&d, &pk, e, self.seed, t)
                    })
                    .collect::<Result<_>>()?,
            };
            let failures = outcomes.iter().filter(|&&t| t != Trial::Success).count();
            let undetected = outcomes.iter().filter(|&&t| t == Trial::Undetected).count();
            out.push(FerRecord {
                ensemble: self.ensemble.clone(),
                strategy: self.strategy,
                algorithm: self.config.algorithm,
                n: self.params.n(),
                p: self.params.p,
                e,
                trials: self.trials,
                failures,
                undetected,
                fer: failures as f64 / self.trials as f64,
                wall_ms: if self.record_timing { start.elapsed().as_millis() as u64 } else { 0 },
                seed: self.seed,
            });
        }
        Ok(out)
    }
}

/// FER of one strategy and decoder over several error weights, with one
/// fixed key pair.
pub fn run_fer(
    ensemble: &str,
    params: &SystemParams,
    strategy: Strategy,
    config: &DecoderConfig,
    e_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<FerRecord>> {
    FerExperiment::new(ensemble, params.clone(), strategy, config.clone(), trials, seed).run(e_values)
}

/// An ensemble together with the decoding setups to simulate on it.
#[derive(Clone, Debug)]
pub struct ComparisonEntry {
    pub ensemble: String,
    pub params: SystemParams,
    pub setups: Vec<(Strategy, DecoderConfig)>,
}

/// One record per (ensemble, strategy, algorithm, e), all sharing the seed
/// and hence the per-trial samples.
pub fn run_comparison(entries: &[ComparisonEntry], e_grid: &[usize], trials: usize, seed: u64) -> Result<Vec<FerRecord>> {
    if let Some(first) = entries.first() {
        if entries.iter().any(|x| x.params.n() != first.params.n()) {
            return Err(Error::InvalidParams("compared ensembles must share the code length".into()));
        }
    }
    let mut out = Vec::new();
    for entry in entries {
        for (strategy, config) in &entry.setups {
            let exp = FerExperiment::new(&entry.ensemble, entry.params.clone(), *strategy, config.clone(), trials, seed);
            out.extend(exp.run(e_grid)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SystemParams {
        SystemParams::new(31, vec![3, 3], vec![2, 1], 0)
    }

    #[test]
    fn wilson_reference_values() {
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036994).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.403832).abs() < 1e-5 && (hi - 0.596168).abs() < 1e-5);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("10:20:5").unwrap(), vec![10, 15, 20]);
        assert_eq!(parse_range("7").unwrap(), vec![7]);
        assert_eq!(parse_range("3:5").unwrap(), vec![3, 4, 5]);
        assert!(parse_range("1:5:0").is_err());
        assert!(parse_range("a:b").is_err());
        assert!(parse_range("5:1:1").unwrap().is_empty());
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let recs = run_fer("toy", &toy(), Strategy::Mdpc, &DecoderConfig::spa(), &[0, 1], 8, 3).unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_csv(&buf[..]).unwrap(), recs);
        assert!(read_csv("a,b\n".as_bytes()).is_err());
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn zero_errors_never_fail() {
        for s in [Strategy::Basic, Strategy::Mdpc, Strategy::Proto] {
            let r = run_fer("toy", &toy(), s, &DecoderConfig::spa(), &[0], 10, 1).unwrap();
            assert_eq!((r[0].failures, r[0].fer), (0, 0.0));
        }
    }

    #[test]
    fn trial_samples_are_paired() {
        let a: Vec<u32> = (0..4).map(|t| trial_rng(9, t).gen()).collect();
        let b: Vec<u32> = (0..4).map(|t| trial_rng(9, t).gen()).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_fer("toy", &toy(), Strategy::Mdpc, &DecoderConfig::spa(), &[1], 0, 1).is_err());
    }
}
