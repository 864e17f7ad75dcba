use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hwa_ldpc::crypto::{self, Ciphertext, PrivateKey, PublicKey, Strategy, SystemParams};
use hwa_ldpc::de::{self, DeConfig, QuantGrid, WeightMode};
use hwa_ldpc::decoder::{Algorithm, DecoderConfig};
use hwa_ldpc::graph::graph_from_qc;
use hwa_ldpc::qc::parse_index_list;
use hwa_ldpc::sim::{self, FerExperiment, KeyMode};
use hwa_ldpc::BaseMatrix;

#[derive(Parser)]
#[command(name = "hwa-ldpc", version, about = "QC-LDPC codes with Hamming weight amplifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair into <out>/private.key and <out>/public.key.
    Keygen {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt a bit-string message (length k) under a public key.
    Encrypt {
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        errors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decrypt a ciphertext and print the plaintext bits.
    Decrypt {
        #[arg(long = "priv")]
        private: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long, default_value = "proto")]
        strategy: Strategy,
        #[command(flatten)]
        decoder: DecoderArgs,
    },
    /// Decoding threshold of a base matrix by density evolution.
    Threshold {
        /// Base-matrix file (integer grid, optional `punctured:` line).
        #[arg(long, conflicts_with = "params")]
        base: Option<PathBuf>,
        /// Ensemble parameter file; the base follows from --strategy.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value = "proto")]
        strategy: Strategy,
        #[arg(long, default_value = "spa")]
        alg: Algorithm,
        /// Block length used to report n * delta*.
        #[arg(long)]
        n: Option<usize>,
        /// Punctured columns, comma separated (overrides the file).
        #[arg(long)]
        punctured: Option<String>,
        /// Fixed TMP quantization threshold instead of the grid search.
        #[arg(long)]
        tmp_t: Option<f64>,
        /// Constant TMP check-message weight instead of per-iteration weights.
        #[arg(long)]
        fixed_weight: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1e-8)]
        target: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        /// Half the number of quantization bins (SPA).
        #[arg(long, default_value_t = 1024)]
        half_bins: usize,
        #[arg(long, default_value_t = 25.0)]
        llr_max: f64,
    },
    /// Monte Carlo frame error rate, written as CSV.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        /// Ensemble label for the CSV; defaults to the parameter file stem.
        #[arg(long)]
        ensemble: Option<String>,
        #[arg(long)]
        strategy: Strategy,
        /// Error weights as start:stop:step.
        #[arg(long)]
        e: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw a fresh key pair for every trial.
        #[arg(long)]
        per_trial_keys: bool,
        /// Write wall_ms as 0 for byte-identical reruns.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        decoder: DecoderArgs,
    },
    /// Write the Tanner graph a strategy decodes on as `vn cn` pairs.
    Graph {
        #[arg(long = "priv")]
        private: PathBuf,
        #[arg(long, default_value = "proto")]
        strategy: Strategy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DecoderArgs {
    #[arg(long, default_value = "spa")]
    alg: Algorithm,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Check-node attenuation (SPA).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// TMP quantization threshold; derived by density evolution when omitted.
    #[arg(long)]
    tmp_t: Option<f64>,
}

impl DecoderArgs {
    fn config(&self) -> DecoderConfig {
        let mut c = DecoderConfig { algorithm: self.alg, max_iterations: self.iterations, attenuation: self.alpha, ..DecoderConfig::default() };
        if let Some(t) = self.tmp_t {
            c.tmp.threshold = t;
        }
        c
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Keygen { params, seed, out } => {
            let params: SystemParams = read(&params)?.parse()?;
            let (sk, pk) = crypto::keygen(&params.with_seed(seed))?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("private.key"), sk.to_text())?;
            fs::write(out.join("public.key"), pk.to_text())?;
            eprintln!("wrote {} and {}", out.join("private.key").display(), out.join("public.key").display());
        }
        Command::Encrypt { public, msg, errors, seed, out } => {
            let pk: PublicKey = read(&public)?.parse()?;
            let u = crypto::parse_bits(&read(&msg)?)?;
            if u.len() != pk.k() {
                bail!("message has {} bits, expected k = {}", u.len(), pk.k());
            }
            let c = crypto::encrypt(&u, &pk, errors, &mut ChaCha8Rng::seed_from_u64(seed))?;
            output(out.as_deref())?.write_all(c.to_text().as_bytes())?;
        }
        Command::Decrypt { private, public, ct, strategy, decoder } => {
            let sk: PrivateKey = read(&private)?.parse()?;
            let pk: PublicKey = read(&public)?.parse()?;
            let c: Ciphertext = read(&ct)?.parse()?;
            let u = crypto::decrypt(&c, &sk, &pk, strategy, &decoder.config())?;
            println!("{}", crypto::bits_to_string(&u));
        }
        Command::Threshold {
            base,
            params,
            strategy,
            alg,
            n,
            punctured,
            tmp_t,
            fixed_weight,
            max_iterations,
            target,
            tolerance,
            half_bins,
            llr_max,
        } => {
            let (mut base, n_default): (BaseMatrix, Option<usize>) = match (base, params) {
                (Some(b), _) => (read(&b)?.parse()?, None),
                (None, Some(p)) => {
                    let params: SystemParams = read(&p)?.parse()?;
                    (crypto::strategy_base(&params, strategy)?, Some(params.n()))
                }
                (None, None) => bail!("either --base or --params is required"),
            };
            if let Some(cols) = punctured {
                let cols = parse_index_list(&cols)?;
                let flags = (0..base.cols()).map(|j| cols.contains(&j)).collect();
                base = base.with_punctured(flags)?;
            }
            let config = DeConfig {
                max_iterations,
                target,
                tolerance,
                tmp_threshold: tmp_t,
                weight_mode: fixed_weight.map_or(WeightMode::PerIteration, WeightMode::Fixed),
                grid: QuantGrid::new(half_bins, llr_max)?,
                ..DeConfig::default()
            };
            let r = de::find_threshold(&base, alg, &config, n.or(n_default))?;
            println!("{r}");
            println!("delta_star={:.8}", r.delta_star);
            if let Some(nd) = r.n_delta {
                println!("n_delta={nd}");
            }
            if let Some(t) = r.tmp_threshold {
                println!("tmp_threshold={t}");
            }
            println!("probe,delta,converged,iterations,error");
            for (i, p) in r.probes.iter().enumerate() {
                println!("{},{:.8},{},{},{:.3e}", i, p.delta, p.outcome.converged, p.outcome.iterations, p.outcome.error);
            }
        }
        Command::Simulate { params, ensemble, strategy, e, trials, seed, out, per_trial_keys, no_timing, decoder } => {
            let label = ensemble.unwrap_or_else(|| params.file_stem().map_or("ensemble".into(), |s| s.to_string_lossy().into_owned()));
            let params: SystemParams = read(&params)?.parse()?;
            let e_values = sim::parse_range(&e)?;
            let mut exp = FerExperiment::new(&label, params, strategy, decoder.config(), trials, seed);
            exp.key_mode = if per_trial_keys { KeyMode::PerTrial } else { KeyMode::Fixed };
            exp.record_timing = !no_timing;
            let records = exp.run(&e_values)?;
            let mut w = output(out.as_deref())?;
            sim::write_csv(&records, &mut w)?;
            w.flush()?;
            for r in &records {
                let (lo, hi) = r.wilson(1.96);
                eprintln!("e={} fer={:.4} [{lo:.4}, {hi:.4}] undetected={}", r.e, r.fer, r.undetected);
            }
        }
        Command::Graph { private, strategy, out } => {
            let sk: PrivateKey = read(&private)?.parse()?;
            let (m, punct) = crypto::decoding_matrix(&sk, strategy)?;
            let g = graph_from_qc(&m, &punct)?;
            let mut w = output(out.as_deref())?;
            g.write_adjacency(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
