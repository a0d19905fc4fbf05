//! Deterministic Monte Carlo symbol-error-rate sweeps.
//!
//! Each trial draws its randomness from a counter-derived stream of a
//! seeded generator, chunks of trials run in parallel, and the results
//! fold in trial order with a deterministic early stop, so a sweep's
//! output is bit-identical for any worker count.
//!
//! Configs are flat `key = value` text:
//!
//! ```text
//! scheme = teciod
//! a = 2
//! constellation = qam8
//! rotation_deg = 31.7
//! p_db_points = 10, 12.5, 15
//! trials_per_point = 100000
//! max_symbol_errors = 500
//! seed = 1
//! out_path = sweep.csv
//! ```

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{effective_energy, sample_channel, NetworkConfig};
use crate::constellation::by_name;
use crate::decoder::{decode_joint_ml, decode_ssd, MlMetricContext};
use crate::design::Scheme;
use crate::error::{Error, Result};
use crate::system::{run_protocol, CodeSystem};
use crate::verify::verify_ssd;

/// Trials evaluated in parallel between early-stop checks.
const CHUNK_TRIALS: u64 = 4096;

/// Joint-decoder cross-checks run only when the product constellation is
/// at most this large.
const ORACLE_MESSAGE_LIMIT: u64 = 300_000;

/// Cross-check trials before a sweep.
const ORACLE_TRIALS: u64 = 50;

/// One sweep described as flat key = value text.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub a: u32,
    pub constellation: String,
    pub rotation_deg: f64,
    pub p_db_points: Vec<f64>,
    pub trials_per_point: u64,
    /// Stop a point once this many symbol errors accumulate; zero never
    /// stops early.
    pub max_symbol_errors: u64,
    pub seed: u64,
    pub power_split: f64,
    pub train_power_fraction: Option<f64>,
    pub noiseless: bool,
    pub out_path: String,
}

impl ExperimentConfig {
    /// Parse the flat text format. `scheme`, `a`, `constellation`, and
    /// `out_path` are required; everything else has defaults.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut scheme = None;
        let mut a = None;
        let mut constellation = None;
        let mut out_path = None;
        let mut rotation_deg = 0.0;
        let mut p_db_points: Vec<f64> = (0..11).map(|i| 5.0 + 2.5 * i as f64).collect();
        let mut trials_per_point = 100_000u64;
        let mut max_symbol_errors = 500u64;
        let mut seed = 0u64;
        let mut power_split = 0.5;
        let mut train_power_fraction = None;
        let mut noiseless = false;
        let mut seen: Vec<String> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!("duplicate key {key}")));
            }
            seen.push(key.to_string());
            let bad = |what: &str| Error::Config(format!("key {key}: bad {what}: {value}"));
            match key {
                "scheme" => scheme = Some(Scheme::parse(value)?),
                "a" => a = Some(value.parse::<u32>().map_err(|_| bad("integer"))?),
                "constellation" => {
                    by_name(value)?;
                    constellation = Some(value.to_string());
                }
                "rotation_deg" => {
                    rotation_deg = value.parse::<f64>().map_err(|_| bad("number"))?
                }
                "p_db_points" => {
                    p_db_points = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>().map_err(|_| bad("number list")))
                        .collect::<Result<Vec<f64>>>()?;
                }
                "trials_per_point" => {
                    trials_per_point = value.parse::<u64>().map_err(|_| bad("integer"))?
                }
                "max_symbol_errors" => {
                    max_symbol_errors = value.parse::<u64>().map_err(|_| bad("integer"))?
                }
                "seed" => seed = value.parse::<u64>().map_err(|_| bad("integer"))?,
                "power_split" => {
                    power_split = value.parse::<f64>().map_err(|_| bad("number"))?
                }
                "train_power_fraction" => {
                    train_power_fraction =
                        Some(value.parse::<f64>().map_err(|_| bad("number"))?)
                }
                "noiseless" => {
                    noiseless = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad("boolean")),
                    }
                }
                "out_path" => out_path = Some(value.to_string()),
                _ => return Err(Error::Config(format!("unknown key {key}"))),
            }
        }

        let mut missing = Vec::new();
        if scheme.is_none() {
            missing.push("scheme");
        }
        if a.is_none() {
            missing.push("a");
        }
        if constellation.is_none() {
            missing.push("constellation");
        }
        if out_path.is_none() {
            missing.push("out_path");
        }
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
        }
        if p_db_points.is_empty() {
            return Err(Error::Config("p_db_points is empty".into()));
        }
        if trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be positive".into()));
        }
        if trials_per_point >= 1 << 40 {
            return Err(Error::Config("trials_per_point must stay below 2^40".into()));
        }
        Ok(ExperimentConfig {
            scheme: scheme.unwrap(),
            a: a.unwrap(),
            constellation: constellation.unwrap(),
            rotation_deg,
            p_db_points,
            trials_per_point,
            max_symbol_errors,
            seed,
            power_split,
            train_power_fraction,
            noiseless,
            out_path: out_path.unwrap(),
        })
    }
}

/// Result for one operating point.
#[derive(Clone, Debug)]
pub struct SerPoint {
    pub p_db: f64,
    pub p1: f64,
    pub p2: f64,
    pub trials: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    /// 95% score interval on the per-symbol error probability.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub wallclock_s: f64,
}

/// Full sweep result.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub scheme: Scheme,
    pub k: usize,
    pub a: u32,
    pub constellation: String,
    pub rotation_deg: f64,
    pub seed: u64,
    pub points: Vec<SerPoint>,
}

/// 95% Wilson score interval for `errors` successes in `n` draws.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let nf = n as f64;
    let p = errors as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn trial_rng(seed: u64, point_idx: usize, trial_idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point_idx as u64 + 1) << 40) | trial_idx);
    rng
}

fn build_system(cfg: &ExperimentConfig) -> Result<CodeSystem> {
    let mut base = by_name(&cfg.constellation)?;
    if cfg.rotation_deg != 0.0 {
        base = base.rotate(cfg.rotation_deg.to_radians());
    }
    CodeSystem::new(cfg.scheme, cfg.a, &base, cfg.train_power_fraction)
}

/// Draw one message plus channel, run the protocol, and assemble the
/// decoding context. The draw order (message, fades, noise) is fixed so a
/// stream replays exactly.
fn simulate_reception<R: Rng>(
    sys: &CodeSystem,
    net: &NetworkConfig,
    noiseless: bool,
    rng: &mut R,
) -> Result<(Vec<usize>, MlMetricContext)> {
    let m = sys.constellation.len();
    let msg: Vec<usize> =
        (0..sys.counts.info_vars).map(|_| rng.gen_range(0..m)).collect();
    let symbols = sys.symbols(&msg)?;
    let ch = sample_channel(sys.counts.relays, rng);
    let y = run_protocol(sys, net, &ch, &symbols, noiseless, rng);
    let ctx = MlMetricContext::from_channel(y, &ch, net, &sys.lin)?;
    Ok((msg, ctx))
}

fn network_for(sys: &CodeSystem, cfg: &ExperimentConfig, p_db: f64) -> Result<NetworkConfig> {
    let e_eff =
        effective_energy(&sys.counts, sys.alpha.value.norm_sqr(), sys.alpha.symbol_energy);
    NetworkConfig::from_split(sys.counts, p_db, cfg.power_split, e_eff)
}

/// Run the sweep with an arbitrary decoder, counting wrong symbols per
/// trial. Exposed mainly so the accounting can be exercised with stub
/// decoders; use [`run_ser_sweep`] for real measurements.
pub fn run_sweep_with<F>(cfg: &ExperimentConfig, decode: F) -> Result<SweepResult>
where
    F: Fn(&MlMetricContext, &CodeSystem, &mut ChaCha8Rng) -> Result<Vec<usize>> + Sync,
{
    let sys = build_system(cfg)?;
    let mut points = Vec::with_capacity(cfg.p_db_points.len());
    for (pi, &p_db) in cfg.p_db_points.iter().enumerate() {
        let net = network_for(&sys, cfg, p_db)?;
        let start_time = Instant::now();
        let mut trials = 0u64;
        let mut symbol_errors = 0u64;
        'point: while trials < cfg.trials_per_point {
            let chunk = CHUNK_TRIALS.min(cfg.trials_per_point - trials);
            let start = trials;
            let counts: Result<Vec<u64>> = (0..chunk)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(cfg.seed, pi, start + i);
                    let (msg, ctx) = simulate_reception(&sys, &net, cfg.noiseless, &mut rng)?;
                    let dec = decode(&ctx, &sys, &mut rng)?;
                    Ok(msg.iter().zip(&dec).filter(|(m, d)| m != d).count() as u64)
                })
                .collect();
            // Fold in trial order; the early stop lands on the same trial
            // for any worker count.
            for e in counts? {
                trials += 1;
                symbol_errors += e;
                if cfg.max_symbol_errors > 0 && symbol_errors >= cfg.max_symbol_errors {
                    break 'point;
                }
            }
        }
        let n = trials * sys.counts.info_vars as u64;
        let (ci_lo, ci_hi) = wilson_interval(symbol_errors, n);
        points.push(SerPoint {
            p_db,
            p1: net.p1,
            p2: net.p2,
            trials,
            symbol_errors,
            ser: symbol_errors as f64 / n as f64,
            ci_lo,
            ci_hi,
            wallclock_s: start_time.elapsed().as_secs_f64(),
        });
    }
    Ok(SweepResult {
        scheme: cfg.scheme,
        k: sys.counts.relays,
        a: cfg.a,
        constellation: cfg.constellation.clone(),
        rotation_deg: cfg.rotation_deg,
        seed: cfg.seed,
        points,
    })
}

/// Cross-check the symbol-by-symbol decoder against the joint decoder on
/// a handful of receptions drawn from reserved streams.
fn oracle_spot_check(cfg: &ExperimentConfig, sys: &CodeSystem) -> Result<()> {
    let mid = cfg.p_db_points[cfg.p_db_points.len() / 2];
    let net = network_for(sys, cfg, mid)?;
    (0..ORACLE_TRIALS)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t);
            let (_, ctx) = simulate_reception(sys, &net, cfg.noiseless, &mut rng)?;
            let fast = decode_ssd(&ctx, sys)?;
            let slow = decode_joint_ml(&ctx, sys)?;
            if fast != slow {
                return Err(Error::Verification(format!(
                    "decoders disagree on check trial {t} at {mid} dB: {fast:?} vs {slow:?}"
                )));
            }
            Ok(())
        })
        .collect()
}

/// Measure symbol error rates with the symbol-by-symbol decoder (or the
/// joint decoder when forced). Before simulating, the design's
/// separability certificate must hold, and on small product
/// constellations the two decoders are cross-checked.
pub fn run_ser_sweep(cfg: &ExperimentConfig, force_joint: bool) -> Result<SweepResult> {
    let sys = build_system(cfg)?;
    if !force_joint {
        verify_ssd(&sys.design)?;
        if sys.message_count().is_some_and(|t| t <= ORACLE_MESSAGE_LIMIT) {
            oracle_spot_check(cfg, &sys)?;
        }
    }
    run_sweep_with(cfg, |ctx, sys, _| {
        if force_joint {
            decode_joint_ml(ctx, sys)
        } else {
            decode_ssd(ctx, sys)
        }
    })
}

/// Run the single-block scheme as a baseline with the same settings.
pub fn run_tecod_baseline(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let mut baseline = cfg.clone();
    baseline.scheme = Scheme::TeCod;
    run_ser_sweep(&baseline, false)
}

/// Exact CSV header written by [`csv_string`].
pub const CSV_HEADER: &str =
    "scheme,k,a,constellation,rotation_deg,p_db,p1,p2,trials,symbol_errors,ser,seed";

/// Render a sweep as CSV, one row per operating point.
pub fn csv_string(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            result.scheme.name(),
            result.k,
            result.a,
            result.constellation,
            result.rotation_deg,
            p.p_db,
            p.p1,
            p.p2,
            p.trials,
            p.symbol_errors,
            p.ser,
            result.seed,
        ));
    }
    out
}

/// Write the CSV next to nothing else; parent directories must exist.
pub fn emit_csv(result: &SweepResult, path: &str) -> Result<()> {
    std::fs::write(path, csv_string(result))?;
    Ok(())
}

/// Parse a CSV produced by [`csv_string`] back into a sweep result.
/// Intervals are recomputed; wallclock times are not stored in the CSV.
pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header: {header}")));
    }
    let mut result: Option<SweepResult> = None;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Config(format!("row {}: expected 12 fields", i + 1)));
        }
        let bad = |what: &str| Error::Config(format!("row {}: bad {what}", i + 1));
        let scheme = Scheme::parse(fields[0])?;
        let k: usize = fields[1].parse().map_err(|_| bad("relay count"))?;
        let a: u32 = fields[2].parse().map_err(|_| bad("exponent"))?;
        let constellation = fields[3].to_string();
        let rotation_deg: f64 = fields[4].parse().map_err(|_| bad("rotation"))?;
        let p_db: f64 = fields[5].parse().map_err(|_| bad("power point"))?;
        let p1: f64 = fields[6].parse().map_err(|_| bad("source power"))?;
        let p2: f64 = fields[7].parse().map_err(|_| bad("relay power"))?;
        let trials: u64 = fields[8].parse().map_err(|_| bad("trials"))?;
        let symbol_errors: u64 = fields[9].parse().map_err(|_| bad("errors"))?;
        let ser: f64 = fields[10].parse().map_err(|_| bad("rate"))?;
        let seed: u64 = fields[11].parse().map_err(|_| bad("seed"))?;
        let info_vars = crate::design::counts_for(scheme, a)?.info_vars as u64;
        let (ci_lo, ci_hi) = wilson_interval(symbol_errors, trials * info_vars);
        let point = SerPoint {
            p_db,
            p1,
            p2,
            trials,
            symbol_errors,
            ser,
            ci_lo,
            ci_hi,
            wallclock_s: 0.0,
        };
        match &mut result {
            None => {
                result = Some(SweepResult {
                    scheme,
                    k,
                    a,
                    constellation,
                    rotation_deg,
                    seed,
                    points: vec![point],
                })
            }
            Some(r) => {
                if r.scheme != scheme || r.k != k || r.a != a || r.seed != seed {
                    return Err(Error::Config(format!("row {}: mixed sweeps", i + 1)));
                }
                r.points.push(point);
            }
        }
    }
    result.ok_or_else(|| Error::Config("CSV has no data rows".into()))
}

/// Two-column whitespace file for plotting: power point and measured rate.
pub fn emit_plotdata(result: &SweepResult, path: &str) -> Result<()> {
    let mut out = String::new();
    for p in &result.points {
        out.push_str(&format!("{} {}\n", p.p_db, p.ser));
    }
    std::fs::write(path, out)?;
    Ok(())
}
