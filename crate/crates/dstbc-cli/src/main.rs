//! Command line driver: inspect and verify designs, print the rate table,
//! check diversity, self-test the decoders, and run symbol-error-rate
//! sweeps from a config file.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dstbc_core::channel::{effective_energy, sample_channel, NetworkConfig};
use dstbc_core::constellation::{by_name, diversity_rotation_rad};
use dstbc_core::decoder::{decode_joint_ml, decode_ssd, MlMetricContext};
use dstbc_core::design::{counts_for, design_for, extract_dispersion, Scheme};
use dstbc_core::experiment::{
    csv_string, emit_csv, emit_plotdata, run_ser_sweep, ExperimentConfig,
};
use dstbc_core::metrics::{delay_total, rate_tecod, rate_teciod};
use dstbc_core::system::{run_protocol, CodeSystem};
use dstbc_core::verify::{check_full_diversity, verify_relay_sums, verify_ssd, RANK_DET_TOL};
use dstbc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "dstbc", about = "Training-embedded distributed space-time block codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DesignArgs {
    /// Code family: teciod (block-diagonal, interleaved) or tecod.
    #[arg(long)]
    scheme: String,
    /// Relay count exponent; the design serves 2^a relays.
    #[arg(long)]
    a: u32,
}

#[derive(Subcommand)]
enum DesignAction {
    /// Print the symbolic design grid.
    Show(DesignArgs),
    /// Run the structural, dispersion, and separability checks.
    Verify(DesignArgs),
}

#[derive(Subcommand)]
enum DiversityAction {
    /// Check full diversity for a scheme and constellation.
    Check {
        #[command(flatten)]
        design: DesignArgs,
        /// Constellation name: qpsk, qam8, or qam16.
        #[arg(long)]
        constellation: String,
        /// Rotation in degrees; "auto" for the diversity-preserving angle.
        #[arg(long, default_value = "0")]
        rotation_deg: String,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or verify a symbolic design.
    #[command(subcommand)]
    Design(DesignAction),
    /// Print the rate and delay table for both schemes.
    Rates,
    /// Full diversity checks.
    #[command(subcommand)]
    Diversity(DiversityAction),
    /// Compare the fast decoder against the exhaustive decoder on noisy
    /// receptions.
    DecodeSelftest {
        /// Relay count exponent, 2 to 4.
        #[arg(long)]
        a: u32,
        /// Noisy receptions per power point.
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
    /// Run a symbol-error-rate sweep from a config file.
    Simulate {
        /// Path to a flat key = value config.
        #[arg(long)]
        config: String,
        /// Decode with the exhaustive joint search instead of the fast
        /// decoder.
        #[arg(long)]
        force_joint: bool,
        /// Also write a two-column "p_db ser" file here.
        #[arg(long)]
        plot_out: Option<String>,
    },
}

fn parse_scheme(name: &str) -> Result<Scheme> {
    Scheme::parse(name)
}

fn cmd_design_show(args: &DesignArgs) -> Result<()> {
    let scheme = parse_scheme(&args.scheme)?;
    let design = design_for(scheme, args.a)?;
    let counts = counts_for(scheme, args.a)?;
    print!("{}", design.render());
    println!();
    println!(
        "relays {}, time slots {}, information symbols {}, training copies {}, broadcast length {}",
        counts.relays, design.rows, counts.info_vars, counts.train_copies, counts.first_phase_len
    );
    Ok(())
}

fn cmd_design_verify(args: &DesignArgs) -> Result<()> {
    let scheme = parse_scheme(&args.scheme)?;
    let design = design_for(scheme, args.a)?;
    design.validate()?;
    println!("structure: ok");
    let lin = extract_dispersion(&design)?;
    let report = verify_relay_sums(&lin);
    if !report.ok {
        for v in &report.violations {
            eprintln!("dispersion: {v}");
        }
        return Err(Error::Verification("dispersion identities failed".into()));
    }
    println!("dispersion identities: ok");
    verify_ssd(&design)?;
    println!("single-symbol decodability: ok");
    Ok(())
}

fn cmd_rates() -> Result<()> {
    println!("{:<8} {:>2} {:>6} {:>7} {:>9} {:>6}", "scheme", "a", "relays", "rate", "(value)", "delay");
    for a in 1..=5 {
        let r = rate_teciod(a)?;
        println!(
            "{:<8} {:>2} {:>6} {:>7} {:>9.4} {:>6}",
            Scheme::TeCiod.name(),
            a,
            1u64 << a,
            r.to_string(),
            r.value(),
            delay_total(Scheme::TeCiod, a)?
        );
    }
    for a in 1..=5 {
        let r = rate_tecod(a)?;
        println!(
            "{:<8} {:>2} {:>6} {:>7} {:>9.4} {:>6}",
            Scheme::TeCod.name(),
            a,
            1u64 << a,
            r.to_string(),
            r.value(),
            delay_total(Scheme::TeCod, a)?
        );
    }
    Ok(())
}

fn cmd_diversity_check(
    design: &DesignArgs,
    constellation: &str,
    rotation_deg: &str,
) -> Result<()> {
    let scheme = parse_scheme(&design.scheme)?;
    let rotation = match rotation_deg {
        "auto" => diversity_rotation_rad().to_degrees(),
        v => v
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad rotation: {v}")))?,
    };
    let mut base = by_name(constellation)?;
    if rotation != 0.0 {
        base = base.rotate(rotation.to_radians());
    }
    let sys = CodeSystem::new(scheme, design.a, &base, None)?;
    let report = check_full_diversity(&sys, RANK_DET_TOL);
    println!("mode: {:?}", report.mode);
    println!("coordinate screen: {}", if report.coords_ok { "ok" } else { "collision" });
    if let Some(det) = report.min_abs_det {
        println!("smallest normalized determinant: {det:.3e}");
    }
    if report.pairs_checked > 0 {
        println!("difference vectors checked: {}", report.pairs_checked);
    }
    match &report.witness {
        Some(w) if !report.passed => {
            let parts: Vec<String> =
                w.iter().map(|d| format!("{:+.4}{:+.4}i", d.re, d.im)).collect();
            println!("deficient difference: [{}]", parts.join(", "));
        }
        _ => {}
    }
    if report.passed {
        println!("full diversity: ok");
        Ok(())
    } else {
        Err(Error::Verification("full diversity fails for this constellation".into()))
    }
}

fn cmd_decode_selftest(a: u32, trials: u64) -> Result<()> {
    if !(2..=4).contains(&a) {
        return Err(Error::Config("selftest supports a = 2, 3, or 4".into()));
    }
    use rand::{Rng, SeedableRng};
    let base = match a {
        3 => by_name("qam8")?,
        _ => by_name("qpsk")?,
    };
    let base = base.rotate(diversity_rotation_rad());
    let sys = CodeSystem::new(Scheme::TeCiod, a, &base, None)?;
    verify_ssd(&sys.design)?;
    let e_eff =
        effective_energy(&sys.counts, sys.alpha.value.norm_sqr(), sys.alpha.symbol_energy);
    let mut mismatches = 0u64;
    for (i, p_db) in [10.0, 20.0, 30.0].into_iter().enumerate() {
        let net = NetworkConfig::from_split(sys.counts, p_db, 0.5, e_eff)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + i as u64);
        for _ in 0..trials {
            let msg: Vec<usize> = (0..sys.counts.info_vars)
                .map(|_| rng.gen_range(0..sys.constellation.len()))
                .collect();
            let ch = sample_channel(sys.counts.relays, &mut rng);
            let y = run_protocol(&sys, &net, &ch, &sys.symbols(&msg)?, false, &mut rng);
            let ctx = MlMetricContext::from_channel(y, &ch, &net, &sys.lin)?;
            if decode_ssd(&ctx, &sys)? != decode_joint_ml(&ctx, &sys)? {
                mismatches += 1;
            }
        }
        println!("{p_db} dB: {trials} receptions checked");
    }
    if mismatches > 0 {
        return Err(Error::Verification(format!(
            "fast and joint decoders disagreed {mismatches} times"
        )));
    }
    println!("fast decoder matches the joint decoder on every reception");
    Ok(())
}

fn cmd_simulate(config: &str, force_joint: bool, plot_out: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(config)?;
    let cfg = ExperimentConfig::parse(&text)?;
    let result = run_ser_sweep(&cfg, force_joint)?;
    emit_csv(&result, &cfg.out_path)?;
    if let Some(path) = plot_out {
        emit_plotdata(&result, path)?;
    }
    print!("{}", csv_string(&result));
    for p in &result.points {
        eprintln!(
            "{:>6} dB: ser {:.3e} [{:.3e}, {:.3e}] from {} trials, {:.1}s",
            p.p_db, p.ser, p.ci_lo, p.ci_hi, p.trials, p.wallclock_s
        );
    }
    eprintln!("wrote {}", cfg.out_path);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Design(DesignAction::Show(args)) => cmd_design_show(args),
        Command::Design(DesignAction::Verify(args)) => cmd_design_verify(args),
        Command::Rates => cmd_rates(),
        Command::Diversity(DiversityAction::Check { design, constellation, rotation_deg }) => {
            cmd_diversity_check(design, constellation, rotation_deg)
        }
        Command::DecodeSelftest { a, trials } => cmd_decode_selftest(*a, *trials),
        Command::Simulate { config, force_joint, plot_out } => {
            cmd_simulate(config, *force_joint, plot_out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DSTBC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::SearchSpace(_) => ExitCode::from(2),
                Error::Verification(_) | Error::Io(_) => ExitCode::from(1),
            }
        }
    }
}
