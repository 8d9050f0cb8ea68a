//! Command-line front end for BER sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use otfs_cim::harness::{parse_snr_range, run_recipe, Recipe, SweepResult, DEFAULT_MIN_ERRORS};
use otfs_cim::{run_sweep, FrameConfig, RunOptions, SweepSpec, System, ValidationPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "sim",
    about = "Monte Carlo BER sweeps for OTFS-CIM, OTFS and OTFS-SM"
)]
#[command(group(ArgGroup::new("mode").required(true).args(["config", "recipe"])))]
struct Args {
    /// System to simulate with --config.
    #[arg(long, value_enum, requires = "config")]
    system: Option<System>,
    /// Frame configuration JSON.
    #[arg(long, requires = "system")]
    config: Option<PathBuf>,
    /// Multi-curve recipe JSON; the options below override its values.
    #[arg(long)]
    recipe: Option<PathBuf>,
    /// SNR grid in dB, `start:step:stop` inclusive.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// Bit errors after which a point stops early; 0 disables.
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix for `<prefix>.csv` and `<prefix>.json`.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; does not change results.
    #[arg(long)]
    threads: Option<usize>,
    /// Run non-square QAM orders on OTFS-CIM as cross constellations.
    #[arg(long)]
    allow_cross_qam: bool,
}

fn print_result(label: &str, result: &SweepResult) {
    println!("{label} ({}, {} bpcu)", result.spec.system, result.eta_bpcu);
    println!("  snr_db     frames        bits    errors          ber       ci95");
    for r in &result.records {
        println!(
            "  {:>6.2} {:>10} {:>11} {:>9} {:>12.4e} {:>10.2e}",
            r.snr_db, r.frames_run, r.bits_sent, r.bit_errors, r.ber, r.ci95_halfwidth
        );
    }
}

fn run(args: Args) -> otfs_cim::Result<()> {
    let opts = RunOptions {
        threads: args.threads,
    };
    let snr = args.snr.as_deref().map(parse_snr_range).transpose()?;
    if let Some(path) = &args.recipe {
        let mut recipe = Recipe::from_json_file(path)?;
        if let Some(s) = snr {
            recipe.snr_db = s;
        }
        recipe.max_frames = args.max_frames.unwrap_or(recipe.max_frames);
        recipe.min_errors = args.min_errors.unwrap_or(recipe.min_errors);
        recipe.seed = args.seed.unwrap_or(recipe.seed);
        recipe.allow_cross_qam |= args.allow_cross_qam;
        for (label, result) in run_recipe(&recipe, Some(&args.out), opts)? {
            print_result(&label, &result);
        }
        return Ok(());
    }
    let (Some(system), Some(config)) = (args.system, &args.config) else {
        unreachable!("clap requires --system and --config together");
    };
    let snr_db_list =
        snr.ok_or_else(|| otfs_cim::Error::Sweep("--snr is required with --config".into()))?;
    let spec = SweepSpec {
        system,
        cfg: FrameConfig::from_json_file(config)?,
        snr_db_list,
        max_frames: args.max_frames.unwrap_or(10_000),
        min_bit_errors: args.min_errors.unwrap_or(DEFAULT_MIN_ERRORS),
        seed: args.seed.unwrap_or(0),
        policy: ValidationPolicy {
            allow_cross_qam: args.allow_cross_qam,
        },
    };
    let result = run_sweep(&spec, opts)?;
    result.write(&args.out)?;
    print_result(&args.out.display().to_string(), &result);
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
