use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use ofdma_sls::config::AntennaMode;
use ofdma_sls::sfr::MaskKind;
use ofdma_sls::Exec;
use ofdma_sls_cli::{echo_configs, emit_report, run_experiment, sig6, Format, RunSpec, SchedulerChoice};

/// Runs OFDMA downlink system-level simulations over a sweep of schedulers
/// and power masks.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated schedulers: pf, ppf, mmpf[-m1|m2|m3], mpmpf[-m1|m2|m3].
    #[arg(long, value_delimiter = ',')]
    scheduler: Vec<SchedulerChoice>,

    /// Comma-separated power masks: flat, pm1, pm2, rb012, custom.
    #[arg(long, value_delimiter = ',')]
    mask: Vec<MaskKind>,

    /// α₁ for schedulers given without a preset.
    #[arg(long)]
    alpha1: Option<f64>,

    /// α₂ for schedulers given without a preset.
    #[arg(long)]
    alpha2: Option<f64>,

    /// 1x2 (MRC) or 2x2 (LMMSE).
    #[arg(long)]
    antenna: Option<AntennaMode>,

    /// Comma-separated drop seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Number of drops (seeds base, base+1, ...).
    #[arg(long)]
    drops: Option<usize>,

    /// TTIs per drop, warm-up included.
    #[arg(long)]
    ttis: Option<u64>,

    #[arg(long, default_value = "results")]
    out: PathBuf,

    #[arg(long, default_value = "csv")]
    format: Format,

    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

fn run(args: Args) -> Result<bool> {
    let spec = RunSpec {
        config: args.config,
        schedulers: args.scheduler,
        masks: args.mask,
        alpha1: args.alpha1,
        alpha2: args.alpha2,
        antenna: args.antenna,
        seeds: args.seeds,
        drops: args.drops,
        ttis: args.ttis,
        out: args.out,
        exec: if args.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    let variants = spec.variants()?;
    std::fs::create_dir_all(&spec.out)?;
    std::fs::write(spec.out.join("config.toml"), spec.base_config()?.to_toml_string())?;
    echo_configs(&variants, &spec.out)?;

    let records = run_experiment(&spec)?;
    emit_report(&records, args.format, &spec.out)?;

    println!("{:<24} {:>12} {:>12} {:>8} {:>8} {:>9}", "label", "tput Mbps", "cov kbps", "jain", "bler", "seconds");
    for r in &records {
        match &r.error {
            None => println!(
                "{:<24} {:>12} {:>12} {:>8} {:>8} {:>9}",
                r.label,
                sig6(r.throughput_mbps),
                sig6(r.coverage_kbps),
                sig6(r.jain),
                sig6(r.bler),
                sig6(r.seconds)
            ),
            Some(e) => println!("{:<24} failed: {e}", r.label),
        }
    }
    Ok(records.iter().all(|r| r.ok()))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
