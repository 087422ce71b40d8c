//! Command-line front end: BER sweeps, single-trial inspection, preset tables
//! and RWIQ spectrum dumps.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error,
//! 3 statistical insufficiency under `--strict`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use tagwave_core::iq::{read_rwiq, write_rwiq};
use tagwave_core::sweep::{emit_plot_script, run_sweep, run_trial_traced, ExperimentConfig};
use tagwave_core::Preset;

#[derive(Parser)]
#[command(
    name = "tagwave",
    version,
    about = "Complex-baseband simulator of tag backscatter on productive FSK/GFSK and OQPSK/MSK carriers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte Carlo BER sweep over the config's (SNR, N) grid and write
    /// CSV plus a plotting script
    Sweep {
        /// TOML experiment config (see docs/config.md)
        config: PathBuf,
        /// Exit with code 3 when a sweep point has too few tag bits for a
        /// meaningful BER estimate
        #[arg(long)]
        strict: bool,
    },
    /// Run a single trial and dump per-stage artifacts (RWIQ buffers and a
    /// text trace)
    Trial {
        /// TOML experiment config (see docs/config.md)
        config: PathBuf,
        /// SNR in dB, or "inf" for a noise-free channel
        #[arg(long)]
        snr: String,
        /// Carrier symbols per tag bit; falls back to the config's [tag] n
        #[arg(long)]
        n: Option<usize>,
        /// Trial index (selects the random substreams)
        #[arg(long)]
        index: u64,
        /// Output directory for the artifacts
        #[arg(long, default_value = "trial_out")]
        out: PathBuf,
    },
    /// Print the parameter table of a named carrier preset
    Describe {
        /// "bluetooth-like" or "zigbee-like"
        preset: String,
    },
    /// Inspect an RWIQ dump: total power and dominant spectral peaks
    Spectrum {
        iq_file: PathBuf,
        /// Spectral bin width in Hz
        #[arg(long, default_value_t = 1000.0)]
        resolution_hz: f64,
        /// How many of the strongest bins to list
        #[arg(long, default_value_t = 5)]
        peaks: usize,
    },
}

enum AppError {
    Config(String),
    Runtime(String),
    Insufficient(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 1,
            AppError::Runtime(_) => 2,
            AppError::Insufficient(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Runtime(m) | AppError::Insufficient(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.cmd {
        Cmd::Sweep { config, strict } => cmd_sweep(&config, strict),
        Cmd::Trial {
            config,
            snr,
            n,
            index,
            out,
        } => cmd_trial(&config, &snr, n, index, &out),
        Cmd::Describe { preset } => cmd_describe(&preset),
        Cmd::Spectrum {
            iq_file,
            resolution_hz,
            peaks,
        } => cmd_spectrum(&iq_file, resolution_hz, peaks),
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn parse_snr(text: &str) -> Result<f64, AppError> {
    match text.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| AppError::Config(format!("--snr {other:?} is neither a number nor \"inf\""))),
    }
}

fn cmd_sweep(config: &PathBuf, strict: bool) -> Result<(), AppError> {
    let cfg = load_config(config)?;
    let warnings = cfg.statistics_warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if strict && !warnings.is_empty() {
        return Err(AppError::Insufficient(
            "statistically insufficient sweep configuration (see warnings)".into(),
        ));
    }

    let outcome = run_sweep(&cfg).map_err(|e| AppError::Runtime(e.to_string()))?;
    let script = emit_plot_script(&outcome.points, &cfg.output_path)
        .map_err(|e| AppError::Runtime(e.to_string()))?;

    println!("snr_db,n,trials,tag_bits_total,bit_errors,ber,wilson_95_halfwidth");
    for p in &outcome.points {
        println!(
            "{},{},{},{},{},{},{}",
            p.snr_db, p.n, p.trials, p.tag_bits_total, p.bit_errors, p.ber, p.wilson_95_halfwidth
        );
    }
    println!("wrote {}", cfg.output_path.display());
    println!("wrote {}", script.display());
    Ok(())
}

fn cmd_trial(
    config: &PathBuf,
    snr: &str,
    n: Option<usize>,
    index: u64,
    out: &PathBuf,
) -> Result<(), AppError> {
    let cfg = load_config(config)?;
    let snr_db = parse_snr(snr)?;
    let n = n
        .or(cfg.tag.default_n)
        .ok_or_else(|| AppError::Config("pass --n or set n in the config's [tag] table".into()))?;
    if n == 0 {
        return Err(AppError::Config("--n must be >= 1".into()));
    }

    let trace =
        run_trial_traced(&cfg, snr_db, n, index).map_err(|e| AppError::Runtime(e.to_string()))?;

    std::fs::create_dir_all(out).map_err(|e| AppError::Runtime(e.to_string()))?;
    for (name, buf) in [
        ("carrier.iq", &trace.carrier),
        ("embedded.iq", &trace.embedded),
        ("received.iq", &trace.received),
    ] {
        let file = File::create(out.join(name)).map_err(|e| AppError::Runtime(e.to_string()))?;
        write_rwiq(buf, BufWriter::new(file)).map_err(|e| AppError::Runtime(e.to_string()))?;
    }

    let o = &trace.output;
    let mut text = String::new();
    text.push_str(&format!("snr_db: {snr_db}\n"));
    text.push_str(&format!("n: {n}\n"));
    text.push_str(&format!("trial_index: {index}\n"));
    text.push_str(&format!("seed: {}\n", cfg.seed));
    text.push_str(&format!("offset_samples: {}\n", o.offset_samples));
    text.push_str(&format!("offset_bits: {}\n", o.offset_bits));
    text.push_str(&format!("carrier_bits: {}\n", trace.carrier_bits));
    text.push_str(&format!("rx_bits: {}\n", trace.demod.bits));
    text.push_str(&format!("tag_bits_sent: {}\n", o.sent));
    text.push_str(&format!("tag_bits_decoded: {}\n", o.decoded));
    text.push_str(&format!("flip_fractions: {:?}\n", trace.decode.flip_fractions));
    text.push_str(&format!("bit_errors: {}\n", o.bit_errors()));
    std::fs::write(out.join("trial.txt"), &text).map_err(|e| AppError::Runtime(e.to_string()))?;

    print!("{text}");
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_describe(preset: &str) -> Result<(), AppError> {
    let preset: Preset = preset
        .parse()
        .map_err(|e: tagwave_core::Error| AppError::Config(e.to_string()))?;
    print!("{}", preset.describe());
    Ok(())
}

fn cmd_spectrum(iq_file: &PathBuf, resolution_hz: f64, peaks: usize) -> Result<(), AppError> {
    let file = File::open(iq_file)
        .map_err(|e| AppError::Config(format!("cannot open {}: {e}", iq_file.display())))?;
    let buf = read_rwiq(file).map_err(|e| AppError::Runtime(e.to_string()))?;
    let power = buf.power().map_err(|e| AppError::Runtime(e.to_string()))?;
    let spec = buf
        .spectrum(resolution_hz)
        .map_err(|e| AppError::Runtime(e.to_string()))?;

    println!("samples: {}", buf.len());
    println!("sample_rate_hz: {}", buf.sample_rate());
    println!("duration_secs: {}", buf.duration_secs());
    println!("total_power: {power}");
    println!("resolution_hz: {}", spec.resolution_hz());
    let peak = spec.peak();
    println!("peak_freq_hz: {}", peak.freq_hz);
    println!("peak_power_db: {}", peak.power_db);

    let mut bins: Vec<_> = spec.bins().to_vec();
    bins.sort_by(|a, b| b.power_db.total_cmp(&a.power_db));
    println!("top_bins (freq_hz power_db):");
    for b in bins.iter().take(peaks) {
        println!("  {} {}", b.freq_hz, b.power_db);
    }
    Ok(())
}
