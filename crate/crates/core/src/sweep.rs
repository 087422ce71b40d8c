//! Config-driven Monte Carlo harness: wires carrier, tag, channel and
//! receiver into BER-vs-SNR sweeps over (SNR, N) grids, with per-trial seed
//! substreams so any worker count produces identical results.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::carrier::{BitStream, CarrierConfig, Preset};
use crate::channel::{apply, substream_rng, substream_u64, ChannelModel};
use crate::error::{Error, Result};
use crate::iq::IqBuffer;
use crate::receiver::{decode_tag_bits, demodulate, DemodResult, TagDecodeResult};
use crate::tag::{embed, EmbedMode, StartOffset, TagProfile};

/// Tag behavior template; N comes from the sweep grid per point.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSettings {
    pub mode: EmbedMode,
    /// Mixer offset; `None` applies the codeword-translation rule derived
    /// from the FSK alphabet.
    pub delta_f_hz: Option<f64>,
    /// Quarter-turn index marking a 1 in phase-delay mode (2 = 180 degrees).
    pub phase_on: usize,
    pub start_offset: StartOffset,
    pub gamma_on: Complex64,
    pub gamma_off: Complex64,
    /// Fallback N for single-trial runs that do not name one.
    pub default_n: Option<usize>,
}

impl TagSettings {
    pub fn frequency_shift() -> Self {
        Self {
            mode: EmbedMode::FrequencyShift,
            delta_f_hz: None,
            phase_on: 2,
            start_offset: StartOffset::Random,
            gamma_on: Complex64::new(1.0, 0.0),
            gamma_off: Complex64::new(1.0, 0.0),
            default_n: None,
        }
    }

    pub fn phase_delay() -> Self {
        Self {
            mode: EmbedMode::PhaseDelay,
            ..Self::frequency_shift()
        }
    }

    /// Concrete profile for one sweep point.
    pub fn profile_for(&self, n: usize, carrier: &CarrierConfig) -> Result<TagProfile> {
        match (self.mode, carrier) {
            (EmbedMode::FrequencyShift, CarrierConfig::Psk(_)) => {
                return Err(Error::InvalidConfig(
                    "frequency-shift embedding pairs with an FSK carrier".into(),
                ))
            }
            (EmbedMode::PhaseDelay, CarrierConfig::Fsk(_)) => {
                return Err(Error::InvalidConfig(
                    "phase-delay embedding pairs with an OQPSK carrier".into(),
                ))
            }
            _ => {}
        }
        let delta_f_hz = match (self.mode, self.delta_f_hz, carrier) {
            (EmbedMode::FrequencyShift, Some(d), _) => d,
            (EmbedMode::FrequencyShift, None, CarrierConfig::Fsk(c)) => c.codeword_delta_f(),
            _ => 0.0,
        };
        let profile = TagProfile {
            mode: self.mode,
            symbols_per_bit: n,
            delta_f_hz,
            phase_set: [0, self.phase_on],
            start_offset: self.start_offset,
            gamma_on: self.gamma_on,
            gamma_off: self.gamma_off,
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// One sweep: carrier, tag template, channel knobs and the (SNR, N) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub carrier: CarrierConfig,
    pub tag: TagSettings,
    pub leak_gain: f64,
    pub snr_db_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials_per_point: usize,
    pub tag_bits_per_trial: usize,
    pub seed: u64,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.carrier.validate()?;
        if self.snr_db_list.is_empty() {
            return Err(Error::InvalidConfig("snr_db list is empty".into()));
        }
        if self.snr_db_list.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("snr_db contains NaN".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidConfig("n list is empty".into()));
        }
        if self.n_list.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("n values must be >= 1".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials_per_point must be >= 1".into()));
        }
        if self.tag_bits_per_trial == 0 {
            return Err(Error::InvalidConfig(
                "tag_bits_per_trial must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.leak_gain) {
            return Err(Error::InvalidConfig(format!(
                "leak_gain must lie in [0, 1], got {}",
                self.leak_gain
            )));
        }
        // fail early on mode/family mismatches
        self.tag.profile_for(self.n_list[0], &self.carrier)?;
        Ok(())
    }

    /// Non-fatal statistical health checks.
    pub fn statistics_warnings(&self) -> Vec<String> {
        let bits = self.trials_per_point * self.tag_bits_per_trial;
        if bits < 1000 {
            vec![format!(
                "only {bits} tag bits per sweep point (trials_per_point * \
                 tag_bits_per_trial); at least 1000 are needed for a meaningful BER"
            )]
        } else {
            Vec::new()
        }
    }

    /// Parse the TOML experiment schema; unknown keys are errors.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
        file.resolve()
    }
}

/// One (SNR, N) BER measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub n: usize,
    pub trials: usize,
    pub tag_bits_total: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub wilson_95_halfwidth: f64,
}

impl BerPoint {
    pub fn new(snr_db: f64, n: usize, trials: usize, tag_bits_total: u64, bit_errors: u64) -> Self {
        let ber = if tag_bits_total > 0 {
            bit_errors as f64 / tag_bits_total as f64
        } else {
            0.0
        };
        Self {
            snr_db,
            n,
            trials,
            tag_bits_total,
            bit_errors,
            ber,
            wilson_95_halfwidth: wilson_halfwidth(bit_errors, tag_bits_total),
        }
    }
}

/// Half-width of the 95% Wilson score interval for `errors` out of `total`.
pub fn wilson_halfwidth(errors: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let z = 1.96f64;
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    (z / (1.0 + z2 / n)) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Compact result of one pipeline pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub sent: BitStream,
    pub decoded: BitStream,
    pub offset_samples: usize,
    pub offset_bits: usize,
}

impl TrialOutput {
    pub fn bit_errors(&self) -> usize {
        self.sent.hamming(&self.decoded)
    }
}

/// Full per-stage artifacts of one trial, for inspection dumps.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub carrier_bits: BitStream,
    pub carrier: IqBuffer,
    pub embedded: IqBuffer,
    pub received: IqBuffer,
    pub demod: DemodResult,
    pub decode: TagDecodeResult,
    pub output: TrialOutput,
}

/// Bit index of the first demodulated bit whose decision falls inside a tag
/// span starting at `offset_samples`.
pub fn embedded_bit_offset(offset_samples: usize, carrier: &CarrierConfig) -> usize {
    match carrier {
        CarrierConfig::Fsk(c) => {
            // a symbol follows the tag state covering most of its correlation
            // window
            let sps = c.samples_per_symbol;
            let first_symbol = (offset_samples + sps / 2) / sps;
            first_symbol * c.bits_per_symbol()
        }
        CarrierConfig::Psk(c) => {
            // bit m is sampled at its chip midpoint m*spc + spc/2
            let spc = c.samples_per_chip;
            offset_samples.saturating_sub(spc / 2).div_ceil(spc)
        }
    }
}

/// Run one trial and keep every intermediate stage.
///
/// Carrier bits, tag bits, the embedding offset and the channel noise each
/// draw from their own substream of `(seed, snr, n, trial_index)`, and the
/// receiver compares against the true carrier bits (non-backscatter errors
/// are assumed corrected upstream).
pub fn run_trial_traced(
    cfg: &ExperimentConfig,
    snr_db: f64,
    n: usize,
    trial_index: u64,
) -> Result<TrialTrace> {
    let ids = [snr_db.to_bits(), n as u64, trial_index];
    let mut carrier_rng = substream_rng(cfg.seed, "tagwave.trial.carrier", &ids);
    let mut tag_rng = substream_rng(cfg.seed, "tagwave.trial.tagbits", &ids);
    let mut offset_rng = substream_rng(cfg.seed, "tagwave.trial.offset", &ids);
    let channel_seed = substream_u64(cfg.seed, "tagwave.trial.channel", &ids);

    let bps = cfg.carrier.bits_per_symbol();
    let sps = cfg.carrier.samples_per_symbol();
    // one extra tag-bit window of carrier absorbs any start offset
    let total_symbols = n * (cfg.tag_bits_per_trial + 1);
    let carrier_bits = BitStream::random(total_symbols * bps, &mut carrier_rng);
    let sent = BitStream::random(cfg.tag_bits_per_trial, &mut tag_rng);

    let carrier = cfg.carrier.modulate(&carrier_bits)?;
    let template = cfg.tag.profile_for(n, &cfg.carrier)?;
    let (profile, offset_samples) = template.resolve_offset(sps, &mut offset_rng);
    let embedded = embed(&carrier, &sent, &profile, sps)?;

    let model = ChannelModel {
        snr_db,
        leak_gain: cfg.leak_gain,
        seed: channel_seed,
    };
    let received = apply(&embedded, &carrier, &model)?;

    let demod = demodulate(&received, &cfg.carrier)?;
    let offset_bits = embedded_bit_offset(offset_samples, &cfg.carrier);
    let decode = decode_tag_bits(&demod, &carrier_bits, n * bps, offset_bits)?;
    let decoded = decode.tag_bits.slice(0, cfg.tag_bits_per_trial);

    Ok(TrialTrace {
        carrier_bits,
        carrier,
        embedded,
        received,
        demod,
        decode,
        output: TrialOutput {
            sent,
            decoded,
            offset_samples,
            offset_bits,
        },
    })
}

/// Run one trial; same pipeline as [`run_trial_traced`] without the buffers.
pub fn run_trial(
    cfg: &ExperimentConfig,
    snr_db: f64,
    n: usize,
    trial_index: u64,
) -> Result<TrialOutput> {
    run_trial_traced(cfg, snr_db, n, trial_index).map(|t| t.output)
}

/// Sweep results plus any statistical-insufficiency warnings.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<BerPoint>,
    pub warnings: Vec<String>,
}

/// Run the whole (N, SNR) grid without touching the filesystem.
///
/// Trials fan out over `(snr, n, trial)` tuples; reduction follows tuple
/// order, so serial and parallel execution produce identical points.
pub fn compute_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let warnings = cfg.statistics_warnings();

    let grid: Vec<(usize, f64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| cfg.snr_db_list.iter().map(move |&snr| (n, snr)))
        .collect();
    let trials = cfg.trials_per_point as u64;
    let tasks: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..trials).map(move |t| (g, t)))
        .collect();

    let per_trial_errors: Vec<usize> = tasks
        .par_iter()
        .map(|&(g, t)| {
            let (n, snr) = grid[g];
            run_trial(cfg, snr, n, t).map(|o| o.bit_errors())
        })
        .collect::<Result<Vec<_>>>()?;

    let bits_per_trial = cfg.tag_bits_per_trial as u64;
    let points = grid
        .iter()
        .enumerate()
        .map(|(g, &(n, snr))| {
            let start = g * cfg.trials_per_point;
            let errors: u64 = per_trial_errors[start..start + cfg.trials_per_point]
                .iter()
                .map(|&e| e as u64)
                .sum();
            BerPoint::new(snr, n, cfg.trials_per_point, trials * bits_per_trial, errors)
        })
        .collect();

    Ok(SweepOutcome { points, warnings })
}

/// Run the grid and write the CSV to the configured output path.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let outcome = compute_sweep(cfg)?;
    if let Some(parent) = cfg.output_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&cfg.output_path, csv_string(&outcome.points))?;
    Ok(outcome)
}

/// CSV rendering with the fixed column set.
pub fn csv_string(points: &[BerPoint]) -> String {
    let mut out = String::from("snr_db,n,trials,tag_bits_total,bit_errors,ber,wilson_95_halfwidth\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.snr_db, p.n, p.trials, p.tag_bits_total, p.bit_errors, p.ber, p.wilson_95_halfwidth
        ));
    }
    out
}

/// Write `points` as CSV at `csv_path` plus a self-contained Python plotting
/// script next to it (same stem, `.py`), returning the script path. The
/// script depends only on the CSV file name, so regenerating from an
/// identical CSV yields byte-identical output.
pub fn emit_plot_script(points: &[BerPoint], csv_path: &Path) -> Result<PathBuf> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    if let Some(parent) = csv_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(csv_path, csv_string(points))?;

    let csv_name = csv_path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig("output path has no file name".into()))?
        .to_string_lossy()
        .into_owned();
    let png_name = csv_path
        .with_extension("png")
        .file_name()
        .unwrap()
        .to_string_lossy()
        .into_owned();

    let script = plot_script_text(&csv_name, &png_name);
    let script_path = csv_path.with_extension("py");
    std::fs::write(&script_path, script)?;
    Ok(script_path)
}

fn plot_script_text(csv_name: &str, png_name: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plot tag BER versus SNR from {csv_name}, one curve per N."""
import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV = "{csv_name}"
PNG = "{png_name}"
FLOOR = 1e-6  # keeps zero-BER points visible on the log axis

series = defaultdict(list)
with open(CSV) as fh:
    for row in csv.DictReader(fh):
        series[int(row["n"])].append(
            (float(row["snr_db"]), float(row["ber"]), float(row["wilson_95_halfwidth"]))
        )

fig, ax = plt.subplots(figsize=(6.0, 4.0))
for n in sorted(series):
    pts = sorted(series[n])
    snr = [p[0] for p in pts]
    ber = [max(p[1], FLOOR) for p in pts]
    err = [p[2] for p in pts]
    ax.errorbar(snr, ber, yerr=err, marker="o", capsize=3, label=f"N={{n}}")
ax.set_yscale("log")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("tag bit error rate")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(PNG, dpi=150)
print(f"wrote {{PNG}}")
"#
    )
}

// --- TOML experiment schema -------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TomlSnr {
    Num(f64),
    Text(String),
}

impl TomlSnr {
    fn resolve(&self) -> Result<f64> {
        match self {
            TomlSnr::Num(v) => Ok(*v),
            TomlSnr::Text(s) => match s.trim() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(Error::InvalidConfig(format!(
                    "snr_db entry {other:?} is neither a number nor \"inf\""
                ))),
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TomlOffset {
    Num(usize),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    seed: u64,
    output_path: PathBuf,
    snr_db: Vec<TomlSnr>,
    n: Vec<usize>,
    trials_per_point: usize,
    tag_bits_per_trial: usize,
    carrier: CarrierFile,
    tag: TagFile,
    #[serde(default)]
    channel: ChannelFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CarrierFile {
    preset: String,
    // FSK overrides
    symbol_rate: Option<f64>,
    deviation_hz: Option<f64>,
    alphabet_size: Option<usize>,
    channel_bandwidth_hz: Option<f64>,
    /// 0 disables Gaussian shaping (rectangular pulses).
    gaussian_bt: Option<f64>,
    samples_per_symbol: Option<usize>,
    // PSK overrides
    chip_rate: Option<f64>,
    samples_per_chip: Option<usize>,
    amplitude: Option<f64>,
    offset_mode: Option<bool>,
    msk_shaping: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TagFile {
    mode: String,
    /// Default N for single-trial runs; sweeps take N from the grid.
    n: Option<usize>,
    delta_f_hz: Option<f64>,
    /// Two phases in degrees from {0, 90, 180, 270}; first must be 0.
    phase_set: Option<Vec<f64>>,
    /// "random", "aligned" or a sample count.
    start_offset: Option<TomlOffset>,
    gamma_on: Option<[f64; 2]>,
    gamma_off: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    leak_gain: Option<f64>,
}

fn reject_override(name: &str, preset: &str, set: bool) -> Result<()> {
    if set {
        return Err(Error::InvalidConfig(format!(
            "carrier override {name:?} does not apply to preset {preset:?}"
        )));
    }
    Ok(())
}

impl ExperimentFile {
    fn resolve(self) -> Result<ExperimentConfig> {
        let preset: Preset = self.carrier.preset.parse()?;
        let carrier = self.carrier.apply(preset)?;
        let tag = self.tag.resolve()?;
        let snr_db_list = self
            .snr_db
            .iter()
            .map(TomlSnr::resolve)
            .collect::<Result<Vec<_>>>()?;
        let cfg = ExperimentConfig {
            carrier,
            tag,
            leak_gain: self.channel.leak_gain.unwrap_or(0.0),
            snr_db_list,
            n_list: self.n,
            trials_per_point: self.trials_per_point,
            tag_bits_per_trial: self.tag_bits_per_trial,
            seed: self.seed,
            output_path: self.output_path,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl CarrierFile {
    fn apply(&self, preset: Preset) -> Result<CarrierConfig> {
        let name = preset.name();
        match preset.config() {
            CarrierConfig::Fsk(mut c) => {
                reject_override("chip_rate", name, self.chip_rate.is_some())?;
                reject_override("samples_per_chip", name, self.samples_per_chip.is_some())?;
                reject_override("amplitude", name, self.amplitude.is_some())?;
                reject_override("offset_mode", name, self.offset_mode.is_some())?;
                reject_override("msk_shaping", name, self.msk_shaping.is_some())?;
                if let Some(v) = self.symbol_rate {
                    c.symbol_rate = v;
                }
                if let Some(v) = self.deviation_hz {
                    c.deviation_hz = v;
                }
                if let Some(v) = self.alphabet_size {
                    c.alphabet_size = v;
                }
                if let Some(v) = self.channel_bandwidth_hz {
                    c.channel_bandwidth_hz = v;
                }
                if let Some(v) = self.gaussian_bt {
                    c.gaussian_bt = if v == 0.0 { None } else { Some(v) };
                }
                if let Some(v) = self.samples_per_symbol {
                    c.samples_per_symbol = v;
                }
                c.validate()?;
                Ok(CarrierConfig::Fsk(c))
            }
            CarrierConfig::Psk(mut c) => {
                reject_override("symbol_rate", name, self.symbol_rate.is_some())?;
                reject_override("deviation_hz", name, self.deviation_hz.is_some())?;
                reject_override("alphabet_size", name, self.alphabet_size.is_some())?;
                reject_override(
                    "channel_bandwidth_hz",
                    name,
                    self.channel_bandwidth_hz.is_some(),
                )?;
                reject_override("gaussian_bt", name, self.gaussian_bt.is_some())?;
                reject_override(
                    "samples_per_symbol",
                    name,
                    self.samples_per_symbol.is_some(),
                )?;
                if let Some(v) = self.chip_rate {
                    c.chip_rate = v;
                }
                if let Some(v) = self.samples_per_chip {
                    c.samples_per_chip = v;
                }
                if let Some(v) = self.amplitude {
                    c.amplitude = v;
                }
                if let Some(v) = self.offset_mode {
                    c.offset_mode = v;
                }
                if let Some(v) = self.msk_shaping {
                    c.msk_shaping = v;
                }
                c.validate()?;
                Ok(CarrierConfig::Psk(c))
            }
        }
    }
}

impl TagFile {
    fn resolve(&self) -> Result<TagSettings> {
        let mode = match self.mode.as_str() {
            "frequency-shift" => EmbedMode::FrequencyShift,
            "phase-delay" => EmbedMode::PhaseDelay,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown tag mode {other:?}; expected \"frequency-shift\" or \"phase-delay\""
                )))
            }
        };
        let phase_on = match &self.phase_set {
            None => 2,
            Some(set) => {
                if set.len() != 2 || set[0] != 0.0 {
                    return Err(Error::InvalidConfig(
                        "phase_set must hold exactly two degrees values starting with 0".into(),
                    ));
                }
                match set[1] {
                    v if v == 90.0 => 1,
                    v if v == 180.0 => 2,
                    v if v == 270.0 => 3,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "phase_set on-state must be 90, 180 or 270 degrees, got {other}"
                        )))
                    }
                }
            }
        };
        let start_offset = match &self.start_offset {
            None => StartOffset::Random,
            Some(TomlOffset::Num(s)) => StartOffset::Fixed(*s),
            Some(TomlOffset::Text(t)) => match t.as_str() {
                "random" => StartOffset::Random,
                "aligned" => StartOffset::Fixed(0),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "start_offset {other:?} is neither a sample count, \"random\" nor \
                         \"aligned\""
                    )))
                }
            },
        };
        let gamma = |v: &Option<[f64; 2]>| {
            v.map(|[re, im]| Complex64::new(re, im))
                .unwrap_or(Complex64::new(1.0, 0.0))
        };
        Ok(TagSettings {
            mode,
            delta_f_hz: self.delta_f_hz,
            phase_on,
            start_offset,
            gamma_on: gamma(&self.gamma_on),
            gamma_off: gamma(&self.gamma_off),
            default_n: self.n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_fsk_config(snr: Vec<f64>, offset: StartOffset) -> ExperimentConfig {
        ExperimentConfig {
            carrier: Preset::BluetoothLike.config(),
            tag: TagSettings {
                start_offset: offset,
                ..TagSettings::frequency_shift()
            },
            leak_gain: 0.0,
            snr_db_list: snr,
            n_list: vec![4],
            trials_per_point: 4,
            tag_bits_per_trial: 16,
            seed: 99,
            output_path: PathBuf::from("unused.csv"),
        }
    }

    #[test]
    fn trial_noise_free_aligned_is_exact() {
        let cfg = tiny_fsk_config(vec![f64::INFINITY], StartOffset::Fixed(0));
        for trial in 0..8 {
            let out = run_trial(&cfg, f64::INFINITY, 4, trial).unwrap();
            assert_eq!(out.sent, out.decoded, "trial {trial}");
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = tiny_fsk_config(vec![0.0], StartOffset::Random);
        let a = run_trial(&cfg, 0.0, 4, 3).unwrap();
        let b = run_trial(&cfg, 0.0, 4, 3).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&cfg, 0.0, 4, 4).unwrap();
        assert!(a.sent != c.sent || a.offset_samples != c.offset_samples);
    }

    #[test]
    fn trial_deep_noise_is_coin_flipping() {
        let mut cfg = tiny_fsk_config(vec![-30.0], StartOffset::Fixed(0));
        cfg.trials_per_point = 16;
        cfg.tag_bits_per_trial = 64;
        let mut errors = 0usize;
        let mut total = 0usize;
        for trial in 0..16 {
            let out = run_trial(&cfg, -30.0, 4, trial).unwrap();
            errors += out.bit_errors();
            total += out.sent.len();
        }
        let ber = errors as f64 / total as f64;
        assert!((ber - 0.5).abs() <= 0.1, "deep-noise BER {ber}");
    }

    #[test]
    fn sweep_serial_and_parallel_agree() {
        let cfg = tiny_fsk_config(vec![f64::INFINITY, 0.0], StartOffset::Random);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| compute_sweep(&cfg))
            .unwrap();
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| compute_sweep(&cfg))
            .unwrap();
        assert_eq!(csv_string(&serial.points), csv_string(&parallel.points));
    }

    #[test]
    fn wilson_known_value() {
        // 50/100 at 95%: computed once with the closed form
        let hw = wilson_halfwidth(50, 100);
        assert_abs_diff_eq!(hw, 0.09617, epsilon = 1e-4);
        assert_eq!(wilson_halfwidth(0, 0), 0.0);
        assert!(wilson_halfwidth(0, 1000) > 0.0);
    }

    #[test]
    fn ber_point_invariants() {
        let p = BerPoint::new(-8.0, 8, 100, 6400, 768);
        assert_abs_diff_eq!(p.ber, 0.12, epsilon = 1e-12);
        assert!(p.ber >= 0.0 && p.ber <= 1.0);
    }

    #[test]
    fn emit_plot_script_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("curves.csv");
        let points = vec![
            BerPoint::new(-10.0, 4, 10, 640, 120),
            BerPoint::new(-8.0, 4, 10, 640, 60),
            BerPoint::new(-10.0, 8, 10, 640, 70),
            BerPoint::new(-8.0, 8, 10, 640, 20),
        ];
        let script1 = emit_plot_script(&points, &csv_path).unwrap();
        let bytes1 = std::fs::read(&script1).unwrap();
        let script2 = emit_plot_script(&points, &csv_path).unwrap();
        let bytes2 = std::fs::read(&script2).unwrap();
        assert_eq!(bytes1, bytes2);
        let text = String::from_utf8(bytes1).unwrap();
        assert!(text.contains("curves.csv"));
        assert!(text.contains("set_yscale(\"log\")"));
    }

    #[test]
    fn emit_plot_script_rejects_empty() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("empty.csv");
        assert!(matches!(
            emit_plot_script(&[], &csv_path),
            Err(Error::EmptyPoints)
        ));
        assert!(!csv_path.exists());
    }

    #[test]
    fn config_round_trip_from_toml() {
        let text = r#"
seed = 7
output_path = "out/sweep.csv"
snr_db = ["inf", -8, 0.5]
n = [4, 8]
trials_per_point = 10
tag_bits_per_trial = 100

[carrier]
preset = "bluetooth-like"
samples_per_symbol = 8

[tag]
mode = "frequency-shift"
start_offset = "aligned"

[channel]
leak_gain = 0.0
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.snr_db_list, vec![f64::INFINITY, -8.0, 0.5]);
        assert_eq!(cfg.n_list, vec![4, 8]);
        assert_eq!(cfg.tag.start_offset, StartOffset::Fixed(0));
        assert!(matches!(cfg.carrier, CarrierConfig::Fsk(_)));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"
seed = 7
output_path = "out.csv"
snr_db = [0]
n = [4]
trials_per_point = 10
tag_bits_per_trial = 100
frobnicate = true

[carrier]
preset = "bluetooth-like"

[tag]
mode = "frequency-shift"
"#;
        let err = ExperimentConfig::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("frobnicate"), "{err}");
    }

    #[test]
    fn config_rejects_family_mismatched_override() {
        let text = r#"
seed = 7
output_path = "out.csv"
snr_db = [0]
n = [4]
trials_per_point = 10
tag_bits_per_trial = 100

[carrier]
preset = "zigbee-like"
deviation_hz = 1000.0

[tag]
mode = "phase-delay"
"#;
        let err = ExperimentConfig::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("deviation_hz"), "{err}");
    }

    #[test]
    fn config_rejects_mode_family_mismatch() {
        let text = r#"
seed = 7
output_path = "out.csv"
snr_db = [0]
n = [4]
trials_per_point = 10
tag_bits_per_trial = 100

[carrier]
preset = "zigbee-like"

[tag]
mode = "frequency-shift"
"#;
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn statistics_warning_below_threshold() {
        let mut cfg = tiny_fsk_config(vec![0.0], StartOffset::Random);
        cfg.trials_per_point = 4;
        cfg.tag_bits_per_trial = 16;
        assert_eq!(cfg.statistics_warnings().len(), 1);
        cfg.trials_per_point = 100;
        cfg.tag_bits_per_trial = 10;
        assert!(cfg.statistics_warnings().is_empty());
    }
}
