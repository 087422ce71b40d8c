//! Productive-carrier generation: binary GFSK (Bluetooth-like) and OQPSK with
//! optional MSK half-sine shaping (ZigBee-like).
//!
//! # Bit-to-symbol maps
//!
//! FSK frequencies are indexed from the lowest tone upward and carry
//! binary-reflected Gray labels, so adjacent tones differ in one bit:
//!
//! | index k | frequency        | label (n = 2) | label (n = 4) |
//! |---------|------------------|---------------|---------------|
//! | 0       | -(n-1)*deviation | 0             | 00            |
//! | 1       | -(n-3)*deviation | 1             | 01            |
//! | 2       | +(n-3)*deviation |               | 11            |
//! | 3       | +(n-1)*deviation |               | 10            |
//!
//! QPSK quadrants are Gray-indexed counter-clockwise; index `i` sits at phase
//! `2*pi*i/4` *relative to the index-0 symbol*. Even-position bits drive I,
//! odd-position bits drive Q (bit 0 maps to +1):
//!
//! | index i | (bit_i, bit_q) | point (unit amplitude) |
//! |---------|----------------|------------------------|
//! | 0       | (0, 0)         | (+1 + j) / sqrt(2)     |
//! | 1       | (1, 0)         | (-1 + j) / sqrt(2)     |
//! | 2       | (1, 1)         | (-1 - j) / sqrt(2)     |
//! | 3       | (0, 1)         | (+1 - j) / sqrt(2)     |

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::iq::IqBuffer;

/// Sequence of 0/1 values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream(Vec<u8>);

impl BitStream {
    /// Validate that every value is 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        for (index, &value) in bits.iter().enumerate() {
            if value > 1 {
                return Err(Error::BadBit { value, index });
            }
        }
        Ok(Self(bits))
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| b as u8).collect())
    }

    /// Uniformly random bits.
    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random::<bool>() as u8).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of positions where the two streams differ (over the shorter).
    pub fn hamming(&self, other: &BitStream) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Bitwise inverse.
    pub fn complement(&self) -> BitStream {
        Self(self.0.iter().map(|b| b ^ 1).collect())
    }

    pub fn slice(&self, start: usize, len: usize) -> BitStream {
        Self(self.0[start..start + len].to_vec())
    }
}

impl std::ops::Index<usize> for BitStream {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl fmt::Display for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Gray label carried by index `k`.
pub fn gray_label(k: usize) -> usize {
    k ^ (k >> 1)
}

/// Index whose Gray label is `g` (inverse of [`gray_label`]).
pub fn gray_index(mut g: usize) -> usize {
    let mut k = 0;
    while g != 0 {
        k ^= g;
        g >>= 1;
    }
    k
}

/// Binary/ n-ary FSK carrier parameters.
///
/// Tones sit at `(2k - (n-1)) * deviation_hz` for `k` in `0..n`, so the binary
/// alphabet is `{-deviation, +deviation}` and the adjacent spacing is
/// `2 * deviation_hz` for every n.
#[derive(Debug, Clone, PartialEq)]
pub struct FskConfig {
    pub symbol_rate: f64,
    pub deviation_hz: f64,
    pub alphabet_size: usize,
    pub channel_bandwidth_hz: f64,
    /// Bandwidth-time product of the Gaussian frequency pulse; `None` keeps
    /// rectangular pulses.
    pub gaussian_bt: Option<f64>,
    pub samples_per_symbol: usize,
}

impl FskConfig {
    /// Bluetooth-like preset: 1 Msym/s, ±250 kHz tones in a 1 MHz channel
    /// (modulation index 0.5), Gaussian BT 0.5.
    pub fn bluetooth_like() -> Self {
        Self {
            symbol_rate: 1e6,
            deviation_hz: 250e3,
            alphabet_size: 2,
            channel_bandwidth_hz: 1e6,
            gaussian_bt: Some(0.5),
            samples_per_symbol: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "symbol_rate must be positive, got {}",
                self.symbol_rate
            )));
        }
        if !(self.deviation_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "deviation_hz must be positive, got {}",
                self.deviation_hz
            )));
        }
        let n = self.alphabet_size;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "alphabet_size must be an even power of two >= 2 (bit mapping), got {n}"
            )));
        }
        if !(self.channel_bandwidth_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "channel_bandwidth_hz must be positive, got {}",
                self.channel_bandwidth_hz
            )));
        }
        if let Some(bt) = self.gaussian_bt {
            if !(bt > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "gaussian_bt must be positive when set, got {bt}"
                )));
            }
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::InvalidConfig(format!(
                "samples_per_symbol must be >= 2, got {}",
                self.samples_per_symbol
            )));
        }
        if 2.0 * self.deviation_hz * n as f64 >= self.sample_rate() {
            return Err(Error::InvalidConfig(format!(
                "2*deviation*alphabet_size = {} Hz must stay below the sample rate {} Hz",
                2.0 * self.deviation_hz * n as f64,
                self.sample_rate()
            )));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    /// Baseband frequency of alphabet index `k`.
    pub fn alphabet_freq(&self, k: usize) -> f64 {
        (2.0 * k as f64 - (self.alphabet_size as f64 - 1.0)) * self.deviation_hz
    }

    pub fn alphabet_freqs(&self) -> Vec<f64> {
        (0..self.alphabet_size).map(|k| self.alphabet_freq(k)).collect()
    }

    /// (f1 - f0) / channel bandwidth; 0.5 for the Bluetooth-like preset.
    pub fn modulation_index(&self) -> f64 {
        2.0 * self.deviation_hz / self.channel_bandwidth_hz
    }

    /// Mixer offset that translates every tone onto another alphabet tone:
    /// the spacing between index n/2 and index 0.
    pub fn codeword_delta_f(&self) -> f64 {
        self.alphabet_freq(self.alphabet_size / 2) - self.alphabet_freq(0)
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.alphabet_size.trailing_zeros() as usize
    }
}

/// QPSK/OQPSK carrier parameters. One "chip" is one I-or-Q pulse slot; pulses
/// span two chips, so the I/Q symbol rate is half the chip rate and each chip
/// carries one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PskConfig {
    /// Modulation order; 4 for every supported preset.
    pub order: usize,
    pub chip_rate: f64,
    /// Delay the Q stream by one chip (half a pulse).
    pub offset_mode: bool,
    /// Half-sine pulses instead of rectangular ones.
    pub msk_shaping: bool,
    pub samples_per_chip: usize,
    pub amplitude: f64,
}

impl PskConfig {
    /// ZigBee-like preset: offset QPSK with half-sine (MSK) shaping at a
    /// normalized 1 Mchip/s.
    pub fn zigbee_like() -> Self {
        Self {
            order: 4,
            chip_rate: 1e6,
            offset_mode: true,
            msk_shaping: true,
            samples_per_chip: 8,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != 4 {
            return Err(Error::InvalidConfig(format!(
                "only order-4 PSK is supported, got {}",
                self.order
            )));
        }
        if !(self.chip_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "chip_rate must be positive, got {}",
                self.chip_rate
            )));
        }
        if self.samples_per_chip < 2 || self.samples_per_chip % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "samples_per_chip must be an even number >= 2 (chip-midpoint sampling), got {}",
                self.samples_per_chip
            )));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.chip_rate * self.samples_per_chip as f64
    }

    /// Duration of one I+Q symbol in samples (two chips).
    pub fn samples_per_symbol(&self) -> usize {
        2 * self.samples_per_chip
    }

    /// I/Q pair rate: half the chip rate.
    pub fn symbol_rate(&self) -> f64 {
        self.chip_rate / 2.0
    }
}

/// Constellation point for Gray quadrant index `i` (unit amplitude).
pub fn qpsk_point(index: usize) -> Complex64 {
    let (bi, bq) = qpsk_bits(index);
    Complex64::new(
        (1.0 - 2.0 * bi as f64) * FRAC_1_SQRT_2,
        (1.0 - 2.0 * bq as f64) * FRAC_1_SQRT_2,
    )
}

/// Bit pair carried by quadrant index `i`.
pub fn qpsk_bits(index: usize) -> (u8, u8) {
    match index % 4 {
        0 => (0, 0),
        1 => (1, 0),
        2 => (1, 1),
        _ => (0, 1),
    }
}

/// Quadrant index carrying the bit pair `(bit_i, bit_q)`.
pub fn qpsk_index(bit_i: u8, bit_q: u8) -> usize {
    match (bit_i, bit_q) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

/// Continuous-phase FSK/GFSK modulation.
///
/// The instantaneous frequency holds each symbol's alphabet tone (smoothed by
/// the truncated Gaussian pulse when `gaussian_bt` is set) and the phase is the
/// running integral, so there are no phase steps anywhere.
pub fn modulate_fsk(bits: &BitStream, cfg: &FskConfig) -> Result<IqBuffer> {
    cfg.validate()?;
    if bits.is_empty() {
        return Err(Error::EmptyBitStream);
    }
    let bps = cfg.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::BitGrouping {
            bits: bits.len(),
            per_symbol: bps,
        });
    }
    let n_sym = bits.len() / bps;
    let sps = cfg.samples_per_symbol;
    let fs = cfg.sample_rate();

    let mut sym_freq = Vec::with_capacity(n_sym);
    for g in 0..n_sym {
        let mut label = 0usize;
        for b in 0..bps {
            label = (label << 1) | bits[g * bps + b] as usize;
        }
        sym_freq.push(cfg.alphabet_freq(gray_index(label)));
    }

    let inst = match cfg.gaussian_bt {
        None => {
            let mut v = Vec::with_capacity(n_sym * sps);
            for &f in &sym_freq {
                v.extend(std::iter::repeat(f).take(sps));
            }
            v
        }
        Some(bt) => gaussian_frequency_pulse(&sym_freq, sps, bt),
    };

    let scale = TAU / fs;
    let mut phase = 0.0f64;
    let mut samples = Vec::with_capacity(inst.len());
    for f in inst {
        samples.push(Complex64::from_polar(1.0, phase));
        phase += scale * f;
        // keep the accumulator bounded over long streams
        if phase.abs() > 1e6 {
            phase %= TAU;
        }
    }
    IqBuffer::new(samples, fs)
}

/// Smooth a per-symbol frequency plan with a truncated Gaussian spanning three
/// symbols. The kernel is normalized to unit sum, so runs of equal symbols
/// settle exactly on the alphabet tone.
fn gaussian_frequency_pulse(sym_freq: &[f64], sps: usize, bt: f64) -> Vec<f64> {
    let sigma_samples = (2f64.ln()).sqrt() / (TAU * bt) * sps as f64;
    let half = ((1.5 * sps as f64).round() as usize).max(1);
    let mut kernel = Vec::with_capacity(2 * half + 1);
    for m in -(half as isize)..=(half as isize) {
        let x = m as f64 / sigma_samples;
        kernel.push((-0.5 * x * x).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }

    // held frequency sequence padded with edge replication
    let len = sym_freq.len() * sps;
    let mut held = Vec::with_capacity(len + 2 * half);
    held.extend(std::iter::repeat(sym_freq[0]).take(half));
    for &f in sym_freq {
        held.extend(std::iter::repeat(f).take(sps));
    }
    held.extend(std::iter::repeat(*sym_freq.last().unwrap()).take(half));

    (0..len)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(m, k)| k * held[i + m])
                .sum()
        })
        .collect()
}

/// OQPSK/QPSK modulation with rectangular or half-sine (MSK) pulses.
///
/// Even-position bits drive I pulses, odd-position bits drive Q pulses; with
/// `offset_mode` the Q stream lags by one chip so only one rail can change
/// polarity at any pulse boundary. Offset streams carry one extra trailing
/// chip so the final Q pulse completes.
pub fn modulate_oqpsk(bits: &BitStream, cfg: &PskConfig) -> Result<IqBuffer> {
    cfg.validate()?;
    if bits.is_empty() {
        return Err(Error::EmptyBitStream);
    }
    if bits.len() % 2 != 0 {
        return Err(Error::OddBitCount(bits.len()));
    }
    let spc = cfg.samples_per_chip;
    let pulse = 2 * spc;
    let n_pairs = bits.len() / 2;
    let q_shift = if cfg.offset_mode { spc } else { 0 };
    let total = n_pairs * pulse + q_shift;

    // per-rail pulse amplitude keeping |s| = amplitude for the offset cases
    let rail_amp = if cfg.msk_shaping {
        cfg.amplitude
    } else {
        cfg.amplitude * FRAC_1_SQRT_2
    };

    let mut i_rail = vec![0.0f64; total];
    let mut q_rail = vec![0.0f64; total];
    for p in 0..n_pairs {
        let a = (1.0 - 2.0 * bits[2 * p] as f64) * rail_amp;
        let b = (1.0 - 2.0 * bits[2 * p + 1] as f64) * rail_amp;
        let i_start = p * pulse;
        let q_start = p * pulse + q_shift;
        for j in 0..pulse {
            let shape = if cfg.msk_shaping {
                (PI * j as f64 / pulse as f64).sin()
            } else {
                1.0
            };
            i_rail[i_start + j] += a * shape;
            q_rail[q_start + j] += b * shape;
        }
    }

    let samples = i_rail
        .into_iter()
        .zip(q_rail)
        .map(|(i, q)| Complex64::new(i, q))
        .collect();
    IqBuffer::new(samples, cfg.sample_rate())
}

/// Sample indices of symbol boundaries: `k * samples_per_symbol` for
/// `k = 0..=num_symbols`.
pub fn symbol_boundaries(samples_per_symbol: usize, num_symbols: usize) -> Vec<usize> {
    (0..=num_symbols).map(|k| k * samples_per_symbol).collect()
}

/// Carrier family selector shared by the tag, receiver and sweep layers.
#[derive(Debug, Clone, PartialEq)]
pub enum CarrierConfig {
    Fsk(FskConfig),
    Psk(PskConfig),
}

impl CarrierConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            CarrierConfig::Fsk(c) => c.validate(),
            CarrierConfig::Psk(c) => c.validate(),
        }
    }

    pub fn sample_rate(&self) -> f64 {
        match self {
            CarrierConfig::Fsk(c) => c.sample_rate(),
            CarrierConfig::Psk(c) => c.sample_rate(),
        }
    }

    /// Samples spanned by one carrier symbol (an I+Q pair for PSK).
    pub fn samples_per_symbol(&self) -> usize {
        match self {
            CarrierConfig::Fsk(c) => c.samples_per_symbol,
            CarrierConfig::Psk(c) => c.samples_per_symbol(),
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self {
            CarrierConfig::Fsk(c) => c.bits_per_symbol(),
            CarrierConfig::Psk(_) => 2,
        }
    }

    pub fn samples_per_bit(&self) -> usize {
        self.samples_per_symbol() / self.bits_per_symbol()
    }

    pub fn symbol_rate(&self) -> f64 {
        match self {
            CarrierConfig::Fsk(c) => c.symbol_rate,
            CarrierConfig::Psk(c) => c.symbol_rate(),
        }
    }

    pub fn modulate(&self, bits: &BitStream) -> Result<IqBuffer> {
        match self {
            CarrierConfig::Fsk(c) => modulate_fsk(bits, c),
            CarrierConfig::Psk(c) => modulate_oqpsk(bits, c),
        }
    }
}

/// Named carrier presets selectable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    BluetoothLike,
    ZigbeeLike,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::BluetoothLike, Preset::ZigbeeLike];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::BluetoothLike => "bluetooth-like",
            Preset::ZigbeeLike => "zigbee-like",
        }
    }

    pub fn config(&self) -> CarrierConfig {
        match self {
            Preset::BluetoothLike => CarrierConfig::Fsk(FskConfig::bluetooth_like()),
            Preset::ZigbeeLike => CarrierConfig::Psk(PskConfig::zigbee_like()),
        }
    }

    /// Human-readable parameter table, one `key: value` per line.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let cfg = self.config();
        out.push_str(&format!("preset: {}\n", self.name()));
        match &cfg {
            CarrierConfig::Fsk(c) => {
                out.push_str("family: binary GFSK\n");
                out.push_str(&format!("symbol_rate_hz: {}\n", c.symbol_rate));
                out.push_str(&format!("deviation_hz: {}\n", c.deviation_hz));
                out.push_str(&format!("alphabet_size: {}\n", c.alphabet_size));
                out.push_str(&format!(
                    "alphabet_freqs_hz: {:?}\n",
                    c.alphabet_freqs()
                ));
                out.push_str(&format!(
                    "channel_bandwidth_hz: {}\n",
                    c.channel_bandwidth_hz
                ));
                out.push_str(&format!("modulation_index: {}\n", c.modulation_index()));
                match c.gaussian_bt {
                    Some(bt) => out.push_str(&format!("gaussian_bt: {bt}\n")),
                    None => out.push_str("gaussian_bt: none (rectangular)\n"),
                }
                out.push_str(&format!(
                    "samples_per_symbol: {}\n",
                    c.samples_per_symbol
                ));
                out.push_str(&format!("codeword_delta_f_hz: {}\n", c.codeword_delta_f()));
            }
            CarrierConfig::Psk(c) => {
                out.push_str("family: OQPSK\n");
                out.push_str(&format!("order: {}\n", c.order));
                out.push_str(&format!("chip_rate_hz: {}\n", c.chip_rate));
                out.push_str(&format!("symbol_rate_hz: {}\n", c.symbol_rate()));
                out.push_str(&format!("offset_mode: {}\n", c.offset_mode));
                out.push_str(&format!("msk_shaping: {}\n", c.msk_shaping));
                out.push_str(&format!("samples_per_chip: {}\n", c.samples_per_chip));
                out.push_str(&format!("amplitude: {}\n", c.amplitude));
            }
        }
        out.push_str(&format!("sample_rate_hz: {}\n", cfg.sample_rate()));
        for n in [1usize, 4, 8, 16] {
            out.push_str(&format!(
                "tag_data_rate_at_n{}: {} bit/s\n",
                n,
                cfg.symbol_rate() / n as f64
            ));
        }
        out
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bluetooth-like" => Ok(Preset::BluetoothLike),
            "zigbee-like" => Ok(Preset::ZigbeeLike),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset {other:?}; expected one of: bluetooth-like, zigbee-like"
            ))),
        }
    }
}
