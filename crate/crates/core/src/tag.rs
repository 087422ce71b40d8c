//! Tag-side reflection transforms.
//!
//! A tag never decodes the carrier: it only scales the reflected wave by a
//! reflection coefficient, runs it through a mixer (spreading every frequency
//! f into f ± delta_f at half amplitude each) or rotates its phase by a
//! quarter-turn multiple, switching state every N carrier symbols to embed its
//! own bits. Transitions happen at sample granularity with no knowledge of the
//! carrier's bit content or symbol boundaries.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::carrier::BitStream;
use crate::error::{Error, Result};
use crate::iq::IqBuffer;

/// Complex impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impedance {
    pub resistance: f64,
    pub reactance: f64,
}

impl Impedance {
    pub fn new(resistance: f64, reactance: f64) -> Self {
        Self {
            resistance,
            reactance,
        }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.resistance, self.reactance)
    }
}

/// Reflection coefficient of a tag load `z_t` against antenna impedance `z_a`:
/// `(Z_T - conj(Z_A)) / (Z_T + Z_A)`.
///
/// Zero when the load conjugate-matches the antenna (maximum power transfer);
/// magnitude never exceeds 1 for passive loads.
pub fn reflection_coefficient(z_t: Impedance, z_a: Impedance) -> Result<Complex64> {
    if !(z_a.resistance > 0.0) {
        return Err(Error::BadAntennaResistance(z_a.resistance));
    }
    let zt = z_t.as_complex();
    let za = z_a.as_complex();
    let denom = zt + za;
    if denom.norm() < 1e-12 {
        return Err(Error::DegenerateDenominator {
            magnitude: denom.norm(),
        });
    }
    Ok((zt - za.conj()) / denom)
}

/// Scale every sample by a reflection coefficient. Rejects |gamma| > 1: a
/// passive tag cannot amplify.
pub fn reflect(buf: &IqBuffer, gamma: Complex64) -> Result<IqBuffer> {
    if gamma.norm() > 1.0 + 1e-12 {
        return Err(Error::ReflectionGain(gamma.norm()));
    }
    let samples = buf.samples().iter().map(|s| s * gamma).collect();
    IqBuffer::new(samples, buf.sample_rate())
}

/// Multiply by a real cosine at `delta_f`, spreading every input frequency f
/// into images at f + delta_f and f - delta_f, each at half amplitude.
///
/// Both images stay in the signal; whichever falls outside the receiver's
/// channel is ignored by its correlators downstream.
pub fn mix(buf: &IqBuffer, delta_f: f64) -> Result<IqBuffer> {
    let fs = buf.sample_rate();
    if !(0.0..fs / 2.0).contains(&delta_f) {
        return Err(Error::Aliasing {
            freq_hz: delta_f,
            nyquist_hz: fs / 2.0,
        });
    }
    let w = TAU * delta_f / fs;
    let samples = buf
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| s * (w * i as f64).cos())
        .collect();
    IqBuffer::new(samples, fs)
}

/// Constant phase rotation by `-2*pi*k/M`, the baseband equivalent of delaying
/// the passband wave by k/M of a carrier period. Magnitudes are untouched.
pub fn phase_delay(buf: &IqBuffer, k: usize, m: usize) -> Result<IqBuffer> {
    if m == 0 || k >= m {
        return Err(Error::PhaseIndex { k, m });
    }
    let rot = rotation(k, m);
    let samples = buf.samples().iter().map(|s| s * rot).collect();
    IqBuffer::new(samples, buf.sample_rate())
}

/// Unit rotation by `-2*pi*k/M`; quarter turns use exact constants so the
/// k = M/2 case is a pure sign flip and magnitudes survive bit-exactly.
fn rotation(k: usize, m: usize) -> Complex64 {
    if (4 * k) % m == 0 {
        match (4 * k / m) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        }
    } else {
        Complex64::from_polar(1.0, -TAU * k as f64 / m as f64)
    }
}

/// How the tag marks a 1 bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    /// Toggle the mixer between delta_f and 0 (FSK-like carriers).
    FrequencyShift,
    /// Toggle the phase rotation between two quarter-turn indices (OQPSK-like
    /// carriers).
    PhaseDelay,
}

impl EmbedMode {
    pub fn name(&self) -> &'static str {
        match self {
            EmbedMode::FrequencyShift => "frequency-shift",
            EmbedMode::PhaseDelay => "phase-delay",
        }
    }
}

/// Embedding alignment relative to the carrier's symbol grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartOffset {
    /// Embedding begins at this sample index.
    Fixed(usize),
    /// Resolved to a uniform sample in [0, N * samples_per_symbol) per trial;
    /// models a tag that cannot see symbol boundaries.
    Random,
}

/// Tag behavior: embedding mode, redundancy N, switch states and alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct TagProfile {
    pub mode: EmbedMode,
    /// Carrier symbols spanned by one tag bit.
    pub symbols_per_bit: usize,
    /// Mixer offset for frequency-shift mode.
    pub delta_f_hz: f64,
    /// Quarter-turn indices for the off/on switch states of phase-delay mode;
    /// `[0, 2]` is the 0-or-180-degrees convention.
    pub phase_set: [usize; 2],
    pub start_offset: StartOffset,
    /// Reflection coefficient while marking a 1.
    pub gamma_on: Complex64,
    /// Reflection coefficient while marking a 0.
    pub gamma_off: Complex64,
}

impl TagProfile {
    pub fn frequency_shift(symbols_per_bit: usize, delta_f_hz: f64) -> Self {
        Self {
            mode: EmbedMode::FrequencyShift,
            symbols_per_bit,
            delta_f_hz,
            phase_set: [0, 2],
            start_offset: StartOffset::Fixed(0),
            gamma_on: Complex64::new(1.0, 0.0),
            gamma_off: Complex64::new(1.0, 0.0),
        }
    }

    pub fn phase_delay(symbols_per_bit: usize) -> Self {
        Self {
            mode: EmbedMode::PhaseDelay,
            symbols_per_bit,
            delta_f_hz: 0.0,
            phase_set: [0, 2],
            start_offset: StartOffset::Fixed(0),
            gamma_on: Complex64::new(1.0, 0.0),
            gamma_off: Complex64::new(1.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbols_per_bit == 0 {
            return Err(Error::InvalidConfig(
                "symbols_per_bit (N) must be >= 1".into(),
            ));
        }
        if self.phase_set[0] != 0 {
            return Err(Error::InvalidConfig(
                "phase_set must start with 0 (the pass-through state)".into(),
            ));
        }
        if self.phase_set[1] == 0 || self.phase_set[1] > 3 {
            return Err(Error::InvalidConfig(format!(
                "phase_set on-state must be a quarter-turn index in 1..=3, got {}",
                self.phase_set[1]
            )));
        }
        if self.mode == EmbedMode::FrequencyShift && !(self.delta_f_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frequency-shift mode needs delta_f_hz > 0, got {}",
                self.delta_f_hz
            )));
        }
        for (name, g) in [("gamma_on", self.gamma_on), ("gamma_off", self.gamma_off)] {
            if g.norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "|{name}| = {} exceeds 1 (passive tag)",
                    g.norm()
                )));
            }
        }
        Ok(())
    }

    /// Tag data rate at a given carrier symbol rate: symbol_rate / N.
    pub fn tag_data_rate(&self, symbol_rate: f64) -> f64 {
        symbol_rate / self.symbols_per_bit as f64
    }

    pub fn with_offset(mut self, samples: usize) -> Self {
        self.start_offset = StartOffset::Fixed(samples);
        self
    }

    pub fn with_random_offset(mut self) -> Self {
        self.start_offset = StartOffset::Random;
        self
    }

    /// Resolve a random start offset to a concrete sample index, uniform over
    /// one tag-bit window. Fixed offsets pass through unchanged.
    pub fn resolve_offset<R: Rng>(
        &self,
        samples_per_symbol: usize,
        rng: &mut R,
    ) -> (Self, usize) {
        let samples = match self.start_offset {
            StartOffset::Fixed(s) => s,
            StartOffset::Random => {
                rng.random_range(0..self.symbols_per_bit * samples_per_symbol)
            }
        };
        (self.clone().with_offset(samples), samples)
    }
}

/// Embed tag bits into a carrier: each bit owns N carrier symbols worth of
/// samples starting at the profile's offset; a 1 switches the tag's transform
/// on (mixer or phase rotation, scaled by gamma_on), a 0 leaves the signal as
/// is apart from gamma_off. Samples outside the embedding span pass through.
pub fn embed(
    buf: &IqBuffer,
    tag_bits: &BitStream,
    profile: &TagProfile,
    samples_per_symbol: usize,
) -> Result<IqBuffer> {
    profile.validate()?;
    let offset = match profile.start_offset {
        StartOffset::Fixed(s) => s,
        StartOffset::Random => return Err(Error::OffsetUnresolved),
    };
    let window = profile.symbols_per_bit * samples_per_symbol;
    let required = offset + tag_bits.len() * window;
    if required > buf.len() {
        return Err(Error::BufferTooShort {
            required,
            actual: buf.len(),
        });
    }
    if profile.mode == EmbedMode::FrequencyShift && profile.delta_f_hz >= buf.sample_rate() / 2.0 {
        return Err(Error::Aliasing {
            freq_hz: profile.delta_f_hz,
            nyquist_hz: buf.sample_rate() / 2.0,
        });
    }

    let fs = buf.sample_rate();
    let w = TAU * profile.delta_f_hz / fs;
    let rot_on = rotation(profile.phase_set[1], 4);

    let mut samples = buf.samples().to_vec();
    for (bit_idx, start) in (offset..).step_by(window).take(tag_bits.len()).enumerate() {
        let on = tag_bits[bit_idx] == 1;
        for (j, s) in samples[start..start + window].iter_mut().enumerate() {
            *s = if on {
                let transformed = match profile.mode {
                    // mixer clock runs on global buffer time
                    EmbedMode::FrequencyShift => *s * (w * (start + j) as f64).cos(),
                    EmbedMode::PhaseDelay => *s * rot_on,
                };
                transformed * profile.gamma_on
            } else {
                *s * profile.gamma_off
            };
        }
    }
    IqBuffer::new(samples, fs)
}

/// A contiguous above-threshold run of smoothed signal magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    pub start_us: f64,
    pub duration_us: f64,
}

/// Detect bursts the way a tag's envelope detector would: rectify, smooth with
/// a centered moving average of width `smoothing_us`, threshold, and report
/// maximal above-threshold runs.
pub fn envelope_detect(buf: &IqBuffer, threshold: f64, smoothing_us: f64) -> Result<Vec<Burst>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "envelope threshold must be positive, got {threshold}"
        )));
    }
    if !(smoothing_us > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "smoothing window must be positive, got {smoothing_us} us"
        )));
    }
    let fs = buf.sample_rate();
    let window = ((smoothing_us * 1e-6 * fs).round() as usize).max(1);
    let mags: Vec<f64> = buf.samples().iter().map(|s| s.norm()).collect();
    let n = mags.len();
    let half = window / 2;

    // prefix sums for O(1) centered averages with edge truncation
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &m in &mags {
        prefix.push(prefix.last().unwrap() + m);
    }
    let env = |i: usize| -> f64 {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        (prefix[hi] - prefix[lo]) / (hi - lo) as f64
    };

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..n {
        let above = env(i) > threshold;
        match (above, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        runs.push((s, n));
    }

    // features narrower than the smoothing window are below the detector's
    // resolution: close sub-window gaps (threshold chatter at noisy edges)
    // and drop sub-window blips
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (start, end) in runs {
        match merged.last_mut() {
            Some((_, last_end)) if start - *last_end < window => *last_end = end,
            _ => merged.push((start, end)),
        }
    }

    let us_per_sample = 1e6 / fs;
    Ok(merged
        .into_iter()
        .filter(|(start, end)| end - start >= window)
        .map(|(start, end)| Burst {
            start_us: start as f64 * us_per_sample,
            duration_us: (end - start) as f64 * us_per_sample,
        })
        .collect())
}

/// Packet-length control alphabet: each entry maps a burst duration to a
/// control bit. Durations must be strictly increasing and separated by at
/// least twice the detector resolution so nearest-duration decode is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSymbolMap {
    entries: Vec<(f64, u8)>,
}

impl ControlSymbolMap {
    pub fn new(entries: Vec<(f64, u8)>, detector_resolution_us: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidConfig("control map has no entries".into()));
        }
        for (duration, bit) in &entries {
            if !(duration > &0.0) {
                return Err(Error::InvalidConfig(format!(
                    "control duration must be positive, got {duration} us"
                )));
            }
            if *bit > 1 {
                return Err(Error::BadBit {
                    value: *bit,
                    index: 0,
                });
            }
        }
        for pair in entries.windows(2) {
            let gap = pair[1].0 - pair[0].0;
            if gap <= 0.0 {
                return Err(Error::InvalidConfig(
                    "control durations must be strictly increasing".into(),
                ));
            }
            if gap < 2.0 * detector_resolution_us {
                return Err(Error::InvalidConfig(format!(
                    "control durations {} and {} us are closer than twice the detector \
                     resolution ({} us)",
                    pair[0].0, pair[1].0, detector_resolution_us
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, u8)] {
        &self.entries
    }

    /// Control bit of the entry nearest to a measured duration.
    pub fn decode_duration(&self, duration_us: f64) -> u8 {
        self.entries
            .iter()
            .min_by(|a, b| {
                (a.0 - duration_us)
                    .abs()
                    .total_cmp(&(b.0 - duration_us).abs())
            })
            .map(|e| e.1)
            .unwrap()
    }

    pub fn decode(&self, bursts: &[Burst]) -> BitStream {
        BitStream::from_bits(
            bursts
                .iter()
                .map(|b| self.decode_duration(b.duration_us))
                .collect(),
        )
        .expect("control bits are 0/1 by construction")
    }
}
