//! Commodity-style receivers: per-symbol FSK tone correlation, OQPSK midpoint
//! slicing, and tag-bit recovery by majority vote over flipped carrier bits.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::carrier::{
    gray_label, qpsk_index, BitStream, CarrierConfig, FskConfig, PskConfig,
};
use crate::error::{Error, Result};
use crate::iq::IqBuffer;

/// Default preamble a tag prepends to its payload so the receiver can find the
/// embedding offset.
pub const TAG_PREAMBLE: [u8; 8] = [1, 0, 1, 1, 0, 0, 1, 0];

/// Default minimum preamble agreement for a successful offset sync.
pub const DEFAULT_SYNC_FLOOR: f64 = 0.75;

/// Demodulated carrier bits with a per-bit decision confidence in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DemodResult {
    pub bits: BitStream,
    pub confidences: Vec<f64>,
}

/// Recovered tag bits plus the per-bit flipped-carrier-bit fractions that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TagDecodeResult {
    pub tag_bits: BitStream,
    /// Fraction of carrier bits flipped inside each tag-bit window.
    pub flip_fractions: Vec<f64>,
    /// Bit offset of the first decode window in the demodulated stream.
    pub offset_bits: usize,
}

/// Quadrant index of a constellation sample under the documented Gray map.
pub fn qpsk_slice(z: Complex64) -> usize {
    qpsk_index((z.re < 0.0) as u8, (z.im < 0.0) as u8)
}

/// Per-symbol noncoherent FSK demodulation: correlate each symbol against the
/// alphabet tones that fall inside the channel bandwidth and pick the largest
/// magnitude. Mixer images beyond the channel edges have no correlator to
/// land on.
pub fn demodulate_fsk(buf: &IqBuffer, cfg: &FskConfig) -> Result<DemodResult> {
    cfg.validate()?;
    let sps = cfg.samples_per_symbol;
    if buf.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if buf.len() % sps != 0 {
        return Err(Error::LengthMismatch {
            left: buf.len(),
            right: buf.len() / sps * sps,
        });
    }
    let fs = cfg.sample_rate();
    let half_band = cfg.channel_bandwidth_hz / 2.0;
    let in_band: Vec<(usize, f64)> = (0..cfg.alphabet_size)
        .map(|k| (k, cfg.alphabet_freq(k)))
        .filter(|(_, f)| f.abs() <= half_band)
        .collect();
    if in_band.is_empty() {
        return Err(Error::InvalidConfig(
            "no alphabet tone lies inside the channel bandwidth".into(),
        ));
    }

    // symbol-local conjugate tone tables
    let tables: Vec<Vec<Complex64>> = in_band
        .iter()
        .map(|(_, f)| {
            let w = -TAU * f / fs;
            (0..sps)
                .map(|j| Complex64::from_polar(1.0, w * j as f64))
                .collect()
        })
        .collect();

    let bps = cfg.bits_per_symbol();
    let n_sym = buf.len() / sps;
    let mut bits = Vec::with_capacity(n_sym * bps);
    let mut confidences = Vec::with_capacity(n_sym * bps);
    for s in 0..n_sym {
        let span = &buf.samples()[s * sps..(s + 1) * sps];
        let mut best = (0usize, 0.0f64);
        let mut second = 0.0f64;
        for (t, table) in tables.iter().enumerate() {
            let corr: Complex64 = span.iter().zip(table).map(|(x, c)| x * c).sum();
            let mag = corr.norm();
            if mag > best.1 {
                second = best.1;
                best = (t, mag);
            } else if mag > second {
                second = mag;
            }
        }
        let k = in_band[best.0].0;
        let label = gray_label(k);
        for b in (0..bps).rev() {
            bits.push(((label >> b) & 1) as u8);
        }
        let conf = if best.1 + second > 0.0 {
            (best.1 - second) / (best.1 + second)
        } else {
            0.0
        };
        confidences.extend(std::iter::repeat(conf).take(bps));
    }
    Ok(DemodResult {
        bits: BitStream::from_bits(bits)?,
        confidences,
    })
}

/// OQPSK demodulation by sampling each rail at its chip midpoint (bit `m`
/// reads sample `m*spc + spc/2`; the rails stay orthogonal because I pulses
/// are real and Q pulses imaginary) and slicing the sign.
pub fn demodulate_oqpsk(buf: &IqBuffer, cfg: &PskConfig) -> Result<DemodResult> {
    cfg.validate()?;
    let spc = cfg.samples_per_chip;
    let pulse = 2 * spc;
    let q_shift = if cfg.offset_mode { spc } else { 0 };
    if buf.len() < pulse + q_shift {
        return Err(Error::BufferTooShort {
            required: pulse + q_shift,
            actual: buf.len(),
        });
    }
    if (buf.len() - q_shift) % pulse != 0 {
        return Err(Error::LengthMismatch {
            left: buf.len(),
            right: (buf.len() - q_shift) / pulse * pulse + q_shift,
        });
    }
    let n_pairs = (buf.len() - q_shift) / pulse;
    let samples = buf.samples();

    let mut bits = Vec::with_capacity(2 * n_pairs);
    let mut raw_conf = Vec::with_capacity(2 * n_pairs);
    for p in 0..n_pairs {
        let i_val = samples[2 * p * spc + spc / 2].re;
        let q_val = samples[(2 * p + 1) * spc + spc / 2].im;
        bits.push((i_val < 0.0) as u8);
        bits.push((q_val < 0.0) as u8);
        raw_conf.push(i_val.abs());
        raw_conf.push(q_val.abs());
    }
    let max = raw_conf.iter().cloned().fold(0.0f64, f64::max);
    let confidences = if max > 0.0 {
        raw_conf.into_iter().map(|c| c / max).collect()
    } else {
        raw_conf
    };
    Ok(DemodResult {
        bits: BitStream::from_bits(bits)?,
        confidences,
    })
}

/// Family dispatch for the demodulators.
pub fn demodulate(buf: &IqBuffer, cfg: &CarrierConfig) -> Result<DemodResult> {
    match cfg {
        CarrierConfig::Fsk(c) => demodulate_fsk(buf, c),
        CarrierConfig::Psk(c) => demodulate_oqpsk(buf, c),
    }
}

/// Majority-vote tag decoding: over each window of `n_bits_per_tag_bit`
/// demodulated bits, the flip fraction is the share of bits differing from
/// the known carrier bits, and the tag bit is 1 iff that fraction exceeds
/// one half (a tie decodes as 0). Decodes as many whole windows as fit.
pub fn decode_tag_bits(
    rx: &DemodResult,
    carrier_bits: &BitStream,
    n_bits_per_tag_bit: usize,
    offset_bits: usize,
) -> Result<TagDecodeResult> {
    if n_bits_per_tag_bit == 0 {
        return Err(Error::InvalidConfig(
            "n_bits_per_tag_bit must be >= 1".into(),
        ));
    }
    let usable = rx.bits.len().min(carrier_bits.len());
    if offset_bits + n_bits_per_tag_bit > usable {
        return Err(Error::WindowOverrun {
            required: offset_bits + n_bits_per_tag_bit,
            available: usable,
        });
    }
    let windows = (usable - offset_bits) / n_bits_per_tag_bit;
    let mut tag_bits = Vec::with_capacity(windows);
    let mut flip_fractions = Vec::with_capacity(windows);
    for w in 0..windows {
        let start = offset_bits + w * n_bits_per_tag_bit;
        let flips = (start..start + n_bits_per_tag_bit)
            .filter(|&i| rx.bits[i] != carrier_bits[i])
            .count();
        let fraction = flips as f64 / n_bits_per_tag_bit as f64;
        flip_fractions.push(fraction);
        tag_bits.push((fraction > 0.5) as u8);
    }
    Ok(TagDecodeResult {
        tag_bits: BitStream::from_bits(tag_bits)?,
        flip_fractions,
        offset_bits,
    })
}

/// Agreement between decoded windows at a candidate offset and an expected
/// preamble: `1 - mean |flip_fraction - preamble_bit|`.
///
/// Unlike hard bit agreement this is strictly peaked at the true offset: a
/// misaligned window mixes neighboring tag bits, which drags its flip
/// fraction toward one half and lowers the score even when the majority vote
/// still lands on the right bit.
fn preamble_agreement(decoded: &TagDecodeResult, preamble: &BitStream) -> f64 {
    let n = preamble.len().min(decoded.flip_fractions.len());
    let err: f64 = (0..n)
        .map(|i| (decoded.flip_fractions[i] - preamble[i] as f64).abs())
        .sum();
    1.0 - err / n as f64
}

/// Find the bit offset of an embedded preamble by scanning every candidate in
/// `[0, n_bits_per_tag_bit * preamble_len)` and maximizing preamble agreement;
/// ties break toward the smallest offset. Uses [`DEFAULT_SYNC_FLOOR`].
pub fn search_offset(
    rx: &DemodResult,
    carrier_bits: &BitStream,
    n_bits_per_tag_bit: usize,
    preamble: &BitStream,
) -> Result<usize> {
    search_offset_with_floor(rx, carrier_bits, n_bits_per_tag_bit, preamble, DEFAULT_SYNC_FLOOR)
}

/// [`search_offset`] with an explicit agreement floor; candidates whose best
/// agreement stays below the floor produce a sync-failure error.
pub fn search_offset_with_floor(
    rx: &DemodResult,
    carrier_bits: &BitStream,
    n_bits_per_tag_bit: usize,
    preamble: &BitStream,
    floor: f64,
) -> Result<usize> {
    if preamble.is_empty() {
        return Err(Error::EmptyBitStream);
    }
    let usable = rx.bits.len().min(carrier_bits.len());
    let span = n_bits_per_tag_bit * preamble.len();
    if span > usable {
        return Err(Error::WindowOverrun {
            required: span,
            available: usable,
        });
    }
    let max_candidate = span.min(usable - span + 1);

    let mut best_offset = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for candidate in 0..max_candidate {
        let decoded = decode_tag_bits(rx, carrier_bits, n_bits_per_tag_bit, candidate)?;
        if decoded.flip_fractions.len() < preamble.len() {
            break;
        }
        let score = preamble_agreement(&decoded, preamble);
        if score > best_score {
            best_score = score;
            best_offset = candidate;
        }
    }
    if best_score < floor {
        return Err(Error::SyncFailure {
            best: best_score,
            floor,
        });
    }
    Ok(best_offset)
}
