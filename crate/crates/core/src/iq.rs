//! Complex-baseband sample buffers, test-signal sources and spectral analysis.
//!
//! Everything downstream works on [`IqBuffer`]: a uniformly sampled sequence of
//! complex amplitudes with an attached sample rate. Buffers are immutable after
//! construction; all operations return new buffers.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Magic bytes of the interleaved float I/Q dump format.
pub const RWIQ_MAGIC: &[u8; 4] = b"RWIQ";

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl IqBuffer {
    /// Wrap samples with a sample rate, rejecting non-positive rates and
    /// non-finite samples.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::BadSampleRate(sample_rate));
        }
        for (index, s) in samples.iter().enumerate() {
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(Error::NonFiniteSample { index });
            }
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean squared magnitude.
    pub fn power(&self) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let sum: f64 = self.samples.iter().map(|s| s.norm_sqr()).sum();
        Ok(sum / self.samples.len() as f64)
    }

    /// Power spectral density estimate with bins no wider than `resolution_hz`.
    ///
    /// A single full-length transform is aggregated into uniform bins covering
    /// [-fs/2, fs/2), so the summed bin power equals the time-domain power
    /// (rectangular window, Parseval).
    pub fn spectrum(&self, resolution_hz: f64) -> Result<Spectrum> {
        if !(resolution_hz > 0.0) || !resolution_hz.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "spectrum resolution must be positive, got {resolution_hz} Hz"
            )));
        }
        let fs = self.sample_rate;
        let required = (fs / resolution_hz).ceil() as usize;
        if self.len() < required {
            return Err(Error::BufferTooShort {
                required,
                actual: self.len(),
            });
        }

        let n = self.len();
        let mut fft_buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut fft_buf);

        let out_bins = (fs / resolution_hz).ceil() as usize;
        let actual_res = fs / out_bins as f64;
        let norm = 1.0 / (n as f64 * n as f64);
        let native_res = fs / n as f64;

        let mut linear = vec![0.0f64; out_bins];
        for (k, v) in fft_buf.iter().enumerate() {
            // fftshift: second half of the transform holds negative frequencies
            let f = if 2 * k < n {
                k as f64 * native_res
            } else {
                (k as f64 - n as f64) * native_res
            };
            let idx = (((f + fs / 2.0) / actual_res).floor() as isize)
                .clamp(0, out_bins as isize - 1) as usize;
            linear[idx] += v.norm_sqr() * norm;
        }

        let bins = linear
            .into_iter()
            .enumerate()
            .map(|(i, p)| SpectrumBin {
                freq_hz: -fs / 2.0 + (i as f64 + 0.5) * actual_res,
                power_db: 10.0 * p.log10(),
            })
            .collect();
        Ok(Spectrum {
            bins,
            resolution_hz: actual_res,
        })
    }
}

/// One power-spectral-density bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBin {
    pub freq_hz: f64,
    pub power_db: f64,
}

/// Power spectral density over [-fs/2, fs/2), uniform bin width.
#[derive(Debug, Clone)]
pub struct Spectrum {
    bins: Vec<SpectrumBin>,
    resolution_hz: f64,
}

impl Spectrum {
    pub fn bins(&self) -> &[SpectrumBin] {
        &self.bins
    }

    pub fn resolution_hz(&self) -> f64 {
        self.resolution_hz
    }

    /// Bin with the highest power.
    pub fn peak(&self) -> &SpectrumBin {
        self.bins
            .iter()
            .max_by(|a, b| a.power_db.total_cmp(&b.power_db))
            .expect("spectrum always has at least one bin")
    }

    /// Strongest bin whose center frequency lies in [lo_hz, hi_hz].
    pub fn peak_in_band(&self, lo_hz: f64, hi_hz: f64) -> Option<&SpectrumBin> {
        self.bins
            .iter()
            .filter(|b| b.freq_hz >= lo_hz && b.freq_hz <= hi_hz)
            .max_by(|a, b| a.power_db.total_cmp(&b.power_db))
    }

    /// Sum of linear bin powers.
    pub fn total_power(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| 10f64.powf(b.power_db / 10.0))
            .sum()
    }

    pub fn median_power_db(&self) -> f64 {
        let mut v: Vec<f64> = self.bins.iter().map(|b| b.power_db).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v[v.len() / 2]
    }
}

/// Complex exponential test tone at baseband.
///
/// Length is `round(duration_secs * sample_rate)`; sample `i` is
/// `amplitude * exp(j*2*pi*freq_hz*i/sample_rate)`.
pub fn tone(freq_hz: f64, duration_secs: f64, sample_rate: f64, amplitude: f64) -> Result<IqBuffer> {
    if !(sample_rate > 0.0) || !sample_rate.is_finite() {
        return Err(Error::BadSampleRate(sample_rate));
    }
    if !(duration_secs > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tone duration must be positive, got {duration_secs} s"
        )));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "tone amplitude must be finite, got {amplitude}"
        )));
    }
    let nyquist_hz = sample_rate / 2.0;
    if freq_hz.abs() >= nyquist_hz {
        return Err(Error::Aliasing {
            freq_hz,
            nyquist_hz,
        });
    }
    let len = (duration_secs * sample_rate).round() as usize;
    let w = TAU * freq_hz / sample_rate;
    let samples = (0..len)
        .map(|i| Complex64::from_polar(amplitude, w * i as f64))
        .collect();
    IqBuffer::new(samples, sample_rate)
}

/// Element-wise sum of two buffers with matching rates and lengths.
pub fn add(a: &IqBuffer, b: &IqBuffer) -> Result<IqBuffer> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::RateMismatch {
            left: a.sample_rate,
            right: b.sample_rate,
        });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let samples = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| x + y)
        .collect();
    IqBuffer::new(samples, a.sample_rate)
}

/// Serialize as the RWIQ dump format: magic "RWIQ", u32 LE sample rate in Hz,
/// then interleaved little-endian f32 I/Q pairs.
pub fn write_rwiq<W: Write>(buf: &IqBuffer, mut w: W) -> Result<()> {
    let rate = buf.sample_rate.round();
    if (rate - buf.sample_rate).abs() > 1e-6 || rate < 1.0 || rate > u32::MAX as f64 {
        return Err(Error::InvalidConfig(format!(
            "RWIQ stores integer sample rates up to {} Hz; got {}",
            u32::MAX,
            buf.sample_rate
        )));
    }
    w.write_all(RWIQ_MAGIC)?;
    w.write_all(&(rate as u32).to_le_bytes())?;
    for s in &buf.samples {
        w.write_all(&(s.re as f32).to_le_bytes())?;
        w.write_all(&(s.im as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Parse a RWIQ dump produced by [`write_rwiq`].
pub fn read_rwiq<R: Read>(mut r: R) -> Result<IqBuffer> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() < 8 {
        return Err(Error::BadIqFile("file shorter than the 8-byte header".into()));
    }
    if &data[0..4] != RWIQ_MAGIC {
        return Err(Error::BadIqFile(format!(
            "bad magic {:02x?}, expected {:02x?}",
            &data[0..4],
            RWIQ_MAGIC
        )));
    }
    let rate = u32::from_le_bytes([data[4], data[5], data[6], data[7]]);
    if rate == 0 {
        return Err(Error::BadIqFile("sample rate is zero".into()));
    }
    let body = &data[8..];
    if body.len() % 8 != 0 {
        return Err(Error::BadIqFile(format!(
            "payload of {} bytes is not a whole number of I/Q pairs",
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64;
            Complex64::new(re, im)
        })
        .collect();
    IqBuffer::new(samples, rate as f64)
}
