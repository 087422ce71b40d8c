//! Additive white Gaussian noise channel with the SNR referenced to the
//! unmodified carrier, plus optional direct-path carrier leakage.
//!
//! Randomness comes from ChaCha12 streams keyed by SHA-256 of a root seed,
//! a domain label and caller-chosen indices, so parallel Monte Carlo trials
//! draw from disjoint, reproducible substreams.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::iq::IqBuffer;

/// Channel impairment description.
///
/// `snr_db` may be `f64::INFINITY` for a noise-free channel. The noise power
/// is keyed to the power of the *carrier reference* passed to [`apply`], not
/// to the (weaker) backscattered signal itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub snr_db: f64,
    /// Direct-path carrier added to the backscatter path, in [0, 1].
    pub leak_gain: f64,
    pub seed: u64,
}

impl ChannelModel {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            leak_gain: 0.0,
            seed,
        }
    }

    pub fn noiseless() -> Self {
        Self::new(f64::INFINITY, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() {
            return Err(Error::InvalidConfig("snr_db is NaN".into()));
        }
        if !(0.0..=1.0).contains(&self.leak_gain) {
            return Err(Error::InvalidConfig(format!(
                "leak_gain must lie in [0, 1], got {}",
                self.leak_gain
            )));
        }
        Ok(())
    }
}

/// Derive a 32-byte seed for a named substream of a root seed.
pub fn substream_seed(root: u64, domain: &str, indices: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(domain.as_bytes());
    hasher.update(root.to_le_bytes());
    for ix in indices {
        hasher.update(ix.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    seed
}

/// ChaCha12 generator over a named substream of a root seed.
pub fn substream_rng(root: u64, domain: &str, indices: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(substream_seed(root, domain, indices))
}

/// Fold a named substream down to a u64 (for nesting seeds).
pub fn substream_u64(root: u64, domain: &str, indices: &[u64]) -> u64 {
    let seed = substream_seed(root, domain, indices);
    u64::from_le_bytes(seed[0..8].try_into().unwrap())
}

/// Impair a signal: `out = buf + leak_gain * carrier_ref + noise`, where the
/// noise is circularly symmetric complex Gaussian with per-sample variance
/// `power(carrier_ref) / 10^(snr_db/10)`.
///
/// Identical models and inputs produce bit-identical outputs.
pub fn apply(buf: &IqBuffer, carrier_ref: &IqBuffer, model: &ChannelModel) -> Result<IqBuffer> {
    model.validate()?;
    if buf.sample_rate() != carrier_ref.sample_rate() {
        return Err(Error::RateMismatch {
            left: buf.sample_rate(),
            right: carrier_ref.sample_rate(),
        });
    }

    let mut samples = buf.samples().to_vec();

    if model.leak_gain > 0.0 {
        if carrier_ref.len() != buf.len() {
            return Err(Error::LengthMismatch {
                left: buf.len(),
                right: carrier_ref.len(),
            });
        }
        for (s, c) in samples.iter_mut().zip(carrier_ref.samples()) {
            *s += model.leak_gain * c;
        }
    }

    if model.snr_db.is_finite() {
        if carrier_ref.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let ref_power = carrier_ref.power()?;
        if !(ref_power > 0.0) {
            return Err(Error::InvalidConfig(
                "carrier reference power must be positive for finite SNR".into(),
            ));
        }
        let noise_power = ref_power / 10f64.powf(model.snr_db / 10.0);
        let sigma = (noise_power / 2.0).sqrt();
        let mut rng = substream_rng(model.seed, "tagwave.channel.noise", &[]);
        for s in samples.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(sigma * re, sigma * im);
        }
    }

    IqBuffer::new(samples, buf.sample_rate())
}
