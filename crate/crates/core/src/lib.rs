//! Complex-baseband simulation of backscatter tags riding on productive
//! commodity carriers.
//!
//! A tag reflects an existing FSK/GFSK (Bluetooth-like) or OQPSK/MSK
//! (ZigBee-like) transmission and translates its codewords in place — mixing
//! tones onto neighboring alphabet frequencies or rotating the constellation
//! by half a turn — to embed its own bits at N carrier symbols per tag bit.
//! A commodity-style receiver demodulates as usual and recovers the tag bits
//! by majority vote over flipped carrier bits. The [`sweep`] module wires the
//! stages into reproducible Monte Carlo BER-vs-SNR experiments.

pub mod carrier;
pub mod channel;
pub mod error;
pub mod iq;
pub mod receiver;
pub mod sweep;
pub mod tag;

pub use carrier::{BitStream, CarrierConfig, FskConfig, Preset, PskConfig};
pub use channel::ChannelModel;
pub use error::{Error, Result};
pub use iq::{IqBuffer, Spectrum};
pub use receiver::{DemodResult, TagDecodeResult};
pub use sweep::{BerPoint, ExperimentConfig, TagSettings};
pub use tag::{ControlSymbolMap, EmbedMode, Impedance, StartOffset, TagProfile};
