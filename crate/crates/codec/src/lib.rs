//! Low-bitrate transform audio codec built on the modulated complex lapped
//! transform (MCLT).
//!
//! The encoder flattens MCLT spectra with an LPC-derived frequency envelope
//! (FDNS), optionally applies complex-LPC temporal noise shaping across
//! frequency (CTNS), scales eight sub-bands with adaptively allocated target
//! bits, and quantizes magnitudes with a unified non-uniform quantizer plus
//! 6-bit phases (complex mode) or 1-bit signs (real mode). Frames switch
//! between the critically sampled real path (MDCT) and the redundant complex
//! path (MCLT); time-domain aliasing augmentation (TDAA) keeps the overlap-add
//! exact across mode switches.

pub mod bitstream;
pub mod codec;
pub mod config;
pub mod corpus;
pub mod error;
pub mod framing;
pub mod lpc;
pub mod metrics;
pub mod noise_shaping;
pub mod quantizer;
pub mod rate_control;
pub mod transforms;
pub mod vq;
pub mod wav;

pub use codec::{Decoder, Encoder};
pub use config::CodecConfig;
pub use error::CodecError;
