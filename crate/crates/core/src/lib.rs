//! Physical layer and link-level simulator for the 5G-Advanced low-power
//! wake-up signal (LP-WUS) and low-power synchronization signal (LP-SS).
//!
//! The crate is organized along the signal path:
//!
//! - [`config`]: deployment parameters, validation and the JSON file format.
//! - [`procedures`]: idle-mode arithmetic (PO/LO association, codepoints,
//!   monitoring occasions).
//! - [`codec`]: channel coding, rate matching, Manchester coding and
//!   sequence-index encoding, with bit-level decoders.
//! - [`waveform`]: Zadoff-Chu ON-sequences, OOK/OFDM synthesis and LP-SS.
//! - [`channel`]: AWGN, frequency and timing offsets, block fading.
//! - [`receiver`]: energy and coherent detectors, LP-SS sync and measurements.
//! - [`sim`]: Monte-Carlo sweeps, threshold calibration and test vectors.
//! - [`iq`]: IQ sample files and their metadata sidecars.

pub mod channel;
pub mod codec;
pub mod config;
pub mod iq;
pub mod procedures;
pub mod receiver;
pub mod sim;
pub mod waveform;

pub use num_complex::Complex64;
