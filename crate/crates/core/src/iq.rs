//! IQ sample files.
//!
//! Samples are stored as little-endian `f32` pairs `I, Q`. A JSON sidecar
//! with the same stem and a `.json` extension records the numerology and the
//! OFDM symbol layout so a receiver can find the WUS symbols again.

use crate::config::{SlotSymbol, SCHEMA_VERSION};
use crate::waveform::{IqSignal, SymbolSpan};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IqError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Metadata {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {bytes} bytes is not a whole number of f32 I/Q pairs")]
    Truncated { path: PathBuf, bytes: usize },
    #[error("sample file has {found} samples, metadata says {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("unsupported metadata schema_version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    LpWus,
    LpSs,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolMeta {
    pub slot: u64,
    pub symbol: usize,
    pub start: usize,
    pub cp_len: usize,
}

/// Sidecar contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqMetadata {
    pub schema_version: u32,
    pub kind: SignalKind,
    pub sample_rate_hz: f64,
    pub scs_khz: u32,
    pub fft_size: usize,
    pub n_samples: usize,
    pub symbols: Vec<SymbolMeta>,
    /// LO start the MO schedule was resolved from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_start: Option<SlotSymbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mo_index: Option<usize>,
    /// Transmitted codepoint, for test vectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codepoint: Option<u8>,
}

impl IqMetadata {
    pub fn describe(sig: &IqSignal, kind: SignalKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            sample_rate_hz: sig.sample_rate_hz,
            scs_khz: sig.scs_khz,
            fft_size: sig.fft_size,
            n_samples: sig.samples.len(),
            symbols: sig
                .symbols
                .iter()
                .map(|s| SymbolMeta {
                    slot: s.pos.slot,
                    symbol: s.pos.symbol,
                    start: s.start,
                    cp_len: s.cp_len,
                })
                .collect(),
            lo_start: None,
            mo_index: None,
            codepoint: None,
        }
    }
}

/// Sidecar path of an IQ file.
pub fn metadata_path(iq_path: &Path) -> PathBuf {
    iq_path.with_extension("json")
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IqError + '_ {
    move |source| IqError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn encode_samples(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_samples(bytes: &[u8]) -> Option<Vec<Complex64>> {
    if bytes.len() % 8 != 0 {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(f64::from(re), f64::from(im))
            })
            .collect(),
    )
}

/// Writes the samples and the sidecar.
pub fn write_iq(path: &Path, sig: &IqSignal, meta: &IqMetadata) -> Result<(), IqError> {
    fs::write(path, encode_samples(&sig.samples)).map_err(io_err(path))?;
    let meta_path = metadata_path(path);
    let mut text = serde_json::to_string_pretty(meta).map_err(|source| IqError::Metadata {
        path: meta_path.clone(),
        source,
    })?;
    text.push('\n');
    fs::write(&meta_path, text).map_err(io_err(&meta_path))
}

pub fn read_iq(path: &Path) -> Result<(IqSignal, IqMetadata), IqError> {
    let meta_path = metadata_path(path);
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: IqMetadata = serde_json::from_str(&text).map_err(|source| IqError::Metadata {
        path: meta_path.clone(),
        source,
    })?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(IqError::SchemaVersion {
            found: meta.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    let samples = decode_samples(&bytes).ok_or(IqError::Truncated {
        path: path.to_path_buf(),
        bytes: bytes.len(),
    })?;
    if samples.len() != meta.n_samples {
        return Err(IqError::LengthMismatch {
            found: samples.len(),
            expected: meta.n_samples,
        });
    }
    let sig = IqSignal {
        samples,
        sample_rate_hz: meta.sample_rate_hz,
        scs_khz: meta.scs_khz,
        fft_size: meta.fft_size,
        symbols: meta
            .symbols
            .iter()
            .map(|s| SymbolSpan {
                pos: SlotSymbol::new(s.slot, s.symbol),
                start: s.start,
                cp_len: s.cp_len,
            })
            .collect(),
    };
    Ok((sig, meta))
}
