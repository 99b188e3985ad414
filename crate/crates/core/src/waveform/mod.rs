//! Time/frequency-domain signal construction.
//!
//! An OFDM symbol carrying LP-WUS or LP-SS is built in the time domain at
//! the WUS rate: `M` OOK blocks of `M_ZC = 132/M` samples, each either zero
//! (OFF) or an ON-sequence. The 132-sample block is then moved onto the OFDM
//! grid by [`OfdmEngine`]. ON blocks have unit average power.

mod lpss;
mod ofdm;
mod zc;

pub use lpss::{
    lpss_occasions, lpss_pattern, lpss_source, lpss_table, modulate_lpss, LpSsOccasion, LpSsPattern,
};
pub use ofdm::OfdmEngine;
pub use zc::{inner, on_sequence_set, sequence_params, zadoff_chu, zc_on_sequence, OnSequence};

use crate::codec::OokFrame;
use crate::config::{LpWusConfig, Numerology, SlotSymbol, WUS_SUBCARRIERS};
use crate::procedures::{MoEntry, MoSchedule};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WaveformError {
    #[error("invalid ZC root {root}: expected 1..{n_zc}")]
    InvalidRoot { root: u32, n_zc: usize },
    #[error("sequence index {index} out of range for N_seq={n_seq}")]
    SequenceIndex { index: usize, n_seq: usize },
    #[error("no ZC root configured for the requested sequence")]
    MissingRoot,
    #[error("MO {mo_index} is skipped: not enough usable symbols")]
    MoSkipped { mo_index: usize },
    #[error("schedule has no MO {0}")]
    NoSuchMo(usize),
    #[error("no tabulated LP-SS for (B, M, L) = ({b}, {m}, {l})")]
    UnsupportedLpss { b: usize, m: usize, l: usize },
    #[error("LP-SS occasion at start symbol {start} with {len} symbols crosses the slot boundary")]
    SlotBoundary { start: usize, len: usize },
    #[error("frame has {got} OOK symbols, schedule expects {expected}")]
    FrameMismatch { got: usize, expected: usize },
}

/// Sample span of one OFDM symbol in an [`IqSignal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolSpan {
    pub pos: SlotSymbol,
    /// Index of the first CP sample.
    pub start: usize,
    pub cp_len: usize,
}

/// Complex baseband samples plus the OFDM symbol layout they follow.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub scs_khz: u32,
    pub fft_size: usize,
    pub symbols: Vec<SymbolSpan>,
}

impl IqSignal {
    pub fn numerology(&self) -> Numerology {
        Numerology {
            scs_khz: self.scs_khz,
            fft_size: self.fft_size,
        }
    }

    pub fn span(&self, pos: SlotSymbol) -> Option<&SymbolSpan> {
        let first = self.symbols.first()?.pos.linear();
        let idx = pos.linear().checked_sub(first)?;
        self.symbols
            .get(idx as usize)
            .filter(|s| s.pos == pos)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Same layout, all samples zero. Used for noise-only trials.
    pub fn zeros_like(&self) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); self.samples.len()],
            ..self.clone()
        }
    }

    /// True when the sample count matches the annotated symbols exactly.
    pub fn is_consistent(&self) -> bool {
        let mut expect = 0;
        for s in &self.symbols {
            if s.start != expect {
                return false;
            }
            expect += s.cp_len + self.fft_size;
        }
        expect == self.samples.len()
    }
}

/// Samples for an ON OOK symbol.
pub trait OnSymbolSource {
    /// ON block for OOK symbol `ook_index` of the signal, `m_zc` samples long.
    fn on_block(&mut self, ook_index: usize, m_zc: usize) -> Vec<Complex64>;
}

impl<F> OnSymbolSource for F
where
    F: FnMut(usize, usize) -> Vec<Complex64>,
{
    fn on_block(&mut self, ook_index: usize, m_zc: usize) -> Vec<Complex64> {
        self(ook_index, m_zc)
    }
}

/// Same ZC sequence for every ON symbol.
#[derive(Debug, Clone)]
pub struct ZcSource(pub OnSequence);

impl OnSymbolSource for ZcSource {
    fn on_block(&mut self, _ook_index: usize, m_zc: usize) -> Vec<Complex64> {
        assert_eq!(self.0.len(), m_zc, "ON-sequence length");
        self.0.samples.clone()
    }
}

/// Pseudo-random unit-modulus samples, standing in for an unspecified
/// ON-sequence.
#[derive(Debug, Clone)]
pub struct UnitModulusSource(ChaCha8Rng);

impl UnitModulusSource {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl OnSymbolSource for UnitModulusSource {
    fn on_block(&mut self, _ook_index: usize, m_zc: usize) -> Vec<Complex64> {
        (0..m_zc)
            .map(|_| Complex64::from_polar(1.0, TAU * self.0.random::<f64>()))
            .collect()
    }
}

/// Modulates a stream of OOK symbols onto consecutive OFDM symbols.
///
/// `bits[i] = 1` puts the source's ON block on OOK symbol `i`. The stream is
/// placed on `positions` (one per OFDM symbol, `M` OOK symbols each) and the
/// returned signal covers every slot from the first to the last position.
pub fn modulate_ook_stream(
    engine: &OfdmEngine,
    bits: &[u8],
    m: usize,
    positions: &[SlotSymbol],
    source: &mut dyn OnSymbolSource,
) -> IqSignal {
    let m_zc = WUS_SUBCARRIERS / m;
    let blocks: Vec<Vec<Complex64>> = bits
        .chunks(m)
        .enumerate()
        .map(|(l, chunk)| {
            let mut s = Vec::with_capacity(WUS_SUBCARRIERS);
            for (j, &b) in chunk.iter().enumerate() {
                if b == 1 {
                    s.extend(source.on_block(l * m + j, m_zc));
                } else {
                    s.resize(s.len() + m_zc, Complex64::new(0.0, 0.0));
                }
            }
            s.resize(WUS_SUBCARRIERS, Complex64::new(0.0, 0.0));
            s
        })
        .collect();
    place_blocks(engine, positions, blocks)
}

fn place_blocks(engine: &OfdmEngine, positions: &[SlotSymbol], blocks: Vec<Vec<Complex64>>) -> IqSignal {
    let (Some(first), Some(last)) = (positions.first(), positions.last()) else {
        return engine.synthesize(0, 0, |_| None);
    };
    let mut blocks = positions.iter().copied().zip(blocks).peekable();
    engine.synthesize(first.slot, last.slot - first.slot + 1, |pos| {
        match blocks.peek() {
            Some((p, _)) if *p == pos => blocks.next().map(|(_, b)| b),
            _ => None,
        }
    })
}

/// Transmitter of one deployment: FFT plans and ON-sequences prepared once.
#[derive(Debug, Clone)]
pub struct WusModulator {
    engine: OfdmEngine,
    sequences: Vec<OnSequence>,
    l: usize,
    m: usize,
}

impl WusModulator {
    pub fn new(cfg: &LpWusConfig) -> Result<Self, WaveformError> {
        Ok(Self {
            engine: OfdmEngine::new(cfg.numerology()),
            sequences: on_sequence_set(cfg)?,
            l: cfg.l,
            m: cfg.m,
        })
    }

    pub fn engine(&self) -> &OfdmEngine {
        &self.engine
    }

    pub fn sequences(&self) -> &[OnSequence] {
        &self.sequences
    }

    /// WUS-rate blocks `s_l` of every WUS OFDM symbol of `frame`.
    pub fn wus_blocks(&self, frame: &OokFrame) -> Result<Vec<Vec<Complex64>>, WaveformError> {
        let expected = self.l * self.m;
        if frame.g.len() != expected || frame.m != self.m {
            return Err(WaveformError::FrameMismatch {
                got: frame.g.len(),
                expected,
            });
        }
        let seqs = frame.per_symbol_sequences();
        let m_zc = WUS_SUBCARRIERS / self.m;
        seqs.chunks(self.m)
            .map(|chunk| {
                let mut s = Vec::with_capacity(WUS_SUBCARRIERS);
                for c in chunk {
                    match c {
                        Some(c) => {
                            let seq = self.sequences.get(usize::from(*c)).ok_or(
                                WaveformError::SequenceIndex {
                                    index: usize::from(*c),
                                    n_seq: self.sequences.len(),
                                },
                            )?;
                            s.extend_from_slice(&seq.samples);
                        }
                        None => s.resize(s.len() + m_zc, Complex64::new(0.0, 0.0)),
                    }
                }
                Ok(s)
            })
            .collect()
    }

    /// Signal of `frame` transmitted in MO `entry`.
    pub fn modulate(&self, frame: &OokFrame, entry: &MoEntry) -> Result<IqSignal, WaveformError> {
        if entry.dropped || entry.symbols.len() < self.l {
            return Err(WaveformError::MoSkipped {
                mo_index: entry.mo_index,
            });
        }
        let blocks = self.wus_blocks(frame)?;
        Ok(place_blocks(&self.engine, &entry.symbols[..self.l], blocks))
    }
}

/// Transmits `frame` in MO `mo_index` of `schedule`. A dropped MO is reported
/// as [`WaveformError::MoSkipped`].
pub fn modulate_frame(
    frame: &OokFrame,
    cfg: &LpWusConfig,
    schedule: &MoSchedule,
    mo_index: usize,
) -> Result<IqSignal, WaveformError> {
    let entry = schedule
        .get(mo_index)
        .ok_or(WaveformError::NoSuchMo(mo_index))?;
    WusModulator::new(cfg)?.modulate(frame, entry)
}
