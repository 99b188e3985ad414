//! Reference receivers.
//!
//! Both receivers start from the same front end: each scheduled WUS symbol is
//! band-selected, brought back to the WUS rate and cut into `M` OOK blocks.
//! The energy detector (ED) works on block energies only; the coherent
//! detector (CD) additionally correlates ON blocks against the ON-sequences.

mod measure;
mod sync;

pub use measure::{lp_measure, lp_measure_signal, MeasurementReport, RssiNormalization};
pub use sync::{lpss_energies, lpss_sync, lpss_sync_energies, pearson, SyncEstimate};

use crate::codec::{
    manchester_hard_decode, rm_decode, sequence_decode, CodecError, Payload, PatternBook,
};
use crate::config::{LpWusConfig, SlotSymbol, WUS_SUBCARRIERS};
use crate::procedures::{codepoint_to_targets, Codepoint, MoEntry, MoSchedule, WakeTarget};
use crate::waveform::{inner, on_sequence_set, IqSignal, OfdmEngine, OnSequence, WaveformError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReceiverError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error("signal does not contain scheduled symbol {0}")]
    ScheduleMismatch(SlotSymbol),
    #[error("coherent detection needs N_seq >= 2, configuration has {0}")]
    NotApplicable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReceiverKind {
    #[serde(rename = "ED")]
    Ed,
    #[serde(rename = "CD")]
    Cd,
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceiverKind::Ed => "ED",
            ReceiverKind::Cd => "CD",
        })
    }
}

/// How the ED turns energies into bits once the gate has fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdPath {
    /// Correlate against every payload's ON/OFF pattern.
    #[default]
    MlPattern,
    /// Hard Manchester decisions followed by the channel decoder.
    ManchesterRm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdOptions {
    /// Gate threshold on the normalized pattern score. Detection needs
    /// `score > threshold`.
    pub threshold: f64,
    pub path: EdPath,
}

impl EdOptions {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            path: EdPath::default(),
        }
    }
}

/// Outcome of one detection attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub kind: ReceiverKind,
    pub detected: bool,
    /// Present iff `detected`.
    pub codepoint: Option<Codepoint>,
    pub target: Option<WakeTarget>,
    /// Detection statistic compared against the threshold.
    pub metric: f64,
    /// Timing offset in OOK symbols the receiver assumed.
    pub sync_offset: i64,
}

impl DetectionReport {
    fn missed(kind: ReceiverKind, metric: f64) -> Self {
        Self {
            kind,
            detected: false,
            codepoint: None,
            target: None,
            metric,
            sync_offset: 0,
        }
    }

    fn decided(kind: ReceiverKind, metric: f64, payload: Payload, cfg: &LpWusConfig) -> Self {
        match codepoint_to_targets(payload.codepoint(), cfg) {
            Ok(t) => Self {
                kind,
                detected: true,
                codepoint: Some(payload.codepoint()),
                target: Some(t),
                metric,
                sync_offset: 0,
            },
            // A value past the last codepoint addresses nobody.
            Err(_) => Self::missed(kind, metric),
        }
    }
}

impl fmt::Display for DetectionReport {
    /// `key=value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "receiver={}", self.kind)?;
        writeln!(f, "detected={}", u8::from(self.detected))?;
        match self.codepoint {
            Some(c) => writeln!(f, "codepoint={}", c.value())?,
            None => writeln!(f, "codepoint=")?,
        }
        match &self.target {
            Some(t) => writeln!(f, "target={t}")?,
            None => writeln!(f, "target=")?,
        }
        writeln!(f, "metric={:.9}", self.metric)?;
        write!(f, "sync_offset={}", self.sync_offset)
    }
}

/// Receive chain of one deployment with FFT plans, ON-sequences and the
/// pattern book prepared once.
#[derive(Debug, Clone)]
pub struct WusReceiver {
    cfg: LpWusConfig,
    engine: OfdmEngine,
    sequences: Vec<OnSequence>,
    book: PatternBook,
}

impl WusReceiver {
    pub fn new(cfg: &LpWusConfig) -> Result<Self, ReceiverError> {
        Ok(Self {
            cfg: cfg.clone(),
            engine: OfdmEngine::new(cfg.numerology()),
            sequences: on_sequence_set(cfg)?,
            book: PatternBook::new(cfg)?,
        })
    }

    pub fn config(&self) -> &LpWusConfig {
        &self.cfg
    }

    pub fn sequences(&self) -> &[OnSequence] {
        &self.sequences
    }

    /// The `G` OOK blocks of the MO, `M_ZC` samples each.
    pub fn ook_blocks(&self, y: &IqSignal, entry: &MoEntry) -> Result<Vec<Vec<Complex64>>, ReceiverError> {
        let m_zc = WUS_SUBCARRIERS / self.cfg.m;
        if entry.dropped || entry.symbols.len() < self.cfg.l {
            return Err(WaveformError::MoSkipped {
                mo_index: entry.mo_index,
            }
            .into());
        }
        let mut blocks = Vec::with_capacity(self.cfg.g());
        for pos in &entry.symbols[..self.cfg.l] {
            let span = y.span(*pos).ok_or(ReceiverError::ScheduleMismatch(*pos))?;
            let band = self.engine.wus_band_samples(y, span);
            blocks.extend(band.chunks_exact(m_zc).map(<[Complex64]>::to_vec));
        }
        Ok(blocks)
    }

    pub fn ed_demodulate(&self, y: &IqSignal, entry: &MoEntry) -> Result<Vec<f64>, ReceiverError> {
        Ok(self.ook_blocks(y, entry)?.iter().map(|b| block_energy(b)).collect())
    }

    pub fn ed_decode(&self, e: &[f64], opts: EdOptions) -> Result<DetectionReport, ReceiverError> {
        let (ml, score) = self.book.decode(e)?;
        if !(score > opts.threshold) {
            return Ok(DetectionReport::missed(ReceiverKind::Ed, score));
        }
        let payload = match opts.path {
            EdPath::MlPattern => ml,
            EdPath::ManchesterRm => rm_decode(&manchester_hard_decode(e), self.cfg.payload_bits()),
        };
        Ok(DetectionReport::decided(ReceiverKind::Ed, score, payload, &self.cfg))
    }

    /// Index and squared correlation of the best-matching ON-sequence.
    pub fn classify_block(&self, block: &[Complex64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (c, r) in self.sequences.iter().enumerate() {
            let v = inner(block, &r.samples).norm_sqr();
            if v > best.1 {
                best = (c, v);
            }
        }
        best
    }

    /// Coherent detection from OOK blocks.
    ///
    /// ON positions come from the Manchester structure (the stronger half of
    /// each pair). The gate metric `Σ_m max_c |⟨y_m, r_c⟩|² / (M_ZC·Σ_i ‖y_i‖²)`
    /// lies in `[0, 1]` and equals 1 for a noiseless frame.
    pub fn cd_decode_blocks(&self, blocks: &[Vec<Complex64>], threshold: f64) -> Result<DetectionReport, ReceiverError> {
        if self.cfg.n_seq < 2 {
            return Err(ReceiverError::NotApplicable(self.cfg.n_seq));
        }
        let expected = self.cfg.g();
        if blocks.len() != expected {
            return Err(CodecError::MetricLength {
                expected,
                got: blocks.len(),
            }
            .into());
        }
        let energies: Vec<f64> = blocks.iter().map(|b| block_energy(b)).collect();
        let total: f64 = energies.iter().sum();
        let mut corr = 0.0;
        let mut indices = Vec::with_capacity(expected / 2);
        for (k, pair) in energies.chunks_exact(2).enumerate() {
            let on = if pair[0] > pair[1] { 2 * k } else { 2 * k + 1 };
            let (c, v) = self.classify_block(&blocks[on]);
            corr += v;
            indices.push(c as u8);
        }
        let m_zc = (WUS_SUBCARRIERS / self.cfg.m) as f64;
        let metric = if total > 0.0 { corr / (m_zc * total) } else { 0.0 };
        if !(metric > threshold) {
            return Ok(DetectionReport::missed(ReceiverKind::Cd, metric));
        }
        match sequence_decode(&indices, self.cfg.payload_bits(), self.cfg.n_seq) {
            Ok(p) => Ok(DetectionReport::decided(ReceiverKind::Cd, metric, p, &self.cfg)),
            Err(CodecError::SequenceCoverage { .. }) => Ok(DetectionReport::missed(ReceiverKind::Cd, metric)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn cd_decode(&self, y: &IqSignal, entry: &MoEntry, threshold: f64) -> Result<DetectionReport, ReceiverError> {
        let blocks = self.ook_blocks(y, entry)?;
        self.cd_decode_blocks(&blocks, threshold)
    }
}

pub fn block_energy(b: &[Complex64]) -> f64 {
    b.iter().map(|x| x.norm_sqr()).sum()
}

fn mo_entry(schedule: &MoSchedule, mo_index: usize) -> Result<&MoEntry, ReceiverError> {
    schedule
        .get(mo_index)
        .ok_or(ReceiverError::Waveform(WaveformError::NoSuchMo(mo_index)))
}

/// Per-OOK-symbol energies `e_i = ‖y_i‖²` of MO `mo_index`.
pub fn ed_demodulate(
    y: &IqSignal,
    cfg: &LpWusConfig,
    schedule: &MoSchedule,
    mo_index: usize,
) -> Result<Vec<f64>, ReceiverError> {
    WusReceiver::new(cfg)?.ed_demodulate(y, mo_entry(schedule, mo_index)?)
}

pub fn ed_decode(e: &[f64], cfg: &LpWusConfig, opts: EdOptions) -> Result<DetectionReport, ReceiverError> {
    WusReceiver::new(cfg)?.ed_decode(e, opts)
}

pub fn cd_decode(
    y: &IqSignal,
    cfg: &LpWusConfig,
    schedule: &MoSchedule,
    mo_index: usize,
    threshold: f64,
) -> Result<DetectionReport, ReceiverError> {
    WusReceiver::new(cfg)?.cd_decode(y, mo_entry(schedule, mo_index)?, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply, ChannelProfile};
    use crate::codec::{encode_frame, ook_pattern};
    use crate::config::{mo_example, n_seq_max};
    use crate::procedures::resolve_mos;
    use crate::waveform::WusModulator;

    fn cfg(b: usize, l: usize, m: usize, n_seq: usize) -> LpWusConfig {
        let (mut c, _) = mo_example();
        c.l = l;
        c.m = m;
        c.n_seq = n_seq;
        c.n_root = 1;
        c.roots = vec![1];
        c.n_po_lo = 1;
        c.n_sg_po = (1 << b) - 1;
        c.l_mo = l.max(c.l_mo);
        c
    }

    fn transmit(c: &LpWusConfig, v: u8) -> (IqSignal, MoEntry) {
        let sched = resolve_mos(c, SlotSymbol::new(0, 0));
        let entry = sched.first_active().unwrap().clone();
        let frame = encode_frame(&Payload::from_value(v, c.payload_bits()).unwrap(), c).unwrap();
        let sig = WusModulator::new(c).unwrap().modulate(&frame, &entry).unwrap();
        (sig, entry)
    }

    #[test]
    fn noiseless_energies_follow_pattern() {
        let c = cfg(3, 6, 2, 2);
        let rx = WusReceiver::new(&c).unwrap();
        let (sig, entry) = transmit(&c, 5);
        let e = rx.ed_demodulate(&sig, &entry).unwrap();
        let g = ook_pattern(&Payload::from_value(5, 3).unwrap(), c.e());
        for (ei, gi) in e.iter().zip(&g) {
            assert!((ei - f64::from(*gi) * 66.0).abs() < 1e-9, "{ei}");
        }
    }

    #[test]
    fn ed_all_payloads_noiseless() {
        let c = cfg(5, 14, 4, 4);
        let rx = WusReceiver::new(&c).unwrap();
        for v in 0..32 {
            let (sig, entry) = transmit(&c, v);
            let e = rx.ed_demodulate(&sig, &entry).unwrap();
            for path in [EdPath::MlPattern, EdPath::ManchesterRm] {
                let r = rx.ed_decode(&e, EdOptions { threshold: 0.5, path }).unwrap();
                assert!(r.detected);
                assert_eq!(r.codepoint.unwrap().value(), v);
            }
        }
    }

    #[test]
    fn ed_zero_input_not_detected() {
        let c = cfg(3, 14, 2, 2);
        let r = ed_decode(&vec![0.0; 28], &c, EdOptions::with_threshold(0.0)).unwrap();
        assert!(!r.detected);
        assert!(r.codepoint.is_none());
    }

    #[test]
    fn ed_noise_energy_mean() {
        let c = cfg(3, 14, 2, 2);
        let rx = WusReceiver::new(&c).unwrap();
        let (sig, entry) = transmit(&c, 0);
        let noise = sig.zeros_like();
        let mut acc = 0.0;
        let mut n = 0;
        for t in 0..400 {
            let y = apply(&noise, &ChannelProfile::awgn(3.0, t));
            let e = rx.ed_demodulate(&y, &entry).unwrap();
            acc += e.iter().sum::<f64>();
            n += e.len();
        }
        assert!(n >= 10_000);
        let expect = 66.0 * ChannelProfile::awgn(3.0, 0).band_noise_variance();
        assert!((acc / n as f64 - expect).abs() / expect < 0.05);
    }

    #[test]
    fn ed_energies_cfo_invariant() {
        // Block energies move only through leakage at the band edge.
        let c = cfg(3, 14, 2, 2);
        let rx = WusReceiver::new(&c).unwrap();
        let (sig, entry) = transmit(&c, 6);
        let e0 = rx.ed_demodulate(&sig, &entry).unwrap();
        let p = ChannelProfile {
            cfo_hz: 50.0,
            ..Default::default()
        };
        let e1 = rx.ed_demodulate(&apply(&sig, &p), &entry).unwrap();
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a - b).abs() < 0.02 * 66.0, "{a} {b}");
        }
        assert_eq!(
            rx.ed_decode(&e0, EdOptions::with_threshold(0.5)).unwrap().codepoint,
            rx.ed_decode(&e1, EdOptions::with_threshold(0.5)).unwrap().codepoint
        );
    }

    #[test]
    fn cd_four_sequence_example() {
        let c = cfg(5, 4, 4, 4);
        let rx = WusReceiver::new(&c).unwrap();
        let (sig, entry) = transmit(&c, 0b11110);
        let r = rx.cd_decode(&sig, &entry, 0.5).unwrap();
        assert!(r.detected);
        assert_eq!(r.codepoint.unwrap().value(), 30);
        assert!((r.metric - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cd_two_sequences_all_payloads() {
        for (l, m) in [(14, 1), (14, 2), (6, 4)] {
            let c = cfg(5, l, m, 2);
            let rx = WusReceiver::new(&c).unwrap();
            for v in 0..32 {
                let (sig, entry) = transmit(&c, v);
                let r = rx.cd_decode(&sig, &entry, 0.5).unwrap();
                assert_eq!(r.codepoint.map(|c| c.value()), Some(v), "l={l} m={m}");
            }
        }
    }

    #[test]
    fn cd_survives_one_corrupted_symbol() {
        // N_seq=4, B=2: N_s=2 bits per pass, E=7 ON symbols, so every
        // padded bit is repeated at least 3 times.
        let c = cfg(2, 14, 1, 4);
        let rx = WusReceiver::new(&c).unwrap();
        for v in 0..4 {
            let (sig, entry) = transmit(&c, v);
            let clean = rx.ook_blocks(&sig, &entry).unwrap();
            let frame = encode_frame(&Payload::from_value(v, 2).unwrap(), &c).unwrap();
            for (m, pos) in frame.on_positions().into_iter().enumerate() {
                let mut blocks = clean.clone();
                let wrong = (usize::from(frame.seq_indices[m]) + 1) % 4;
                blocks[pos] = rx.sequences()[wrong].samples.clone();
                let r = rx.cd_decode_blocks(&blocks, 0.5).unwrap();
                assert_eq!(r.codepoint.unwrap().value(), v, "corrupted ON symbol {m}");
            }
        }
    }

    #[test]
    fn cd_needs_two_sequences() {
        let c = cfg(3, 14, 2, 1);
        let (sig, entry) = transmit(&c, 1);
        let rx = WusReceiver::new(&c).unwrap();
        assert_eq!(rx.cd_decode(&sig, &entry, 0.0), Err(ReceiverError::NotApplicable(1)));
    }

    #[test]
    fn cd_confusion_diagonal() {
        for m in [1usize, 2, 4] {
            let c = cfg(3, 14, m, n_seq_max(m));
            let rx = WusReceiver::new(&c).unwrap();
            for (i, r) in rx.sequences().iter().enumerate() {
                assert_eq!(rx.classify_block(&r.samples).0, i);
            }
        }
    }

    #[test]
    fn scale_invariance() {
        let c = cfg(3, 14, 2, 2);
        let rx = WusReceiver::new(&c).unwrap();
        let (sig, entry) = transmit(&c, 3);
        let y = apply(&sig, &ChannelProfile::awgn(2.0, 11));
        let e = rx.ed_demodulate(&y, &entry).unwrap();
        let base = rx.ed_decode(&e, EdOptions::with_threshold(-1.0)).unwrap();
        for alpha in [1e-3, 0.5, 7.0, 1e4] {
            let es: Vec<f64> = e.iter().map(|x| x * alpha * alpha).collect();
            let r = rx.ed_decode(&es, EdOptions::with_threshold(-1.0)).unwrap();
            assert_eq!(r.codepoint, base.codepoint);
            assert_eq!(manchester_hard_decode(&es), manchester_hard_decode(&e));
        }
    }

    #[test]
    fn report_key_values() {
        let c = cfg(3, 14, 2, 2);
        let r = ed_decode(&vec![0.0; 28], &c, EdOptions::with_threshold(0.0)).unwrap();
        let text = r.to_string();
        assert!(text.starts_with("receiver=ED\ndetected=0\ncodepoint=\n"));
    }

    #[test]
    fn out_of_range_codepoint_not_detected() {
        // 3 payload bits but only 6 codepoints in use: values 6 and 7
        // address nobody.
        let mut c = cfg(3, 14, 2, 2);
        c.n_sg_po = 5;
        let rx = WusReceiver::new(&c).unwrap();
        let e: Vec<f64> = ook_pattern(&Payload::from_value(7, 3).unwrap(), c.e())
            .iter()
            .map(|&g| f64::from(g))
            .collect();
        let r = rx.ed_decode(&e, EdOptions::with_threshold(0.0)).unwrap();
        assert!(!r.detected);
        assert!(r.codepoint.is_none());
    }
}
