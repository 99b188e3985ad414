//! Bit-domain processing of the LP-WUS payload.
//!
//! Transmit side: channel coding ([`channel_encode`]), repetition rate
//! matching ([`rate_match`]), Manchester line coding, and the parallel
//! mapping of payload bits onto ON-sequence indices ([`sequence_encode`]).
//! [`encode_frame`] chains them into an [`OokFrame`].
//!
//! Receive side: the bit-level decoders used by the reference receivers.

mod manchester;
mod reed_muller;

pub use manchester::{manchester_encode, manchester_hard_decode};
pub use reed_muller::{channel_encode, coded_len, rm_basis, rm_decode, RM_COLUMNS, RM_N};

use crate::config::{LpWusConfig, MAX_PAYLOAD_BITS};
use crate::procedures::Codepoint;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("payload size B={0} not in 1..=5")]
    PayloadSize(usize),
    #[error("payload value {value} does not fit in {bits} bits")]
    PayloadValue { value: u8, bits: usize },
    #[error("payload has {got} bits but the configuration carries {expected}")]
    PayloadMismatch { got: usize, expected: usize },
    #[error("G=L*M={0} is not a positive even number of OOK symbols")]
    FrameSize(usize),
    #[error("expected {expected} metrics, got {got}")]
    MetricLength { expected: usize, got: usize },
    #[error("{available} sequence-coded bits cannot carry a {needed}-bit padded payload")]
    SequenceCoverage { available: usize, needed: usize },
}

/// Information bits `b[0..B]`, `b[0]` being the MSB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Payload {
    value: u8,
    len: u8,
}

impl Payload {
    pub fn from_value(value: u8, bits: usize) -> Result<Self, CodecError> {
        if !(1..=MAX_PAYLOAD_BITS).contains(&bits) {
            return Err(CodecError::PayloadSize(bits));
        }
        if u32::from(value) >> bits != 0 {
            return Err(CodecError::PayloadValue { value, bits });
        }
        Ok(Self {
            value,
            len: bits as u8,
        })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, CodecError> {
        let value = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
        if bits.len() > MAX_PAYLOAD_BITS {
            return Err(CodecError::PayloadSize(bits.len()));
        }
        Self::from_value(value as u8, bits.len())
    }

    pub fn from_codepoint(c: Codepoint, bits: usize) -> Result<Self, CodecError> {
        Self::from_value(c.value(), bits)
    }

    pub fn codepoint(&self) -> Codepoint {
        Codepoint::new(self.value).expect("payload below 32")
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bits, MSB first.
    pub fn bits(&self) -> Vec<u8> {
        (0..self.len)
            .rev()
            .map(|k| (self.value >> k) & 1)
            .collect()
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// ON/OFF grid of one LP-WUS plus the sequence index of every ON symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OokFrame {
    /// OFDM symbols.
    pub l: usize,
    /// OOK symbols per OFDM symbol.
    pub m: usize,
    /// ON (1) / OFF (0) per OOK symbol, `G = L·M` entries.
    pub g: Vec<u8>,
    /// Sequence index of the `m`-th ON symbol in time order, `E = G/2` entries.
    pub seq_indices: Vec<u8>,
}

impl OokFrame {
    /// OOK-symbol positions of the ON symbols, in time order.
    pub fn on_positions(&self) -> Vec<usize> {
        self.g
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| (g == 1).then_some(i))
            .collect()
    }

    /// Sequence index carried at each OOK position (`None` when OFF).
    pub fn per_symbol_sequences(&self) -> Vec<Option<u8>> {
        let mut on = self.seq_indices.iter();
        self.g
            .iter()
            .map(|&g| if g == 1 { on.next().copied() } else { None })
            .collect()
    }
}

/// Repetition rate matching, `f[k] = d[k mod N]`.
pub fn rate_match(d: &[u8], e: usize) -> Vec<u8> {
    if d.is_empty() {
        return vec![0; e];
    }
    (0..e).map(|k| d[k % d.len()]).collect()
}

/// Sequence index of each of the `e` ON symbols for an `n_seq`-sequence set.
///
/// The payload is left-padded with zeros to a multiple of `log2(n_seq)` bits,
/// repeated to `e·log2(n_seq)` bits and read in MSB-first blocks.
pub fn sequence_encode(payload: &Payload, n_seq: usize, e: usize) -> Vec<u8> {
    let delta = n_seq.max(1).trailing_zeros() as usize;
    if delta == 0 {
        return vec![0; e];
    }
    let d_s = padded_sequence_bits(payload, delta);
    let f_s = rate_match(&d_s, e * delta);
    f_s.chunks_exact(delta)
        .map(|block| block.iter().fold(0u8, |acc, &b| (acc << 1) | b))
        .collect()
}

fn padded_sequence_bits(payload: &Payload, delta: usize) -> Vec<u8> {
    let b = payload.len();
    let pad = (delta - b % delta) % delta;
    let mut d_s = vec![0u8; pad];
    d_s.extend(payload.bits());
    d_s
}

/// Inverts [`sequence_encode`] by a per-bit majority vote over the repeated
/// padded payload. Vote ties resolve to 0.
pub fn sequence_decode(indices: &[u8], b: usize, n_seq: usize) -> Result<Payload, CodecError> {
    let delta = n_seq.max(1).trailing_zeros() as usize;
    if !(1..=MAX_PAYLOAD_BITS).contains(&b) {
        return Err(CodecError::PayloadSize(b));
    }
    let n_s = b + (delta.max(1) - b % delta.max(1)) % delta.max(1);
    let available = indices.len() * delta;
    if delta == 0 || available < n_s {
        return Err(CodecError::SequenceCoverage {
            available,
            needed: n_s,
        });
    }
    let mut votes = vec![0i32; n_s];
    for (m, &c) in indices.iter().enumerate() {
        for j in 0..delta {
            let bit = (c >> (delta - 1 - j)) & 1;
            votes[(m * delta + j) % n_s] += if bit == 1 { 1 } else { -1 };
        }
    }
    let bits: Vec<u8> = votes[n_s - b..].iter().map(|&v| u8::from(v > 0)).collect();
    Payload::from_bits(&bits)
}

/// ON/OFF pattern of a payload: channel code, rate match, Manchester.
pub fn ook_pattern(payload: &Payload, e: usize) -> Vec<u8> {
    manchester_encode(&rate_match(&channel_encode(payload), e))
}

/// Full transmit-side bit processing of one LP-WUS.
pub fn encode_frame(payload: &Payload, cfg: &LpWusConfig) -> Result<OokFrame, CodecError> {
    let expected = cfg.payload_bits();
    if payload.len() != expected {
        return Err(CodecError::PayloadMismatch {
            got: payload.len(),
            expected,
        });
    }
    let g_len = cfg.g();
    if g_len == 0 || g_len % 2 != 0 {
        return Err(CodecError::FrameSize(g_len));
    }
    let e = g_len / 2;
    Ok(OokFrame {
        l: cfg.l,
        m: cfg.m,
        g: ook_pattern(payload, e),
        seq_indices: sequence_encode(payload, cfg.n_seq, e),
    })
}

/// Precomputed ON/OFF patterns of every payload for correlation decoding.
#[derive(Debug, Clone)]
pub struct PatternBook {
    bits: usize,
    patterns: Vec<Vec<u8>>,
}

impl PatternBook {
    pub fn new(cfg: &LpWusConfig) -> Result<Self, CodecError> {
        let bits = cfg.payload_bits();
        let g_len = cfg.g();
        if g_len == 0 || g_len % 2 != 0 {
            return Err(CodecError::FrameSize(g_len));
        }
        let patterns = (0..1u8 << bits)
            .map(|v| Payload::from_value(v, bits).map(|p| ook_pattern(&p, g_len / 2)))
            .collect::<Result<_, _>>()?;
        Ok(Self { bits, patterns })
    }

    pub fn pattern_len(&self) -> usize {
        self.patterns[0].len()
    }

    /// Best-matching payload and its score `(ΣE_on − ΣE_off) / ΣE` in
    /// `[-1, 1]`. The score is invariant to scaling of `energies`; ties go to
    /// the lowest payload value and an all-zero input scores 0.
    pub fn decode(&self, energies: &[f64]) -> Result<(Payload, f64), CodecError> {
        if energies.len() != self.pattern_len() {
            return Err(CodecError::MetricLength {
                expected: self.pattern_len(),
                got: energies.len(),
            });
        }
        let mut best = (f64::NEG_INFINITY, 0u8);
        for (v, pat) in self.patterns.iter().enumerate() {
            let score = pattern_score(pat, energies);
            if score > best.0 {
                best = (score, v as u8);
            }
        }
        Ok((Payload::from_value(best.1, self.bits)?, best.0))
    }
}

fn pattern_score(pattern: &[u8], energies: &[f64]) -> f64 {
    let (mut on, mut off) = (0.0, 0.0);
    for (&g, &e) in pattern.iter().zip(energies) {
        if g == 1 {
            on += e;
        } else {
            off += e;
        }
    }
    let total = on + off;
    if total > 0.0 {
        (on - off) / total
    } else {
        0.0
    }
}

/// Correlates per-OOK-symbol energies against every candidate payload's
/// ON/OFF pattern and returns the best one with its normalized score.
pub fn ml_pattern_decode(energies: &[f64], cfg: &LpWusConfig) -> Result<(Payload, f64), CodecError> {
    PatternBook::new(cfg)?.decode(energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::mo_example;

    fn cfg(b_bits: usize, l: usize, m: usize, n_seq: usize) -> LpWusConfig {
        let (mut c, _) = mo_example();
        c.l = l;
        c.m = m;
        c.n_seq = n_seq;
        c.n_po_lo = 1;
        c.n_sg_po = (1 << b_bits) - 1;
        c
    }

    #[test]
    fn payload_bits_msb_first() {
        let p = Payload::from_bits(&[1, 1, 1, 1, 0]).unwrap();
        assert_eq!(p.value(), 30);
        assert_eq!(p.bits(), vec![1, 1, 1, 1, 0]);
        assert!(Payload::from_bits(&[1; 6]).is_err());
        assert!(Payload::from_value(4, 2).is_err());
        assert!(Payload::from_value(0, 0).is_err());
    }

    #[test]
    fn rate_match_examples() {
        assert_eq!(rate_match(&[1, 0, 1], 7), vec![1, 0, 1, 1, 0, 1, 1]);
        assert_eq!(rate_match(&[1, 0, 1], 3), vec![1, 0, 1]);
        assert_eq!(rate_match(&[1], 4), vec![1; 4]);
    }

    /// Straight transcription of pad / repeat / block / to-decimal with
    /// string manipulation, kept separate from the implementation.
    fn sequence_oracle(bits: &str, delta: usize, e: usize) -> Vec<u8> {
        let pad = (delta - bits.len() % delta) % delta;
        let d_s = format!("{}{}", "0".repeat(pad), bits);
        let f_s: String = d_s.chars().cycle().take(e * delta).collect();
        (0..e)
            .map(|m| u8::from_str_radix(&f_s[m * delta..(m + 1) * delta], 2).unwrap())
            .collect()
    }

    #[test]
    fn sequence_encode_four_sequence_example() {
        let p = Payload::from_bits(&[1, 1, 1, 1, 0]).unwrap();
        let oracle = sequence_oracle("11110", 2, 8);
        assert_eq!(oracle, vec![1, 3, 2, 1, 3, 2, 1, 3]);
        assert_eq!(sequence_encode(&p, 4, 8), oracle);
    }

    #[test]
    fn sequence_encode_matches_oracle_everywhere() {
        for b in 1..=5usize {
            for v in 0..(1u8 << b) {
                let p = Payload::from_value(v, b).unwrap();
                let s = format!("{:0width$b}", v, width = b);
                for n_seq in [2usize, 4, 8, 16] {
                    let delta = n_seq.trailing_zeros() as usize;
                    for e in 1..20 {
                        assert_eq!(sequence_encode(&p, n_seq, e), sequence_oracle(&s, delta, e));
                    }
                }
            }
        }
    }

    #[test]
    fn sequence_encode_degenerate_cases() {
        let zero = Payload::from_value(0, 5).unwrap();
        assert_eq!(sequence_encode(&zero, 8, 6), vec![0; 6]);
        let p = Payload::from_bits(&[1, 0]).unwrap();
        assert_eq!(sequence_encode(&p, 4, 1), vec![2]);
        assert_eq!(sequence_encode(&p, 1, 3), vec![0; 3]);
    }

    #[test]
    fn sequence_decode_round_trip_and_coverage() {
        for b in 1..=5usize {
            for n_seq in [2usize, 4, 8, 16] {
                let delta = n_seq.trailing_zeros() as usize;
                let n_s = b.div_ceil(delta) * delta;
                for e in 1..12 {
                    for v in 0..(1u8 << b) {
                        let p = Payload::from_value(v, b).unwrap();
                        let c = sequence_encode(&p, n_seq, e);
                        let r = sequence_decode(&c, b, n_seq);
                        if e * delta >= n_s {
                            assert_eq!(r.unwrap(), p);
                        } else {
                            assert!(matches!(r, Err(CodecError::SequenceCoverage { .. })));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn encode_frame_sizes() {
        let c = cfg(3, 14, 2, 2);
        let p = Payload::from_value(5, 3).unwrap();
        let f = encode_frame(&p, &c).unwrap();
        assert_eq!(f.g.len(), 28);
        assert_eq!(f.seq_indices.len(), 14);
        assert_eq!(f.on_positions().len(), 14);
    }

    #[test]
    fn zero_payload_frame_is_alternating() {
        for (l, m) in [(14, 2), (6, 1), (4, 4)] {
            let c = cfg(3, l, m, 1);
            let f = encode_frame(&Payload::from_value(0, 3).unwrap(), &c).unwrap();
            let expect: Vec<u8> = (0..l * m).map(|i| u8::from(i % 2 == 0)).collect();
            assert_eq!(f.g, expect);
        }
    }

    #[test]
    fn encode_frame_rejects_wrong_payload_size() {
        let c = cfg(3, 14, 2, 2);
        let p = Payload::from_value(1, 2).unwrap();
        assert_eq!(
            encode_frame(&p, &c),
            Err(CodecError::PayloadMismatch { got: 2, expected: 3 })
        );
    }

    #[test]
    fn ml_pattern_exact_and_perturbed() {
        let c = cfg(5, 14, 4, 4);
        let book = PatternBook::new(&c).unwrap();
        for v in 0..32u8 {
            let p = Payload::from_value(v, 5).unwrap();
            let g = ook_pattern(&p, c.e());
            let e: Vec<f64> = g.iter().map(|&x| f64::from(x) * 3.0).collect();
            let (dec, score) = book.decode(&e).unwrap();
            assert_eq!(dec, p);
            assert!((score - 1.0).abs() < 1e-15);
            // Bounded perturbation below half the ON/OFF gap.
            let e: Vec<f64> = g
                .iter()
                .enumerate()
                .map(|(i, &x)| f64::from(x) * 3.0 + 1.4 * ((i * 7919 % 13) as f64 / 13.0 - 0.5))
                .collect();
            assert_eq!(book.decode(&e).unwrap().0, p);
        }
    }

    #[test]
    fn ml_pattern_ties_and_zero_input() {
        let c = cfg(3, 14, 2, 1);
        let (p, s) = ml_pattern_decode(&vec![0.7; 28], &c).unwrap();
        assert_eq!((p.value(), s), (0, 0.0));
        let (p, s) = ml_pattern_decode(&vec![0.0; 28], &c).unwrap();
        assert_eq!((p.value(), s), (0, 0.0));
        assert!(ml_pattern_decode(&[1.0; 3], &c).is_err());
    }

    #[test]
    fn manchester_rm_path_agrees_with_ml_on_noiseless_input() {
        for (b, l, m) in [(1, 4, 1), (2, 6, 2), (3, 14, 2), (4, 6, 4), (5, 14, 1)] {
            let c = cfg(b, l, m, 1);
            let book = PatternBook::new(&c).unwrap();
            for v in 0..(1u8 << b) {
                let p = Payload::from_value(v, b).unwrap();
                let e: Vec<f64> = ook_pattern(&p, c.e()).iter().map(|&g| f64::from(g)).collect();
                let ml = book.decode(&e).unwrap().0;
                let hard = rm_decode(&manchester_hard_decode(&e), b);
                assert_eq!(ml, hard);
                assert_eq!(ml, p);
            }
        }
    }
}
