//! LP-SS patterns, occasion layout and modulation.

use super::{place_blocks, IqSignal, OfdmEngine, OnSequence, OnSymbolSource, UnitModulusSource, WaveformError, ZcSource};
use crate::config::{LpSsConfig, Numerology, SlotSymbol, SYMBOLS_PER_SLOT, WUS_SUBCARRIERS};
use num_complex::Complex64;

const TABLE_6_1_6: [&str; 4] = ["101010", "010101", "100101", "101001"];
const TABLE_12_2_6: [&str; 4] = [
    "100110011001",
    "011010011001",
    "011001101001",
    "011001011001",
];
const TABLE_16_4_4: [&str; 4] = [
    "0110100110101010",
    "0110101010011010",
    "1010011010101001",
    "1010100110100110",
];

/// The four tabulated sequences of a `(B, M, L)` triple.
pub fn lpss_table(b: usize, m: usize, l: usize) -> Option<[&'static str; 4]> {
    match (b, m, l) {
        (6, 1, 6) => Some(TABLE_6_1_6),
        (12, 2, 6) => Some(TABLE_12_2_6),
        (16, 4, 4) => Some(TABLE_16_4_4),
        _ => None,
    }
}

/// Binary LP-SS of one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSsPattern {
    pub bits: Vec<u8>,
    pub b_lpss: usize,
    pub m_lpss: usize,
    pub l_lpss: usize,
    pub seq_index: usize,
}

impl LpSsPattern {
    pub fn on_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

pub fn lpss_pattern(cfg: &LpSsConfig) -> Result<LpSsPattern, WaveformError> {
    let (b, m, l) = (cfg.b_lpss(), cfg.m_lpss, cfg.l_lpss);
    let unsupported = WaveformError::UnsupportedLpss { b, m, l };
    let row = lpss_table(b, m, l)
        .and_then(|t| t.get(cfg.seq_index).copied())
        .ok_or(unsupported)?;
    Ok(LpSsPattern {
        bits: row.bytes().map(|c| c - b'0').collect(),
        b_lpss: b,
        m_lpss: m,
        l_lpss: l,
        seq_index: cfg.seq_index,
    })
}

/// One LP-SS transmission: `L_lpss` consecutive symbols of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpSsOccasion {
    pub beam: usize,
    pub slot: u64,
    pub start_symbol: usize,
    pub len: usize,
}

impl LpSsOccasion {
    pub fn positions(&self) -> Vec<SlotSymbol> {
        (self.start_symbol..self.start_symbol + self.len)
            .map(|s| SlotSymbol::new(self.slot, s))
            .collect()
    }
}

/// Occasions of period `period_index`. Beams fill the configured start
/// symbols of a slot in order, then move on to the next slot.
pub fn lpss_occasions(
    cfg: &LpSsConfig,
    num: Numerology,
    period_index: u64,
) -> Result<Vec<LpSsOccasion>, WaveformError> {
    let n_starts = cfg.start_symbols.len().max(1);
    let first_ms = u64::from(cfg.offset_ms) + period_index * u64::from(cfg.period_ms);
    let first_slot = first_ms * num.slots_per_ms();
    (0..cfg.n_beams)
        .map(|beam| {
            let start = cfg.start_symbols.get(beam % n_starts).copied().unwrap_or(0);
            if start + cfg.l_lpss > SYMBOLS_PER_SLOT {
                return Err(WaveformError::SlotBoundary {
                    start,
                    len: cfg.l_lpss,
                });
            }
            Ok(LpSsOccasion {
                beam,
                slot: first_slot + (beam / n_starts) as u64,
                start_symbol: start,
                len: cfg.l_lpss,
            })
        })
        .collect()
}

/// Default ON-sequence source: ZC with zero shift when a root is
/// configured, pseudo-random unit-modulus samples otherwise.
pub fn lpss_source(cfg: &LpSsConfig) -> Result<Box<dyn OnSymbolSource>, WaveformError> {
    match cfg.root {
        Some(root) => Ok(Box::new(ZcSource(OnSequence::new(root, 0, cfg.m_zc())?))),
        None if cfg.m_lpss == 1 => Ok(Box::new(UnitModulusSource::new(0))),
        None => Err(WaveformError::MissingRoot),
    }
}

/// Transmits the LP-SS of every beam in period `period_index`. ON blocks come
/// from `source`; see [`lpss_source`] for the default.
pub fn modulate_lpss(
    pat: &LpSsPattern,
    cfg: &LpSsConfig,
    num: Numerology,
    period_index: u64,
    source: &mut dyn OnSymbolSource,
) -> Result<IqSignal, WaveformError> {
    let engine = OfdmEngine::new(num);
    let occasions = lpss_occasions(cfg, num, period_index)?;
    let m = pat.m_lpss;
    let m_zc = WUS_SUBCARRIERS / m;
    let mut positions = Vec::new();
    let mut blocks = Vec::new();
    let mut ook = 0;
    for occ in &occasions {
        for (l, pos) in occ.positions().into_iter().enumerate() {
            let mut s = Vec::with_capacity(WUS_SUBCARRIERS);
            for &b in &pat.bits[l * m..(l + 1) * m] {
                if b == 1 {
                    s.extend(source.on_block(ook, m_zc));
                } else {
                    s.resize(s.len() + m_zc, Complex64::new(0.0, 0.0));
                }
                ook += 1;
            }
            positions.push(pos);
            blocks.push(s);
        }
    }
    // Occasions are laid out in time order already; keep it explicit.
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by_key(|&i| positions[i].linear());
    let positions: Vec<SlotSymbol> = order.iter().map(|&i| positions[i]).collect();
    let blocks: Vec<Vec<Complex64>> = order.into_iter().map(|i| std::mem::take(&mut blocks[i])).collect();
    Ok(place_blocks(&engine, &positions, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::mo_example;

    fn lpss(m: usize, l: usize, idx: usize) -> LpSsConfig {
        let (_, mut c) = mo_example();
        c.m_lpss = m;
        c.l_lpss = l;
        c.seq_index = idx;
        c
    }

    #[test]
    fn table_rows() {
        assert_eq!(lpss_pattern(&lpss(1, 6, 0)).unwrap().bits, vec![1, 0, 1, 0, 1, 0]);
        assert_eq!(
            lpss_pattern(&lpss(4, 4, 3)).unwrap().bits,
            vec![1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0]
        );
        assert_eq!(
            lpss_pattern(&lpss(2, 6, 2)).unwrap().bits,
            vec![0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1]
        );
    }

    #[test]
    fn all_rows_balanced() {
        for (b, m, l) in crate::config::LPSS_TRIPLES {
            for idx in 0..4 {
                let p = lpss_pattern(&lpss(m, l, idx)).unwrap();
                assert_eq!(p.bits.len(), b);
                assert_eq!(p.on_count(), b / 2);
            }
        }
    }

    #[test]
    fn untabulated_triple_rejected() {
        assert_eq!(
            lpss_pattern(&lpss(1, 8, 0)),
            Err(WaveformError::UnsupportedLpss { b: 8, m: 1, l: 8 })
        );
        assert!(lpss_pattern(&lpss(1, 6, 4)).is_err());
    }

    #[test]
    fn occasion_layout_four_beams_two_starts() {
        let (cfg, c) = mo_example();
        let num = cfg.numerology();
        let occ = lpss_occasions(&c, num, 1).unwrap();
        let base = 160 * num.slots_per_ms();
        let got: Vec<(u64, usize)> = occ.iter().map(|o| (o.slot, o.start_symbol)).collect();
        assert_eq!(got, vec![(base, 2), (base, 8), (base + 1, 2), (base + 1, 8)]);
        assert!(occ.iter().all(|o| o.positions().len() == 6));
    }

    #[test]
    fn occasion_crossing_slot_rejected() {
        let (cfg, mut c) = mo_example();
        c.start_symbols = vec![10];
        assert!(matches!(
            lpss_occasions(&c, cfg.numerology(), 0),
            Err(WaveformError::SlotBoundary { start: 10, len: 6 })
        ));
    }

    #[test]
    fn alternating_symbols_for_first_sequence() {
        let (cfg, mut c) = mo_example();
        c.m_lpss = 1;
        c.n_beams = 1;
        c.start_symbols = vec![2];
        let pat = lpss_pattern(&c).unwrap();
        let mut src = lpss_source(&c).unwrap();
        let sig = modulate_lpss(&pat, &c, cfg.numerology(), 0, src.as_mut()).unwrap();
        let energy: Vec<bool> = (2..8)
            .map(|s| {
                let sp = sig.span(SlotSymbol::new(0, s)).unwrap();
                sig.samples[sp.start..sp.start + sp.cp_len + sig.fft_size]
                    .iter()
                    .any(|x| x.norm() > 0.0)
            })
            .collect();
        assert_eq!(energy, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn unspecified_on_uses_hook() {
        let (cfg, mut c) = mo_example();
        c.m_lpss = 1;
        c.root = None;
        c.n_beams = 1;
        let pat = lpss_pattern(&c).unwrap();
        let mut calls = Vec::new();
        let mut hook = |i: usize, n: usize| {
            calls.push(i);
            vec![Complex64::new(1.0, 0.0); n]
        };
        modulate_lpss(&pat, &c, cfg.numerology(), 0, &mut hook).unwrap();
        assert_eq!(calls, vec![0, 2, 4]);
        assert!(lpss_source(&c).is_ok());
        c.m_lpss = 2;
        assert!(lpss_source(&c).is_err());
    }
}
