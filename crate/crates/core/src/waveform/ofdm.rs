//! CP-OFDM synthesis and analysis of the 132-subcarrier WUS band.
//!
//! Convention: the WUS-rate block `s` (132 samples) is transformed with an
//! unnormalized forward DFT. Bin `j` of that DFT is placed on subcarrier
//! `j` for `j < 66` and `j − 132` otherwise, so the band is centered on DC.
//! The grid is synthesized with an unnormalized inverse FFT scaled by
//! `1/132`, which makes the OFDM symbol a band-limited interpolation of `s`
//! with the same amplitude. Analysis inverts both steps exactly.

use super::{IqSignal, SymbolSpan};
use crate::config::{Numerology, SlotSymbol, SYMBOLS_PER_SLOT, WUS_SUBCARRIERS};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// FFT plans for one numerology. Cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct OfdmEngine {
    num: Numerology,
    grid_fwd: Arc<dyn Fft<f64>>,
    grid_inv: Arc<dyn Fft<f64>>,
    band_fwd: Arc<dyn Fft<f64>>,
    band_inv: Arc<dyn Fft<f64>>,
    bins: Vec<usize>,
}

impl std::fmt::Debug for OfdmEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmEngine").field("num", &self.num).finish()
    }
}

impl OfdmEngine {
    pub fn new(num: Numerology) -> Self {
        let mut planner = FftPlanner::new();
        let n = num.fft_size;
        let half = (WUS_SUBCARRIERS / 2) as isize;
        let bins = (0..WUS_SUBCARRIERS as isize)
            .map(|j| {
                let k = if j < half { j } else { j - WUS_SUBCARRIERS as isize };
                k.rem_euclid(n as isize) as usize
            })
            .collect();
        Self {
            num,
            grid_fwd: planner.plan_fft_forward(n),
            grid_inv: planner.plan_fft_inverse(n),
            band_fwd: planner.plan_fft_forward(WUS_SUBCARRIERS),
            band_inv: planner.plan_fft_inverse(WUS_SUBCARRIERS),
            bins,
        }
    }

    pub fn numerology(&self) -> Numerology {
        self.num
    }

    /// FFT bin of each WUS-band DFT output index.
    pub fn band_bins(&self) -> &[usize] {
        &self.bins
    }

    /// Frequency-domain WUS block `S = DFT_132(s)`.
    pub fn band_spectrum(&self, s: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(s.len(), WUS_SUBCARRIERS);
        let mut spec = s.to_vec();
        self.band_fwd.process(&mut spec);
        spec
    }

    /// One OFDM symbol (without CP) carrying the WUS-rate block `s`.
    pub fn wus_symbol(&self, s: &[Complex64]) -> Vec<Complex64> {
        let spec = self.band_spectrum(s);
        let mut grid = vec![Complex64::new(0.0, 0.0); self.num.fft_size];
        for (&bin, &v) in self.bins.iter().zip(&spec) {
            grid[bin] = v;
        }
        self.grid_inv.process(&mut grid);
        let scale = 1.0 / WUS_SUBCARRIERS as f64;
        grid.iter_mut().for_each(|x| *x *= scale);
        grid
    }

    /// Synthesizes whole slots `first_slot..first_slot + n_slots`. `content`
    /// returns the WUS-rate block of a symbol, or `None` for an empty symbol.
    pub fn synthesize<F>(&self, first_slot: u64, n_slots: u64, mut content: F) -> IqSignal
    where
        F: FnMut(SlotSymbol) -> Option<Vec<Complex64>>,
    {
        let n = self.num.fft_size;
        let total: usize = (first_slot..first_slot + n_slots)
            .map(|s| self.num.slot_len(s))
            .sum();
        let mut samples = Vec::with_capacity(total);
        let mut symbols = Vec::with_capacity(n_slots as usize * SYMBOLS_PER_SLOT);
        for slot in first_slot..first_slot + n_slots {
            for sym in 0..SYMBOLS_PER_SLOT {
                let pos = SlotSymbol::new(slot, sym);
                let cp = self.num.cp_len(pos);
                symbols.push(SymbolSpan {
                    pos,
                    start: samples.len(),
                    cp_len: cp,
                });
                match content(pos) {
                    Some(s) => {
                        let body = self.wus_symbol(&s);
                        samples.extend_from_slice(&body[n - cp..]);
                        samples.extend_from_slice(&body);
                    }
                    None => samples.resize(samples.len() + cp + n, Complex64::new(0.0, 0.0)),
                }
            }
        }
        IqSignal {
            samples,
            sample_rate_hz: self.num.sample_rate_hz(),
            scs_khz: self.num.scs_khz,
            fft_size: n,
            symbols,
        }
    }

    /// Recovers the WUS-rate block of one symbol: drop the CP, FFT, select
    /// the 132 band bins, inverse 132-point DFT.
    pub fn wus_band_samples(&self, y: &IqSignal, span: &SymbolSpan) -> Vec<Complex64> {
        let n = self.num.fft_size;
        let start = span.start + span.cp_len;
        let mut grid: Vec<Complex64> = (start..start + n)
            .map(|i| y.samples.get(i).copied().unwrap_or_default())
            .collect();
        self.grid_fwd.process(&mut grid);
        let mut band: Vec<Complex64> = self.bins.iter().map(|&b| grid[b]).collect();
        self.band_inv.process(&mut band);
        let scale = 1.0 / n as f64;
        band.iter_mut().for_each(|x| *x *= scale);
        band
    }
}
