//! Coarse LP-SS timing in the energy domain.
//!
//! The balanced pattern is mapped to ±1 and slid over the per-OOK-symbol
//! energies. Each lag is scored with the Pearson correlation of the window,
//! which is invariant to gain and to a common noise floor.

use super::{block_energy, ReceiverError};
use crate::config::{SlotSymbol, WUS_SUBCARRIERS};
use crate::waveform::{IqSignal, LpSsPattern, OfdmEngine};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncEstimate {
    /// Start of the pattern relative to the nominal position, in OOK symbols.
    pub offset: i64,
    /// Correlation at the chosen lag, in `[-1, 1]`.
    pub peak: f64,
}

/// Pearson correlation; 0 when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n == 0 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx > 0.0 && syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// Searches lags `-max_lag..=max_lag` around `nominal`. Lags whose window
/// leaves `energies` are skipped; ties go to the earliest lag.
pub fn lpss_sync_energies(energies: &[f64], pat: &LpSsPattern, nominal: usize, max_lag: usize) -> SyncEstimate {
    let reference: Vec<f64> = pat.bits.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect();
    let b = reference.len();
    let mut best = SyncEstimate {
        offset: 0,
        peak: f64::NEG_INFINITY,
    };
    for lag in -(max_lag as i64)..=max_lag as i64 {
        let start = nominal as i64 + lag;
        if start < 0 || start as usize + b > energies.len() {
            continue;
        }
        let start = start as usize;
        let c = pearson(&energies[start..start + b], &reference);
        if c > best.peak {
            best = SyncEstimate { offset: lag, peak: c };
        }
    }
    if best.peak == f64::NEG_INFINITY {
        best.peak = 0.0;
    }
    best
}

/// Per-OOK-symbol energies of the OFDM symbols at `positions`.
pub fn lpss_energies(
    engine: &OfdmEngine,
    y: &IqSignal,
    positions: &[SlotSymbol],
    m: usize,
) -> Result<Vec<f64>, ReceiverError> {
    let m_zc = WUS_SUBCARRIERS / m;
    let mut out = Vec::with_capacity(positions.len() * m);
    for pos in positions {
        let span = y.span(*pos).ok_or(ReceiverError::ScheduleMismatch(*pos))?;
        let band = engine.wus_band_samples(y, span);
        out.extend(band.chunks_exact(m_zc).map(block_energy));
    }
    Ok(out)
}

/// Timing estimate over a search window. The nominal pattern start sits in
/// the middle of the window; lags up to one pattern length either side are
/// tried (fewer if the window is short).
pub fn lpss_sync(y: &IqSignal, pat: &LpSsPattern, window: &[SlotSymbol]) -> Result<SyncEstimate, ReceiverError> {
    let engine = OfdmEngine::new(y.numerology());
    let e = lpss_energies(&engine, y, window, pat.m_lpss)?;
    let slack = e.len().saturating_sub(pat.b_lpss);
    let nominal = slack / 2;
    Ok(lpss_sync_energies(&e, pat, nominal, pat.b_lpss.min(nominal)))
}
