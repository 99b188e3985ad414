//! LP-RSSI, LP-RSRP and LP-RSRQ over one LP-SS occasion.

use crate::sim::fmt_sig;
use super::{block_energy, ReceiverError};
use crate::config::WUS_SUBCARRIERS;
use crate::waveform::{IqSignal, LpSsOccasion, LpSsPattern, OfdmEngine};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Normalization of LP-RSSI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RssiNormalization {
    /// `(1/B_lpss)·Σ_all ‖y_i‖²`. A noiseless balanced occasion then has
    /// RSRQ = 2.
    #[default]
    PerSymbol,
    /// `(1/|S_ON|)·Σ_all ‖y_i‖²`, which bounds RSRQ by 1.
    PerOnSymbol,
}

impl FromStr for RssiNormalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-symbol" => Ok(Self::PerSymbol),
            "per-on-symbol" => Ok(Self::PerOnSymbol),
            _ => Err(format!("unknown RSSI normalization {s:?}, expected per-symbol or per-on-symbol")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementReport {
    pub lp_rssi: f64,
    pub lp_rsrp: f64,
    /// `lp_rsrp / lp_rssi`, or 0 when there is no energy at all.
    pub lp_rsrq: f64,
}

impl fmt::Display for MeasurementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lp_rssi={}", fmt_sig(self.lp_rssi))?;
        writeln!(f, "lp_rsrp={}", fmt_sig(self.lp_rsrp))?;
        write!(f, "lp_rsrq={}", fmt_sig(self.lp_rsrq))
    }
}

/// Measurements from per-OOK-symbol energies aligned with `pat`.
pub fn lp_measure(energies: &[f64], pat: &LpSsPattern, norm: RssiNormalization) -> MeasurementReport {
    let n = pat.bits.len().min(energies.len());
    let total: f64 = energies[..n].iter().sum();
    let on_sum: f64 = energies[..n]
        .iter()
        .zip(&pat.bits)
        .filter(|(_, &b)| b == 1)
        .map(|(e, _)| e)
        .sum();
    let n_on = pat.bits[..n].iter().filter(|&&b| b == 1).count().max(1) as f64;
    let lp_rssi = match norm {
        RssiNormalization::PerSymbol => total / n.max(1) as f64,
        RssiNormalization::PerOnSymbol => total / n_on,
    };
    let lp_rsrp = on_sum / n_on;
    let lp_rsrq = if lp_rssi > 0.0 { lp_rsrp / lp_rssi } else { 0.0 };
    MeasurementReport {
        lp_rssi,
        lp_rsrp,
        lp_rsrq,
    }
}

/// Measurements over one occasion of `y`, symbol boundaries taken as known.
pub fn lp_measure_signal(
    y: &IqSignal,
    pat: &LpSsPattern,
    occ: &LpSsOccasion,
    norm: RssiNormalization,
) -> Result<MeasurementReport, ReceiverError> {
    let engine = OfdmEngine::new(y.numerology());
    let m_zc = WUS_SUBCARRIERS / pat.m_lpss;
    let mut e = Vec::with_capacity(pat.b_lpss);
    for pos in occ.positions() {
        let span = y.span(pos).ok_or(ReceiverError::ScheduleMismatch(pos))?;
        e.extend(engine.wus_band_samples(y, span).chunks_exact(m_zc).map(block_energy));
    }
    Ok(lp_measure(&e, pat, norm))
}
