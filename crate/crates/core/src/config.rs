//! Deployment parameters for LP-WUS and LP-SS.
//!
//! [`LpWusConfig`] and [`LpSsConfig`] are plain data. Domain restrictions on
//! single fields are enforced when a file is parsed (so that a bad value is
//! reported with its field name and line), while [`validate`] checks the full
//! set of constraints, including cross-field ones, and reports every
//! violation it finds instead of stopping at the first.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Width of the LP-WUS band in subcarriers.
pub const WUS_SUBCARRIERS: usize = 132;
/// OFDM symbols per slot (normal cyclic prefix).
pub const SYMBOLS_PER_SLOT: usize = 14;
/// Period of the slot availability bitmap, in slots.
pub const SLOT_BITMAP_LEN: usize = 10;
/// Number of distinct values a 5-bit payload can carry.
pub const MAX_CODEPOINTS: usize = 32;
/// Maximum payload size in bits.
pub const MAX_PAYLOAD_BITS: usize = 5;
/// Version written to and expected in configuration files.
pub const SCHEMA_VERSION: u32 = 1;
/// Frame number space.
pub const SFN_MODULUS: u32 = 1024;

/// Errors raised while reading or writing configuration files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Syntax or schema error; the message carries field, line and column.
    #[error("config schema error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
}

/// Absolute position of an OFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSymbol {
    pub slot: u64,
    pub symbol: usize,
}

impl SlotSymbol {
    pub fn new(slot: u64, symbol: usize) -> Self {
        Self { slot, symbol }
    }

    /// Linear symbol index counted from slot 0, symbol 0.
    pub fn linear(self) -> u64 {
        self.slot * SYMBOLS_PER_SLOT as u64 + self.symbol as u64
    }

    pub fn from_linear(idx: u64) -> Self {
        Self {
            slot: idx / SYMBOLS_PER_SLOT as u64,
            symbol: (idx % SYMBOLS_PER_SLOT as u64) as usize,
        }
    }
}

impl fmt::Display for SlotSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.slot, self.symbol)
    }
}

/// Availability bitmap, written in files as a string of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap(pub Vec<bool>);

impl Bitmap {
    pub fn all_ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    /// Bitmap of `len` entries with the listed positions cleared.
    pub fn with_cleared(len: usize, cleared: &[usize]) -> Self {
        let mut bits = vec![true; len];
        for &i in cleared {
            bits[i] = false;
        }
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, idx: usize) -> bool {
        self.0.get(idx).copied().unwrap_or(false)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for Bitmap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bitmap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!(
                    "bitmap may only contain '0' and '1', found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bitmap)
    }
}

/// Subcarrier spacing and FFT size of the OFDM grid the signals live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Numerology {
    pub scs_khz: u32,
    pub fft_size: usize,
}

impl Numerology {
    /// Slots per millisecond (1 for 15 kHz, 2 for 30 kHz).
    pub fn slots_per_ms(&self) -> u64 {
        u64::from(self.scs_khz / 15)
    }

    pub fn slots_per_frame(&self) -> u64 {
        10 * self.slots_per_ms()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        f64::from(self.scs_khz) * 1e3 * self.fft_size as f64
    }

    /// Cyclic prefix length for a symbol. Normal-CP proportions of a 2048-point
    /// grid scaled to `fft_size`; the first symbol of every half subframe
    /// carries the longer prefix.
    pub fn cp_len(&self, pos: SlotSymbol) -> usize {
        let base = 144 * self.fft_size / 2048;
        let extra = 16 * self.fft_size / 2048;
        let half_subframe = 7 * self.slots_per_ms() as usize;
        if pos.linear() % half_subframe as u64 == 0 {
            base + extra
        } else {
            base
        }
    }

    pub fn slot_len(&self, slot: u64) -> usize {
        (0..SYMBOLS_PER_SLOT)
            .map(|s| self.fft_size + self.cp_len(SlotSymbol::new(slot, s)))
            .sum()
    }
}

/// Thresholds of the detection gate, filled in by calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// False-alarm rate the thresholds were calibrated for.
    pub target_far: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ed_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd_threshold: Option<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            target_far: 0.01,
            ed_threshold: None,
            cd_threshold: None,
        }
    }
}

/// Full parameterization of one LP-WUS deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpWusConfig {
    /// OOK symbols per OFDM symbol.
    #[serde(rename = "M", deserialize_with = "domain::m")]
    pub m: usize,
    /// Actual WUS duration in OFDM symbols.
    #[serde(rename = "L")]
    pub l: usize,
    /// Nominal MO duration, counted in available OFDM symbols.
    #[serde(rename = "L_MO")]
    pub l_mo: usize,
    #[serde(rename = "N_LO_MO", deserialize_with = "domain::n_lo_mo")]
    pub n_lo_mo: usize,
    #[serde(rename = "N_PO_LO", deserialize_with = "domain::n_po_lo")]
    pub n_po_lo: usize,
    #[serde(rename = "N_SG_PO")]
    pub n_sg_po: usize,
    /// Explicit payload size; derived from the codepoint count when absent.
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(rename = "N_seq", deserialize_with = "domain::n_seq")]
    pub n_seq: usize,
    #[serde(rename = "N_root", deserialize_with = "domain::n_root")]
    pub n_root: usize,
    pub roots: Vec<u32>,
    /// Beams the MOs are spread over.
    #[serde(default = "one")]
    pub n_beams: usize,
    pub first_mo_offset_symbols: u64,
    pub slot_bitmap: Bitmap,
    pub symbol_bitmap: Bitmap,
    /// Symbols occupied by SS/PBCH, given as (slot modulo `ssb_period_slots`, symbol).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ssb_symbols: Vec<SlotSymbol>,
    #[serde(default = "default_ssb_period")]
    pub ssb_period_slots: u64,
    #[serde(deserialize_with = "domain::scs_khz")]
    pub scs_khz: u32,
    #[serde(default = "default_fft_size")]
    pub fft_size: usize,
    #[serde(rename = "T_drx_ms", deserialize_with = "domain::t_drx_ms")]
    pub t_drx_ms: u32,
    /// Paging frames per DRX cycle.
    #[serde(rename = "N_pf")]
    pub n_pf: u32,
    /// Paging occasions per paging frame.
    #[serde(rename = "N_s", deserialize_with = "domain::n_s")]
    pub n_s: usize,
    #[serde(rename = "T_po_lo_ms")]
    pub t_po_lo_ms: Vec<u32>,
    #[serde(default)]
    pub detection: DetectionConfig,
}

fn one() -> usize {
    1
}

fn default_ssb_period() -> u64 {
    40
}

fn default_fft_size() -> usize {
    256
}

impl LpWusConfig {
    /// Length of one OOK symbol in samples at the WUS band rate.
    pub fn m_zc(&self) -> usize {
        WUS_SUBCARRIERS / self.m
    }

    pub fn n_zc(&self) -> usize {
        largest_prime_below(self.m_zc())
    }

    /// Total OOK symbols `G = L·M`.
    pub fn g(&self) -> usize {
        self.l * self.m
    }

    /// Manchester pairs / ON symbols, `E = G/2`.
    pub fn e(&self) -> usize {
        self.g() / 2
    }

    pub fn n_seq_max(&self) -> usize {
        n_seq_max(self.m)
    }

    /// Bits carried per ON symbol by sequence selection.
    pub fn bits_per_sequence(&self) -> usize {
        self.n_seq.max(1).trailing_zeros() as usize
    }

    /// Number of legal codepoints: one per subgroup plus one "all" per PO.
    pub fn codepoint_count(&self) -> usize {
        self.n_po_lo * (self.n_sg_po + 1)
    }

    pub fn derived_payload_bits(&self) -> usize {
        ceil_log2(self.codepoint_count()).max(1)
    }

    pub fn payload_bits(&self) -> usize {
        self.b.unwrap_or_else(|| self.derived_payload_bits())
    }

    pub fn numerology(&self) -> Numerology {
        Numerology {
            scs_khz: self.scs_khz,
            fft_size: self.fft_size,
        }
    }

    /// DRX cycle length in radio frames.
    pub fn t_drx_frames(&self) -> u32 {
        self.t_drx_ms / 10
    }

    pub fn is_symbol_available(&self, pos: SlotSymbol) -> bool {
        self.slot_bitmap.get((pos.slot % SLOT_BITMAP_LEN as u64) as usize)
            && self.symbol_bitmap.get(pos.symbol)
    }

    pub fn is_ssb_symbol(&self, pos: SlotSymbol) -> bool {
        let slot = pos.slot % self.ssb_period_slots.max(1);
        self.ssb_symbols
            .iter()
            .any(|s| s.slot == slot && s.symbol == pos.symbol)
    }
}

/// Parameters of the LP-SS of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSsConfig {
    #[serde(rename = "M_lpss", deserialize_with = "domain::m_lpss")]
    pub m_lpss: usize,
    #[serde(rename = "L_lpss", deserialize_with = "domain::l_lpss")]
    pub l_lpss: usize,
    pub seq_index: usize,
    #[serde(deserialize_with = "domain::period_ms")]
    pub period_ms: u32,
    pub offset_ms: u32,
    pub start_symbols: Vec<usize>,
    /// Absent means an unspecified ON-sequence (allowed for `M_lpss = 1` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u32>,
    pub n_beams: usize,
}

impl LpSsConfig {
    pub fn b_lpss(&self) -> usize {
        self.m_lpss * self.l_lpss
    }

    pub fn m_zc(&self) -> usize {
        WUS_SUBCARRIERS / self.m_lpss
    }

    pub fn n_zc(&self) -> usize {
        largest_prime_below(self.m_zc())
    }
}

/// `(B_lpss, M_lpss, L_lpss)` triples with tabulated sequences.
pub const LPSS_TRIPLES: [(usize, usize, usize); 3] = [(6, 1, 6), (12, 2, 6), (16, 4, 4)];

/// Largest number of ON-sequences for a given `M`.
pub fn n_seq_max(m: usize) -> usize {
    match m {
        1 => 16,
        2 => 8,
        4 => 4,
        _ => 0,
    }
}

/// Largest subgroup count per PO for a given number of POs per LO.
pub fn n_sg_max_po(n_po_lo: usize) -> usize {
    match n_po_lo {
        1 => 31,
        2 => 15,
        4 => 7,
        _ => 0,
    }
}

/// Largest prime strictly below `n` (0 if none).
pub fn largest_prime_below(n: usize) -> usize {
    (2..n).rev().find(|&p| is_prime(p)).unwrap_or(0)
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

mod domain {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer};

    fn one_of<'de, D, T>(d: D, field: &str, allowed: &[T]) -> Result<T, D::Error>
    where
        D: Deserializer<'de>,
        T: Deserialize<'de> + PartialEq + Copy + std::fmt::Debug + std::fmt::Display,
    {
        let v = T::deserialize(d)?;
        if allowed.contains(&v) {
            Ok(v)
        } else {
            Err(D::Error::custom(format!(
                "invalid {field}: {v}, expected one of {allowed:?}"
            )))
        }
    }

    macro_rules! field_domain {
        ($name:ident, $field:literal, $ty:ty, [$($v:expr),+]) => {
            pub(super) fn $name<'de, D: Deserializer<'de>>(d: D) -> Result<$ty, D::Error> {
                one_of::<D, $ty>(d, $field, &[$($v),+])
            }
        };
    }

    field_domain!(m, "M", usize, [1, 2, 4]);
    field_domain!(m_lpss, "M_lpss", usize, [1, 2, 4]);
    field_domain!(l_lpss, "L_lpss", usize, [4, 6, 8]);
    field_domain!(n_lo_mo, "N_LO_MO", usize, [1, 2, 3, 4]);
    field_domain!(n_po_lo, "N_PO_LO", usize, [1, 2, 4]);
    field_domain!(n_seq, "N_seq", usize, [1, 2, 4, 8, 16]);
    field_domain!(n_root, "N_root", usize, [1, 2]);
    field_domain!(n_s, "N_s", usize, [1, 2, 4]);
    field_domain!(scs_khz, "scs_khz", u32, [15, 30]);
    field_domain!(t_drx_ms, "T_drx_ms", u32, [320, 640, 1280, 2560]);
    field_domain!(period_ms, "period_ms", u32, [160, 320]);
}

/// One violated constraint, naming the offending field(s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub fields: Vec<&'static str>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.fields.join(", "), self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// True if some violation names `field`.
    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.fields.contains(&field))
    }

    fn push(&mut self, fields: &[&'static str], message: impl Into<String>) {
        self.violations.push(Violation {
            fields: fields.to_vec(),
            message: message.into(),
        });
    }
}

/// Checks every constraint on a deployment and returns all violations.
pub fn validate(cfg: &LpWusConfig, lpss: &LpSsConfig) -> ValidationResult {
    let mut r = ValidationResult::default();
    validate_wus(cfg, &mut r);
    validate_lpss(lpss, &mut r);

    if [1, 2, 4].contains(&cfg.m) && lpss.m_lpss < cfg.m {
        r.push(
            &["M_lpss", "M"],
            format!("M_lpss={} must not be smaller than M={}", lpss.m_lpss, cfg.m),
        );
    }
    if cfg.n_beams > lpss.n_beams {
        r.push(
            &["n_beams"],
            format!(
                "LP-WUS beams ({}) must be a subset of the {} LP-SS beams",
                cfg.n_beams, lpss.n_beams
            ),
        );
    }
    r
}

fn validate_wus(cfg: &LpWusConfig, r: &mut ValidationResult) {
    let m_ok = [1, 2, 4].contains(&cfg.m);
    if !m_ok {
        r.push(&["M"], format!("M={} not in {{1,2,4}}", cfg.m));
    }
    if cfg.l == 0 {
        r.push(&["L"], "L must be at least 1");
    }
    let g = cfg.l * cfg.m;
    if g < 2 || g % 2 != 0 {
        r.push(
            &["L", "M"],
            format!("G=L*M={g} must be an even number of OOK symbols >= 2"),
        );
    }
    if cfg.l_mo == 0 {
        r.push(&["L_MO"], "L_MO must be at least 1");
    }
    if !(1..=4).contains(&cfg.n_lo_mo) {
        r.push(&["N_LO_MO"], format!("N_LO_MO={} not in 1..=4", cfg.n_lo_mo));
    }

    let po_ok = [1, 2, 4].contains(&cfg.n_po_lo);
    if !po_ok {
        r.push(&["N_PO_LO"], format!("N_PO_LO={} not in {{1,2,4}}", cfg.n_po_lo));
    }
    if cfg.n_sg_po == 0 {
        r.push(&["N_SG_PO"], "N_SG_PO must be at least 1");
    }
    if po_ok && cfg.n_sg_po > n_sg_max_po(cfg.n_po_lo) {
        r.push(
            &["N_SG_PO", "N_PO_LO"],
            format!(
                "N_SG_PO={} exceeds N_SG_max_PO={} for N_PO_LO={}",
                cfg.n_sg_po,
                n_sg_max_po(cfg.n_po_lo),
                cfg.n_po_lo
            ),
        );
    }
    let budget = cfg.n_po_lo * (cfg.n_sg_po + 1);
    if budget > MAX_CODEPOINTS {
        r.push(
            &["N_PO_LO", "N_SG_PO"],
            format!(
                "codepoint budget {}*{} = {budget} > {MAX_CODEPOINTS}",
                cfg.n_po_lo,
                cfg.n_sg_po + 1
            ),
        );
    }
    if let Some(b) = cfg.b {
        if !(1..=MAX_PAYLOAD_BITS).contains(&b) {
            r.push(&["B"], format!("B={b} not in 1..=5"));
        } else if budget <= MAX_CODEPOINTS && b < cfg.derived_payload_bits() {
            r.push(
                &["B"],
                format!(
                    "B={b} is smaller than the {} bits needed for {budget} codepoints",
                    cfg.derived_payload_bits()
                ),
            );
        }
    }

    if ![1, 2, 4, 8, 16].contains(&cfg.n_seq) {
        r.push(&["N_seq"], format!("N_seq={} not in {{1,2,4,8,16}}", cfg.n_seq));
    } else if m_ok && cfg.n_seq > n_seq_max(cfg.m) {
        r.push(
            &["N_seq", "M"],
            format!(
                "N_seq exceeds N_seq_max={} for M={}",
                n_seq_max(cfg.m),
                cfg.m
            ),
        );
    }
    let root_count_ok = [1, 2].contains(&cfg.n_root);
    if !root_count_ok {
        r.push(&["N_root"], format!("N_root={} not in {{1,2}}", cfg.n_root));
    } else if cfg.n_seq % cfg.n_root != 0 {
        r.push(
            &["N_seq", "N_root"],
            format!("N_seq={} is not a multiple of N_root={}", cfg.n_seq, cfg.n_root),
        );
    }
    if cfg.roots.len() != cfg.n_root {
        r.push(
            &["roots", "N_root"],
            format!("{} roots listed but N_root={}", cfg.roots.len(), cfg.n_root),
        );
    }
    if m_ok {
        let n_zc = cfg.n_zc() as u32;
        for &q in &cfg.roots {
            if q == 0 || q >= n_zc {
                r.push(&["roots"], format!("root {q} not in 1..{}", n_zc - 1));
            }
        }
    }
    for (i, q) in cfg.roots.iter().enumerate() {
        if cfg.roots[..i].contains(q) {
            r.push(&["roots"], format!("root {q} listed twice"));
        }
    }
    if cfg.n_beams == 0 || cfg.n_beams > 8 {
        r.push(&["n_beams"], format!("n_beams={} not in 1..=8", cfg.n_beams));
    }

    if cfg.slot_bitmap.len() != SLOT_BITMAP_LEN {
        r.push(
            &["slot_bitmap"],
            format!("slot_bitmap has {} entries, expected {SLOT_BITMAP_LEN}", cfg.slot_bitmap.len()),
        );
    } else if cfg.slot_bitmap.count_ones() == 0 {
        r.push(&["slot_bitmap"], "no slot is available");
    }
    if cfg.symbol_bitmap.len() != SYMBOLS_PER_SLOT {
        r.push(
            &["symbol_bitmap"],
            format!(
                "symbol_bitmap has {} entries, expected {SYMBOLS_PER_SLOT}",
                cfg.symbol_bitmap.len()
            ),
        );
    } else if cfg.symbol_bitmap.count_ones() == 0 {
        r.push(&["symbol_bitmap"], "no symbol is available");
    }
    if cfg.ssb_period_slots == 0 {
        r.push(&["ssb_period_slots"], "ssb_period_slots must be positive");
    }
    for s in &cfg.ssb_symbols {
        if s.symbol >= SYMBOLS_PER_SLOT || s.slot >= cfg.ssb_period_slots.max(1) {
            r.push(&["ssb_symbols"], format!("SS/PBCH symbol {s} outside the SSB period"));
        }
    }

    if ![15, 30].contains(&cfg.scs_khz) {
        r.push(&["scs_khz"], format!("scs_khz={} not in {{15,30}}", cfg.scs_khz));
    }
    if cfg.fft_size < 256 || !cfg.fft_size.is_power_of_two() {
        r.push(
            &["fft_size"],
            format!("fft_size={} must be a power of two >= 256", cfg.fft_size),
        );
    }
    if ![320, 640, 1280, 2560].contains(&cfg.t_drx_ms) {
        r.push(&["T_drx_ms"], format!("T_drx_ms={} not in {{320,640,1280,2560}}", cfg.t_drx_ms));
    } else if cfg.n_pf == 0 || cfg.t_drx_frames() % cfg.n_pf != 0 {
        r.push(
            &["N_pf", "T_drx_ms"],
            format!(
                "N_pf={} must divide the DRX cycle of {} frames",
                cfg.n_pf,
                cfg.t_drx_frames()
            ),
        );
    }
    if ![1, 2, 4].contains(&cfg.n_s) {
        r.push(&["N_s"], format!("N_s={} not in {{1,2,4}}", cfg.n_s));
    } else {
        let expected = if cfg.n_s > cfg.n_po_lo { cfg.n_s } else { 1 };
        if cfg.t_po_lo_ms.len() != expected {
            r.push(
                &["T_po_lo_ms", "N_s"],
                format!(
                    "{} LO offsets listed, expected {expected} for N_s={} and N_PO_LO={}",
                    cfg.t_po_lo_ms.len(),
                    cfg.n_s,
                    cfg.n_po_lo
                ),
            );
        }
    }

    let far = cfg.detection.target_far;
    if !(far > 0.0 && far < 1.0) {
        r.push(&["detection.target_far"], format!("target_far={far} not in (0,1)"));
    }
}

fn validate_lpss(lpss: &LpSsConfig, r: &mut ValidationResult) {
    let m_ok = [1, 2, 4].contains(&lpss.m_lpss);
    if !m_ok {
        r.push(&["M_lpss"], format!("M_lpss={} not in {{1,2,4}}", lpss.m_lpss));
    }
    if ![4, 6, 8].contains(&lpss.l_lpss) {
        r.push(&["L_lpss"], format!("L_lpss={} not in {{4,6,8}}", lpss.l_lpss));
    }
    let triple = (lpss.b_lpss(), lpss.m_lpss, lpss.l_lpss);
    if !LPSS_TRIPLES.contains(&triple) {
        r.push(
            &["M_lpss", "L_lpss"],
            format!(
                "(B_lpss, M_lpss, L_lpss) = {triple:?} has no specified sequence; supported: {LPSS_TRIPLES:?}"
            ),
        );
    }
    if lpss.seq_index >= 4 {
        r.push(&["seq_index"], format!("seq_index={} not in 0..4", lpss.seq_index));
    }
    if ![160, 320].contains(&lpss.period_ms) {
        r.push(&["period_ms"], format!("period_ms={} not in {{160,320}}", lpss.period_ms));
    } else if lpss.offset_ms >= lpss.period_ms {
        r.push(
            &["offset_ms"],
            format!("offset_ms={} must be below period_ms={}", lpss.offset_ms, lpss.period_ms),
        );
    }
    match lpss.start_symbols.len() {
        1 | 2 => {
            for &s in &lpss.start_symbols {
                if s + lpss.l_lpss > SYMBOLS_PER_SLOT {
                    r.push(
                        &["start_symbols", "L_lpss"],
                        format!(
                            "occasion starting at symbol {s} with {} symbols crosses the slot boundary",
                            lpss.l_lpss
                        ),
                    );
                }
            }
            if let [a, b] = lpss.start_symbols[..] {
                let (lo, hi) = (a.min(b), a.max(b));
                if lo + lpss.l_lpss > hi {
                    r.push(&["start_symbols"], "the two LP-SS occasions of a slot overlap");
                }
            }
        }
        n => r.push(&["start_symbols"], format!("{n} start symbols given, expected 1 or 2")),
    }
    match lpss.root {
        None if lpss.m_lpss != 1 => r.push(
            &["root", "M_lpss"],
            "root may only be omitted when M_lpss = 1",
        ),
        Some(q) if m_ok && (q == 0 || q as usize >= lpss.n_zc()) => r.push(
            &["root"],
            format!("root {q} not in 1..{}", lpss.n_zc() - 1),
        ),
        _ => {}
    }
    if lpss.n_beams == 0 || lpss.n_beams > 8 {
        r.push(&["n_beams"], format!("LP-SS n_beams={} not in 1..=8", lpss.n_beams));
    }
}

/// On-disk layout of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    lp_wus: LpWusConfig,
    lp_ss: LpSsConfig,
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<(LpWusConfig, LpSsConfig), ConfigError> {
    let file: ConfigFile = serde_json::from_str(text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::SchemaVersion {
            found: file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    Ok((file.lp_wus, file.lp_ss))
}

pub fn config_to_string(cfg: &LpWusConfig, lpss: &LpSsConfig) -> String {
    let file = ConfigFile {
        schema_version: SCHEMA_VERSION,
        lp_wus: cfg.clone(),
        lp_ss: lpss.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("config serializes");
    s.push('\n');
    s
}

pub fn load_config(path: impl AsRef<Path>) -> Result<(LpWusConfig, LpSsConfig), ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn save_config(
    path: impl AsRef<Path>,
    cfg: &LpWusConfig,
    lpss: &LpSsConfig,
) -> Result<(), ConfigError> {
    let path = path.as_ref();
    std::fs::write(path, config_to_string(cfg, lpss)).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Monitoring-occasion example with `L_MO = 10`, `L = 6`, a 28-symbol
/// offset, symbols 0, 1 and 13 masked, and two SS/PBCH blocks in slot 4.
pub fn mo_example() -> (LpWusConfig, LpSsConfig) {
    let cfg = LpWusConfig {
        m: 2,
        l: 6,
        l_mo: 10,
        n_lo_mo: 4,
        n_po_lo: 1,
        n_sg_po: 7,
        b: None,
        n_seq: 2,
        n_root: 1,
        roots: vec![1],
        n_beams: 1,
        first_mo_offset_symbols: 28,
        slot_bitmap: Bitmap::all_ones(SLOT_BITMAP_LEN),
        symbol_bitmap: Bitmap::with_cleared(SYMBOLS_PER_SLOT, &[0, 1, 13]),
        ssb_symbols: [2, 3, 4, 5, 8, 9, 10, 11]
            .into_iter()
            .map(|s| SlotSymbol::new(4, s))
            .collect(),
        ssb_period_slots: 40,
        scs_khz: 30,
        fft_size: 256,
        t_drx_ms: 320,
        n_pf: 4,
        n_s: 1,
        t_po_lo_ms: vec![80],
        detection: DetectionConfig::default(),
    };
    let lpss = LpSsConfig {
        m_lpss: 2,
        l_lpss: 6,
        seq_index: 0,
        period_ms: 160,
        offset_ms: 0,
        start_symbols: vec![2, 8],
        root: Some(1),
        n_beams: 4,
    };
    (cfg, lpss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maximal() -> (LpWusConfig, LpSsConfig) {
        let (mut cfg, mut lpss) = mo_example();
        cfg.m = 1;
        cfg.l = 14;
        cfg.n_seq = 1;
        cfg.n_root = 1;
        cfg.n_po_lo = 1;
        cfg.n_sg_po = 31;
        cfg.slot_bitmap = Bitmap::all_ones(10);
        cfg.symbol_bitmap = Bitmap::all_ones(14);
        cfg.ssb_symbols.clear();
        lpss.m_lpss = 1;
        lpss.l_lpss = 6;
        (cfg, lpss)
    }

    #[test]
    fn example_config_is_valid() {
        let (cfg, lpss) = mo_example();
        let r = validate(&cfg, &lpss);
        assert!(r.is_ok(), "{:?}", r.violations);
        assert_eq!(cfg.payload_bits(), 3);
    }

    #[test]
    fn maximal_configuration_is_valid() {
        let (cfg, lpss) = maximal();
        let r = validate(&cfg, &lpss);
        assert!(r.is_ok(), "{:?}", r.violations);
        assert_eq!(cfg.payload_bits(), 5);
    }

    #[test]
    fn too_many_sequences_for_m4() {
        let (mut cfg, mut lpss) = mo_example();
        cfg.m = 4;
        cfg.l = 4;
        cfg.n_seq = 16;
        lpss.m_lpss = 4;
        lpss.l_lpss = 4;
        let r = validate(&cfg, &lpss);
        assert!(r
            .violations
            .iter()
            .any(|v| v.message.contains("N_seq exceeds N_seq_max=4")));
    }

    #[test]
    fn codepoint_budget_violation() {
        let (mut cfg, lpss) = mo_example();
        cfg.n_po_lo = 4;
        cfg.n_sg_po = 15;
        let r = validate(&cfg, &lpss);
        assert!(r
            .violations
            .iter()
            .any(|v| v.message.contains("codepoint budget 4*16")));
        assert!(r.mentions("N_SG_PO"));
    }

    #[test]
    fn explicit_b_below_derived() {
        let (mut cfg, lpss) = mo_example();
        cfg.b = Some(2);
        assert!(validate(&cfg, &lpss).mentions("B"));
        cfg.b = Some(5);
        assert!(validate(&cfg, &lpss).is_ok());
    }

    #[test]
    fn derived_payload_bits() {
        let (mut cfg, _) = mo_example();
        for (po, sg, b) in [(1, 1, 1), (1, 3, 2), (1, 7, 3), (2, 15, 5), (4, 7, 5), (2, 1, 2)] {
            cfg.n_po_lo = po;
            cfg.n_sg_po = sg;
            assert_eq!(cfg.derived_payload_bits(), b, "({po},{sg})");
        }
    }

    #[test]
    fn lpss_root_rules() {
        let (cfg, mut lpss) = mo_example();
        lpss.root = None;
        assert!(validate(&cfg, &lpss).mentions("root"));
        let (mut cfg, mut lpss) = maximal();
        lpss.root = None;
        assert!(validate(&cfg, &lpss).is_ok());
        cfg.m = 2;
        cfg.n_seq = 1;
        assert!(validate(&cfg, &lpss).mentions("M_lpss"));
    }

    #[test]
    fn lpss_untabulated_triple() {
        let (cfg, mut lpss) = mo_example();
        lpss.l_lpss = 8;
        lpss.start_symbols = vec![2];
        assert!(validate(&cfg, &lpss).mentions("L_lpss"));
    }

    #[test]
    fn zc_lengths() {
        assert_eq!(largest_prime_below(132), 131);
        assert_eq!(largest_prime_below(66), 61);
        assert_eq!(largest_prime_below(33), 31);
    }

    #[test]
    fn cp_lengths_scale_with_fft() {
        let n = Numerology { scs_khz: 30, fft_size: 256 };
        assert_eq!(n.cp_len(SlotSymbol::new(0, 0)), 20);
        assert_eq!(n.cp_len(SlotSymbol::new(0, 1)), 18);
        assert_eq!(n.cp_len(SlotSymbol::new(1, 0)), 20);
        assert_eq!(n.slot_len(3), 14 * 256 + 13 * 18 + 20);
        let n = Numerology { scs_khz: 15, fft_size: 2048 };
        assert_eq!(n.cp_len(SlotSymbol::new(0, 7)), 160);
        assert_eq!(n.cp_len(SlotSymbol::new(0, 8)), 144);
    }

    #[test]
    fn round_trip_text() {
        let (cfg, lpss) = mo_example();
        let text = config_to_string(&cfg, &lpss);
        assert_eq!(parse_config(&text).unwrap(), (cfg, lpss));
    }

    #[test]
    fn schema_error_names_field() {
        let (cfg, lpss) = mo_example();
        let text = config_to_string(&cfg, &lpss).replace("\"M\": 2", "\"M\": 3");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("invalid M: 3"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let (cfg, lpss) = mo_example();
        let text = config_to_string(&cfg, &lpss).replace("\"L\": 6", "\"L\": 6, \"bogus\": 1");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("unknown field `bogus`"), "{err}");
    }

    #[test]
    fn wrong_schema_version() {
        let (cfg, lpss) = mo_example();
        let text = config_to_string(&cfg, &lpss).replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::SchemaVersion { found: 7, .. })
        ));
    }

    #[test]
    fn bad_bitmap_character() {
        let (cfg, lpss) = mo_example();
        let text = config_to_string(&cfg, &lpss).replace("\"1111111111\"", "\"11111x1111\"");
        assert!(parse_config(&text).is_err());
    }
}
