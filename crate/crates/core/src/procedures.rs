//! Idle-mode arithmetic: PO-to-LO association, reference paging frame,
//! subgroup codepoints and monitoring-occasion resolution.

use crate::config::{LpWusConfig, SlotSymbol, MAX_CODEPOINTS, SFN_MODULUS, SYMBOLS_PER_SLOT};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProcedureError {
    #[error("codepoint {codepoint} out of range: {count} codepoints configured")]
    CodepointOutOfRange { codepoint: u8, count: usize },
    #[error("subgroup index {i_sg} out of range for N_SG_PO={n_sg_po}")]
    SubgroupOutOfRange { i_sg: usize, n_sg_po: usize },
}

/// One of the (at most 32) values carried by an LP-WUS payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Codepoint(u8);

impl Codepoint {
    pub fn new(value: u8) -> Option<Self> {
        (usize::from(value) < MAX_CODEPOINTS).then_some(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Codepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupMethod {
    CnAssigned,
    UeIdBased,
}

/// Paging identity of a UE. The subgroup index is an input here; its
/// assignment (by the core network or from the UE_ID) happens elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PagingIdentity {
    pub ue_id: u16,
    /// PO index within the paging frame.
    pub i_s: usize,
    pub sg_index: usize,
    pub sg_method: SubgroupMethod,
}

/// Which subgroups of a PO a codepoint wakes up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subgroups {
    One(usize),
    All,
}

/// Decoded addressee of a codepoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WakeTarget {
    pub i_po: usize,
    pub subgroups: Subgroups,
}

impl WakeTarget {
    /// Every `(i_PO, i_SG)` pair woken up.
    pub fn expand(&self, n_sg_po: usize) -> Vec<(usize, usize)> {
        match self.subgroups {
            Subgroups::One(sg) => vec![(self.i_po, sg)],
            Subgroups::All => (0..n_sg_po).map(|sg| (self.i_po, sg)).collect(),
        }
    }
}

impl fmt::Display for WakeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subgroups {
            Subgroups::One(sg) => write!(f, "PO{}/SG{}", self.i_po, sg),
            Subgroups::All => write!(f, "PO{}/ALL", self.i_po),
        }
    }
}

/// Index of the PO (among those sharing an LO) that the UE belongs to.
pub fn po_index(id: &PagingIdentity, cfg: &LpWusConfig) -> usize {
    let ue = u32::from(id.ue_id) % cfg.n_pf.max(1);
    (ue as usize * cfg.n_s + id.i_s) % cfg.n_po_lo
}

/// SFN of the reference paging frame the LO timing is anchored to.
pub fn reference_pf(sfn_pf: u32, i_po: usize, cfg: &LpWusConfig) -> u32 {
    let frames_per_pf = cfg.t_drx_frames() / cfg.n_pf.max(1);
    let back = (i_po / cfg.n_s) as u32 * frames_per_pf;
    (sfn_pf % SFN_MODULUS + SFN_MODULUS - back % SFN_MODULUS) % SFN_MODULUS
}

/// LO-to-PO time offset for the PO with in-frame index `i_s`. With several
/// offsets configured, offset `k` belongs to PO `k` of the paging frame.
pub fn lo_offset_ms(cfg: &LpWusConfig, i_s: usize) -> u32 {
    match cfg.t_po_lo_ms.len() {
        0 => 0,
        1 => cfg.t_po_lo_ms[0],
        _ => cfg.t_po_lo_ms[i_s.min(cfg.t_po_lo_ms.len() - 1)],
    }
}

/// First slot of the LO: the reference PF start moved back by the LO offset,
/// wrapped into the SFN cycle.
pub fn lo_start_slot(sfn_rpf: u32, offset_ms: u32, cfg: &LpWusConfig) -> u64 {
    let num = cfg.numerology();
    let cycle = u64::from(SFN_MODULUS) * num.slots_per_frame();
    let start = u64::from(sfn_rpf) * num.slots_per_frame();
    let back = u64::from(offset_ms) * num.slots_per_ms();
    (start + cycle - back % cycle) % cycle
}

/// Codepoint addressing subgroup `i_sg` of PO `i_po`.
///
/// The in-text case split (`i_PO` alone for a single subgroup, `(i_PO+1)+i_SG`
/// otherwise) disagrees with the tabulated codepoints and collides with the
/// "all subgroups" codepoint of the previous PO. This uses
/// `i_PO·(N_SG_PO+1) + i_SG`, which reproduces the table exactly and stays
/// collision-free for every legal configuration; both agree whenever
/// `N_PO_LO = 1`.
pub fn subgroup_codepoint(i_po: usize, i_sg: usize, n_sg_po: usize) -> Result<Codepoint, ProcedureError> {
    if i_sg >= n_sg_po {
        return Err(ProcedureError::SubgroupOutOfRange { i_sg, n_sg_po });
    }
    checked_codepoint(i_po * (n_sg_po + 1) + i_sg)
}

/// Codepoint waking every subgroup of PO `i_po`.
pub fn allgroups_codepoint(i_po: usize, n_sg_po: usize) -> Result<Codepoint, ProcedureError> {
    checked_codepoint((i_po + 1) * (n_sg_po + 1) - 1)
}

fn checked_codepoint(c: usize) -> Result<Codepoint, ProcedureError> {
    if c < MAX_CODEPOINTS {
        Ok(Codepoint(c as u8))
    } else {
        Err(ProcedureError::CodepointOutOfRange {
            codepoint: c.min(255) as u8,
            count: MAX_CODEPOINTS,
        })
    }
}

/// Inverse of [`subgroup_codepoint`] / [`allgroups_codepoint`].
pub fn codepoint_to_targets(c: Codepoint, cfg: &LpWusConfig) -> Result<WakeTarget, ProcedureError> {
    let count = cfg.codepoint_count();
    let v = usize::from(c.value());
    if v >= count {
        return Err(ProcedureError::CodepointOutOfRange {
            codepoint: c.value(),
            count,
        });
    }
    let per_po = cfg.n_sg_po + 1;
    let i_po = v / per_po;
    let rem = v % per_po;
    let subgroups = if rem == cfg.n_sg_po {
        Subgroups::All
    } else {
        Subgroups::One(rem)
    };
    Ok(WakeTarget { i_po, subgroups })
}

/// The two codepoints a UE has to react to: its own subgroup and "all".
pub fn monitored_codepoints(
    id: &PagingIdentity,
    cfg: &LpWusConfig,
) -> Result<(Codepoint, Codepoint), ProcedureError> {
    let i_po = po_index(id, cfg);
    Ok((
        subgroup_codepoint(i_po, id.sg_index, cfg.n_sg_po)?,
        allgroups_codepoint(i_po, cfg.n_sg_po)?,
    ))
}

/// One monitoring occasion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoEntry {
    pub mo_index: usize,
    pub beam_index: usize,
    /// Nominal window: the `L_MO` bitmap-available symbols assigned to this MO.
    pub window: Vec<SlotSymbol>,
    /// WUS symbols. Exactly `L` entries unless `dropped`, in which case these
    /// are the (fewer than `L`) usable symbols of the window.
    pub symbols: Vec<SlotSymbol>,
    pub dropped: bool,
}

impl MoEntry {
    /// Physical OFDM symbols from the first to the last WUS symbol.
    pub fn physical_span(&self) -> usize {
        match (self.symbols.first(), self.symbols.last()) {
            (Some(a), Some(b)) => (b.linear() - a.linear()) as usize + 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoSchedule {
    pub entries: Vec<MoEntry>,
}

impl MoSchedule {
    pub fn first_active(&self) -> Option<&MoEntry> {
        self.entries.iter().find(|e| !e.dropped)
    }

    pub fn get(&self, mo_index: usize) -> Option<&MoEntry> {
        self.entries.get(mo_index)
    }
}

/// Lays out the `N_LO_MO · n_beams` MOs of an LO starting at `lo_start`.
///
/// Windows are back to back, each made of `L_MO` symbols available in both
/// bitmaps. Symbols of a window that collide with SS/PBCH are not usable; an
/// MO with fewer than `L` usable symbols is dropped. Beams are assigned round
/// robin.
pub fn resolve_mos(cfg: &LpWusConfig, lo_start: SlotSymbol) -> MoSchedule {
    let n_mo = cfg.n_lo_mo * cfg.n_beams.max(1);
    // A window never needs more than this many slots when at least one
    // symbol per bitmap period is available.
    let scan_limit = (cfg.l_mo as u64 + 1) * (10 * SYMBOLS_PER_SLOT as u64);
    let mut cursor = lo_start.linear() + cfg.first_mo_offset_symbols;
    let mut entries = Vec::with_capacity(n_mo);
    for k in 0..n_mo {
        let mut window = Vec::with_capacity(cfg.l_mo);
        let scan_start = cursor;
        while window.len() < cfg.l_mo && cursor - scan_start < scan_limit {
            let pos = SlotSymbol::from_linear(cursor);
            if cfg.is_symbol_available(pos) {
                window.push(pos);
            }
            cursor += 1;
        }
        let usable: Vec<SlotSymbol> = window
            .iter()
            .copied()
            .filter(|&p| !cfg.is_ssb_symbol(p))
            .collect();
        let dropped = usable.len() < cfg.l || window.len() < cfg.l_mo;
        let symbols = if dropped {
            usable
        } else {
            usable[..cfg.l].to_vec()
        };
        entries.push(MoEntry {
            mo_index: k,
            beam_index: k % cfg.n_beams.max(1),
            window,
            symbols,
            dropped,
        });
    }
    MoSchedule { entries }
}
