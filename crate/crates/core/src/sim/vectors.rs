//! Golden test vectors: OOK frame, IQ samples and sidecar per payload.

use super::SimError;
use crate::codec::{encode_frame, OokFrame, Payload};
use crate::config::{LpWusConfig, SlotSymbol};
use crate::iq::{write_iq, IqMetadata, SignalKind};
use crate::procedures::resolve_mos;
use crate::waveform::WusModulator;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorFiles {
    pub codepoint: u8,
    pub frame_csv: PathBuf,
    pub iq: PathBuf,
    pub metadata: PathBuf,
}

/// `ook_index,g,seq_index` with an empty sequence index for OFF symbols.
pub fn frame_csv(frame: &OokFrame) -> String {
    let mut out = String::from("ook_index,g,seq_index\n");
    for (i, (g, c)) in frame.g.iter().zip(frame.per_symbol_sequences()).enumerate() {
        match c {
            Some(c) => out.push_str(&format!("{i},{g},{c}\n")),
            None => out.push_str(&format!("{i},{g},\n")),
        }
    }
    out
}

/// Writes one vector triple per payload value into `out_dir`. Signals use
/// the first non-dropped MO of an LO starting at slot 0, symbol 0.
pub fn emit_vectors(cfg: &LpWusConfig, payloads: &[u8], out_dir: &Path) -> Result<Vec<VectorFiles>, SimError> {
    fs::create_dir_all(out_dir).map_err(|source| SimError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let lo_start = SlotSymbol::new(0, 0);
    let schedule = resolve_mos(cfg, lo_start);
    let entry = schedule.first_active().ok_or(SimError::NoActiveMo)?;
    let modulator = WusModulator::new(cfg)?;
    let mut files = Vec::with_capacity(payloads.len());
    for &v in payloads {
        let payload = Payload::from_value(v, cfg.payload_bits())?;
        let frame = encode_frame(&payload, cfg)?;
        let sig = modulator.modulate(&frame, entry)?;
        let stem = format!("cp{v:02}");
        let frame_path = out_dir.join(format!("{stem}_frame.csv"));
        fs::write(&frame_path, frame_csv(&frame)).map_err(|source| SimError::Io {
            path: frame_path.clone(),
            source,
        })?;
        let iq_path = out_dir.join(format!("{stem}.iq"));
        let mut meta = IqMetadata::describe(&sig, SignalKind::LpWus);
        meta.lo_start = Some(lo_start);
        meta.mo_index = Some(entry.mo_index);
        meta.codepoint = Some(v);
        write_iq(&iq_path, &sig, &meta)?;
        files.push(VectorFiles {
            codepoint: v,
            frame_csv: frame_path,
            metadata: crate::iq::metadata_path(&iq_path),
            iq: iq_path,
        });
    }
    Ok(files)
}
