//! `lpwus` command-line tool.
//!
//! Exit codes: 0 success, 1 invalid input (arguments, configuration, files),
//! 2 runtime failure or an interrupted sweep.

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lpwus::channel::{apply, ChannelProfile, Fading};
use lpwus::codec::{encode_frame, Payload};
use lpwus::config::{load_config, save_config, validate, LpSsConfig, LpWusConfig, SlotSymbol};
use lpwus::iq::{read_iq, write_iq, IqMetadata, SignalKind};
use lpwus::procedures::{
    allgroups_codepoint, lo_offset_ms, lo_start_slot, monitored_codepoints, po_index, reference_pf, resolve_mos,
    subgroup_codepoint, MoSchedule, PagingIdentity, SubgroupMethod,
};
use lpwus::receiver::{lp_measure_signal, EdOptions, EdPath, ReceiverKind, RssiNormalization, WusReceiver};
use lpwus::sim::{
    calibrate_threshold, emit_vectors, fmt_sig, frame_csv, run_sweep, Axis, AxisKind, PayloadPolicy, ReceiverSet,
    RunControl, Scenario, SimError, SweepSpec,
};
use lpwus::waveform::{lpss_occasions, lpss_pattern, lpss_source, modulate_lpss, WusModulator};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Parser)]
#[command(name = "lpwus", version, about = "LP-WUS / LP-SS link-level tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration file and list every violated constraint.
    Validate(ConfigArg),
    /// Codepoint table, paging timing and MO schedule for one UE.
    Procedures(ProceduresArgs),
    /// Print the OOK frame of one codepoint.
    Encode(EncodeArgs),
    /// Write an IQ file and its JSON sidecar.
    Generate(GenerateArgs),
    /// Run a receiver on an IQ file.
    Decode(DecodeArgs),
    /// Monte-Carlo sweep; prints CSV.
    Simulate(SimulateArgs),
    /// Set detection thresholds from noise-only runs.
    Calibrate(CalibrateArgs),
    /// Emit frame CSV, IQ and sidecar for a set of codepoints.
    Vectors(VectorsArgs),
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct ProceduresArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    ue_id: u16,
    /// PO index within the paging frame.
    #[arg(long, default_value_t = 0)]
    i_s: usize,
    #[arg(long, default_value_t = 0)]
    sg_index: usize,
    /// SFN of the UE's paging frame.
    #[arg(long, default_value_t = 0)]
    sfn_pf: u32,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    format: TableFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameFormat {
    Csv,
    Hex,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    codepoint: u8,
    #[arg(long, value_enum, default_value_t = FrameFormat::Csv)]
    format: FrameFormat,
}

/// Channel impairments.
///
/// SNR is the ON-symbol sample SNR inside the 132-subcarrier WUS band: an ON
/// OOK symbol carries unit energy per band sample against noise of variance
/// 1/SNR. With M = 1 an ON symbol fills the whole OFDM symbol, so the
/// per-subcarrier Es/N0 of ON symbols equals the SNR; with M >= 2 Manchester
/// keeps half of each OFDM symbol OFF and the symbol-averaged Es/N0 is
/// 3.01 dB lower.
#[derive(Args, Clone)]
struct ChannelArgs {
    /// Omit for a noiseless channel.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    cfo_hz: f64,
    /// Delay in samples; negative values advance the signal.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    timing_offset: i64,
    /// `none`, `rayleigh` or `rayleigh:<seed>`.
    #[arg(long, default_value = "none")]
    fading: Fading,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ChannelArgs {
    fn profile(&self) -> ChannelProfile {
        ChannelProfile {
            snr_db: self.snr_db.unwrap_or(f64::INFINITY),
            cfo_hz: self.cfo_hz,
            timing_offset_samples: self.timing_offset,
            fading: self.fading,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    LpWus,
    LpSs,
    Noise,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = GenKind::LpWus)]
    kind: GenKind,
    /// Required for `lp-wus`.
    #[arg(long)]
    codepoint: Option<u8>,
    /// First slot of the LO.
    #[arg(long, default_value_t = 0)]
    lo_slot: u64,
    /// MO to transmit in; defaults to the first one not dropped.
    #[arg(long)]
    mo: Option<usize>,
    /// LP-SS period index.
    #[arg(long, default_value_t = 0)]
    period: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReceiverArg {
    Ed,
    Cd,
}

impl From<ReceiverArg> for ReceiverKind {
    fn from(r: ReceiverArg) -> Self {
        match r {
            ReceiverArg::Ed => ReceiverKind::Ed,
            ReceiverArg::Cd => ReceiverKind::Cd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EdPathArg {
    /// Correlate energies with every payload pattern.
    Ml,
    /// Hard Manchester decisions, then the channel decoder.
    Manchester,
}

impl From<EdPathArg> for EdPath {
    fn from(p: EdPathArg) -> Self {
        match p {
            EdPathArg::Ml => EdPath::MlPattern,
            EdPathArg::Manchester => EdPath::ManchesterRm,
        }
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    iq: PathBuf,
    #[arg(long, value_enum, default_value_t = ReceiverArg::Ed)]
    receiver: ReceiverArg,
    /// Overrides the threshold stored in the configuration.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = EdPathArg::Ml)]
    ed_path: EdPathArg,
    /// MO to demodulate when the sidecar does not name one.
    #[arg(long)]
    mo: Option<usize>,
    /// LP-RSSI averaging: `per-symbol` (1/B_lpss) or `per-on-symbol`.
    #[arg(long, default_value = "per-symbol")]
    rssi_norm: RssiNormalization,
    /// LP-SS period the file was generated for.
    #[arg(long, default_value_t = 0)]
    period: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    #[value(alias = "wus_present")]
    Wus,
    #[value(alias = "noise_only")]
    Noise,
    #[value(alias = "lpss_sync")]
    Sync,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Wus)]
    scenario: ScenarioArg,
    /// `snr`, `cfo` or `timing`.
    #[arg(long, default_value = "snr")]
    axis: AxisKind,
    /// Explicit axis points, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["from", "to", "step"])]
    values: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// `ed`, `cd` or `both`.
    #[arg(long, default_value = "both")]
    receivers: ReceiverSet,
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
    /// Fixed codepoint instead of cycling through all of them.
    #[arg(long)]
    payload: Option<u8>,
    #[arg(long, value_enum, default_value_t = EdPathArg::Ml)]
    ed_path: EdPathArg,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Stop after this many seconds and emit the rows finished so far.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Add an `elapsed_s` column (makes output run-dependent).
    #[arg(long)]
    elapsed: bool,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "both")]
    receivers: ReceiverSet,
    /// Target false-alarm rate; defaults to the configured one.
    #[arg(long)]
    far: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Where to save the updated configuration; defaults to `--config`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the thresholds without saving.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct VectorsArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated codepoints; all legal ones when omitted.
    #[arg(long, value_delimiter = ',')]
    codepoints: Vec<u8>,
    #[arg(long)]
    out: PathBuf,
}

/// `println!` that exits quietly when stdout is a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        let mut o = std::io::stdout().lock();
        if let Err(e) = writeln!(o, $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
}

enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Config(_)
        | SimError::Spec(_)
        | SimError::MissingThreshold(_)
        | SimError::NoActiveMo
        | SimError::TooFewTrials { .. } => Failure::Input(e.into()),
        _ => Failure::Runtime(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let r = match cli.cmd {
        Command::Validate(a) => cmd_validate(&a),
        Command::Procedures(a) => cmd_procedures(&a),
        Command::Encode(a) => cmd_encode(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Decode(a) => cmd_decode(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
        Command::Vectors(a) => cmd_vectors(&a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_valid(path: &Path) -> Result<(LpWusConfig, LpSsConfig), Failure> {
    let (cfg, lpss) = load_config(path).with_context(|| format!("loading {}", path.display())).input()?;
    let v = validate(&cfg, &lpss);
    if !v.is_ok() {
        let list: Vec<String> = v.violations.iter().map(|x| format!("  {x}")).collect();
        return Err(Failure::Input(anyhow!("{} is invalid:\n{}", path.display(), list.join("\n"))));
    }
    Ok((cfg, lpss))
}

fn cmd_validate(a: &ConfigArg) -> CmdResult {
    let (cfg, lpss) = load_config(&a.config).with_context(|| format!("loading {}", a.config.display())).input()?;
    let v = validate(&cfg, &lpss);
    if v.is_ok() {
        out!("ok: B={} codepoints={} G={}", cfg.payload_bits(), cfg.codepoint_count(), cfg.g());
        Ok(())
    } else {
        for x in &v.violations {
            out!("{x}");
        }
        Err(Failure::Input(anyhow!("{} violation(s)", v.violations.len())))
    }
}

fn schedule_rows(s: &MoSchedule) -> Vec<[String; 5]> {
    s.entries
        .iter()
        .map(|e| {
            let syms: Vec<String> = e.symbols.iter().map(|p| p.to_string()).collect();
            [
                e.mo_index.to_string(),
                e.beam_index.to_string(),
                if e.dropped { "dropped" } else { "active" }.to_string(),
                e.physical_span().to_string(),
                syms.join(" "),
            ]
        })
        .collect()
}

fn print_table<const N: usize>(header: [&str; N], rows: &[[String; N]], fmt: TableFormat) {
    match fmt {
        TableFormat::Csv => {
            out!("{}", header.join(","));
            for r in rows {
                out!("{}", r.join(","));
            }
        }
        TableFormat::Text => {
            let mut w: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (i, c) in r.iter().enumerate() {
                    w[i] = w[i].max(c.len());
                }
            }
            let line = |cells: Vec<&str>| {
                let parts: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{c:<width$}", width = w[i])).collect();
                out!("{}", parts.join("  ").trim_end());
            };
            line(header.to_vec());
            for r in rows {
                line(r.iter().map(String::as_str).collect());
            }
        }
    }
}

fn cmd_procedures(a: &ProceduresArgs) -> CmdResult {
    let (cfg, _) = load_valid(&a.config)?;
    if a.i_s >= cfg.n_s || a.sg_index >= cfg.n_sg_po {
        return Err(Failure::Input(anyhow!(
            "identity out of range: need i_s < N_s={} and sg_index < N_SG_PO={}",
            cfg.n_s,
            cfg.n_sg_po
        )));
    }
    let mut table = Vec::new();
    for i_po in 0..cfg.n_po_lo {
        for i_sg in 0..cfg.n_sg_po {
            let c = subgroup_codepoint(i_po, i_sg, cfg.n_sg_po).runtime()?;
            table.push([i_po.to_string(), i_sg.to_string(), c.to_string()]);
        }
        let c = allgroups_codepoint(i_po, cfg.n_sg_po).runtime()?;
        table.push([i_po.to_string(), "all".into(), c.to_string()]);
    }
    let id = PagingIdentity {
        ue_id: a.ue_id,
        i_s: a.i_s,
        sg_index: a.sg_index,
        sg_method: SubgroupMethod::CnAssigned,
    };
    let i_po = po_index(&id, &cfg);
    let (c_sg, c_all) = monitored_codepoints(&id, &cfg).runtime()?;
    let sfn_rpf = reference_pf(a.sfn_pf, i_po, &cfg);
    let offset = lo_offset_ms(&cfg, a.i_s);
    let slot = lo_start_slot(sfn_rpf, offset, &cfg);
    let sched = resolve_mos(&cfg, SlotSymbol::new(slot, 0));
    let summary = [
        ["i_po".to_string(), i_po.to_string()],
        ["c_sg".into(), c_sg.to_string()],
        ["c_all".into(), c_all.to_string()],
        ["sfn_rpf".into(), sfn_rpf.to_string()],
        ["lo_offset_ms".into(), offset.to_string()],
        ["lo_start_slot".into(), slot.to_string()],
    ];
    print_table(["i_po", "i_sg", "codepoint"], &table, a.format);
    out!();
    print_table(["field", "value"], &summary, a.format);
    out!();
    print_table(["mo", "beam", "state", "span", "symbols"], &schedule_rows(&sched), a.format);
    Ok(())
}

fn payload_for(cfg: &LpWusConfig, codepoint: u8) -> Result<Payload, Failure> {
    if usize::from(codepoint) >= cfg.codepoint_count() {
        return Err(Failure::Input(anyhow!(
            "codepoint {codepoint} out of range: the configuration has {}",
            cfg.codepoint_count()
        )));
    }
    Payload::from_value(codepoint, cfg.payload_bits()).input()
}

fn bits_hex(bits: &[u8]) -> String {
    // MSB first, zero-padded on the left to whole nibbles.
    let pad = (4 - bits.len() % 4) % 4;
    let padded: Vec<u8> = std::iter::repeat_n(0, pad).chain(bits.iter().copied()).collect();
    padded
        .chunks(4)
        .map(|n| format!("{:x}", n.iter().fold(0u8, |acc, &b| (acc << 1) | b)))
        .collect()
}

fn cmd_encode(a: &EncodeArgs) -> CmdResult {
    let (cfg, _) = load_valid(&a.config)?;
    let frame = encode_frame(&payload_for(&cfg, a.codepoint)?, &cfg).input()?;
    match a.format {
        FrameFormat::Csv => out!("{}", frame_csv(&frame).trim_end()),
        FrameFormat::Hex => {
            out!("G={}", frame.g.len());
            out!("g={}", bits_hex(&frame.g));
            let seq: Vec<String> = frame.seq_indices.iter().map(|c| format!("{c:x}")).collect();
            out!("seq={}", seq.join(""));
        }
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    let (cfg, lpss) = load_valid(&a.config)?;
    let prof = a.channel.profile();
    let (x, mut meta) = match a.kind {
        GenKind::LpSs => {
            let pat = lpss_pattern(&lpss).input()?;
            let mut src = lpss_source(&lpss).input()?;
            let x = modulate_lpss(&pat, &lpss, cfg.numerology(), a.period, src.as_mut()).runtime()?;
            let meta = IqMetadata::describe(&x, SignalKind::LpSs);
            (x, meta)
        }
        GenKind::LpWus | GenKind::Noise => {
            let lo_start = SlotSymbol::new(a.lo_slot, 0);
            let sched = resolve_mos(&cfg, lo_start);
            let entry = match a.mo {
                Some(k) => sched.get(k).ok_or_else(|| anyhow!("no MO {k}: the LO has {}", sched.entries.len())).input()?,
                None => sched.first_active().ok_or_else(|| anyhow!("every MO of the LO is dropped")).input()?,
            };
            let cp = match (a.kind, a.codepoint) {
                (GenKind::LpWus, None) => return Err(Failure::Input(anyhow!("--codepoint is required for lp-wus"))),
                (_, c) => c.unwrap_or(0),
            };
            let frame = encode_frame(&payload_for(&cfg, cp)?, &cfg).input()?;
            let mut x = WusModulator::new(&cfg).input()?.modulate(&frame, entry).input()?;
            let kind = if matches!(a.kind, GenKind::Noise) {
                x = x.zeros_like();
                SignalKind::Noise
            } else {
                SignalKind::LpWus
            };
            let mut meta = IqMetadata::describe(&x, kind);
            meta.lo_start = Some(lo_start);
            meta.mo_index = Some(entry.mo_index);
            meta.codepoint = matches!(a.kind, GenKind::LpWus).then_some(cp);
            (x, meta)
        }
    };
    let y = apply(&x, &prof);
    meta.n_samples = y.samples.len();
    write_iq(&a.out, &y, &meta).runtime()?;
    out!("wrote {} samples to {}", y.samples.len(), a.out.display());
    Ok(())
}

fn cmd_decode(a: &DecodeArgs) -> CmdResult {
    let (cfg, lpss) = load_valid(&a.config)?;
    let (y, meta) = read_iq(&a.iq).input()?;
    if y.fft_size != cfg.fft_size || y.scs_khz != cfg.scs_khz {
        return Err(Failure::Input(anyhow!(
            "file numerology ({} kHz, FFT {}) does not match the configuration ({} kHz, FFT {})",
            y.scs_khz,
            y.fft_size,
            cfg.scs_khz,
            cfg.fft_size
        )));
    }
    if meta.kind == SignalKind::LpSs {
        let pat = lpss_pattern(&lpss).input()?;
        for occ in lpss_occasions(&lpss, cfg.numerology(), a.period).input()? {
            let r = lp_measure_signal(&y, &pat, &occ, a.rssi_norm).input()?;
            out!("occasion_beam={}", occ.beam);
            out!("{r}");
        }
        return Ok(());
    }
    let lo_start = meta.lo_start.unwrap_or(SlotSymbol::new(0, 0));
    let sched = resolve_mos(&cfg, lo_start);
    let entry = match meta.mo_index.or(a.mo) {
        Some(k) => sched.get(k).ok_or_else(|| anyhow!("no MO {k} in the schedule")).input()?,
        None => sched.first_active().ok_or_else(|| anyhow!("every MO of the LO is dropped")).input()?,
    };
    let kind: ReceiverKind = a.receiver.into();
    let threshold = match (a.threshold, kind) {
        (Some(t), _) => t,
        (None, ReceiverKind::Ed) => cfg.detection.ed_threshold.ok_or(SimError::MissingThreshold(kind)).input()?,
        (None, ReceiverKind::Cd) => cfg.detection.cd_threshold.ok_or(SimError::MissingThreshold(kind)).input()?,
    };
    let rx = WusReceiver::new(&cfg).input()?;
    let report = match kind {
        ReceiverKind::Ed => {
            let e = rx.ed_demodulate(&y, entry).input()?;
            rx.ed_decode(
                &e,
                EdOptions {
                    threshold,
                    path: a.ed_path.into(),
                },
            )
            .runtime()?
        }
        ReceiverKind::Cd => rx.cd_decode(&y, entry, threshold).input()?,
    };
    out!("{report}");
    Ok(())
}

fn cancel_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let f = flag.clone();
    // A second handler cannot be installed; the sweep then just runs to the end.
    let _ = ctrlc::set_handler(move || f.store(true, Ordering::Relaxed));
    flag
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let (cfg, lpss) = load_valid(&a.config)?;
    let axis = if !a.values.is_empty() {
        Axis::points(a.axis, a.values.clone())
    } else {
        match (a.from, a.to) {
            (Some(f), Some(t)) => Axis::range(a.axis, f, t, a.step).map_err(sim_failure)?,
            _ => return Err(Failure::Input(anyhow!("give --values or both --from and --to"))),
        }
    };
    let scenario = match a.scenario {
        ScenarioArg::Wus => Scenario::WusPresent(match a.payload {
            Some(v) => {
                payload_for(&cfg, v)?;
                PayloadPolicy::Fixed(v)
            }
            None => PayloadPolicy::Cycle,
        }),
        ScenarioArg::Noise => Scenario::NoiseOnly,
        ScenarioArg::Sync => Scenario::LpssSync,
    };
    let spec = SweepSpec {
        cfg,
        lpss,
        axis,
        base: a.channel.profile(),
        n_trials: a.trials,
        receivers: a.receivers,
        master_seed: a.master_seed,
        scenario,
        ed_path: a.ed_path.into(),
    };
    let ctl = RunControl {
        workers: a.workers,
        cancel: Some(cancel_flag()),
        deadline: a.max_seconds.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))),
    };
    let result = run_sweep(&spec, &ctl).map_err(sim_failure)?;
    let csv = result.to_csv(a.elapsed);
    match &a.out {
        Some(p) => std::fs::write(p, &csv).with_context(|| format!("writing {}", p.display())).runtime()?,
        None => out!("{}", csv.trim_end()),
    }
    if result.incomplete {
        return Err(Failure::Runtime(anyhow!("sweep interrupted; the last row is incomplete")));
    }
    Ok(())
}

fn cmd_calibrate(a: &CalibrateArgs) -> CmdResult {
    let (mut cfg, lpss) = load_valid(&a.config)?;
    let far = a.far.unwrap_or(cfg.detection.target_far);
    let ctl = RunControl::with_workers(a.workers);
    for &kind in a.receivers.kinds() {
        let t = calibrate_threshold(&cfg, kind, far, a.trials, a.seed, &ctl).map_err(sim_failure)?;
        out!("{}_threshold={}", kind.to_string().to_lowercase(), fmt_sig(t));
        match kind {
            ReceiverKind::Ed => cfg.detection.ed_threshold = Some(t),
            ReceiverKind::Cd => cfg.detection.cd_threshold = Some(t),
        }
    }
    cfg.detection.target_far = far;
    if !a.dry_run {
        let out = a.out.as_ref().unwrap_or(&a.config);
        save_config(out, &cfg, &lpss).runtime()?;
        out!("saved {}", out.display());
    }
    Ok(())
}

fn cmd_vectors(a: &VectorsArgs) -> CmdResult {
    let (cfg, _) = load_valid(&a.config)?;
    let cps: Vec<u8> = if a.codepoints.is_empty() {
        (0..cfg.codepoint_count() as u8).collect()
    } else {
        for &c in &a.codepoints {
            payload_for(&cfg, c)?;
        }
        a.codepoints.clone()
    };
    let files = emit_vectors(&cfg, &cps, &a.out).map_err(sim_failure)?;
    for f in files {
        out!("{} {} {}", f.codepoint, f.frame_csv.display(), f.iq.display());
    }
    Ok(())
}
