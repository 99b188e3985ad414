//! Monte-Carlo orchestration.
//!
//! A sweep runs `n_trials` independent trials at every point of one channel
//! axis. Trial `t` of point `p` draws all of its randomness from a seed
//! derived from `(master_seed, p, t)` alone, and outcomes are aggregated in
//! trial order, so results do not depend on the worker count or on the order
//! in which trials happen to finish.

mod stats;
mod vectors;

pub use stats::{fmt_sig, wilson, Z_95};
pub use vectors::{emit_vectors, frame_csv, VectorFiles};

use crate::channel::{apply, ChannelProfile, Fading};
use crate::codec::{encode_frame, CodecError, Payload};
use crate::config::{validate, LpSsConfig, LpWusConfig, SlotSymbol};
use crate::iq::IqError;
use crate::procedures::{resolve_mos, MoEntry};
use crate::receiver::{lpss_sync, EdOptions, EdPath, ReceiverError, ReceiverKind, WusReceiver};
use crate::waveform::{
    lpss_pattern, lpss_source, modulate_ook_stream, IqSignal, LpSsPattern, OfdmEngine, WaveformError,
    WusModulator,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("no {0} threshold in the configuration; run calibrate first")]
    MissingThreshold(ReceiverKind),
    #[error("every MO of the LO is dropped")]
    NoActiveMo,
    #[error("{n} trials cannot resolve a {target_far} quantile: at least {needed} needed")]
    TooFewTrials { n: usize, needed: usize, target_far: f64 },
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Iq(#[from] IqError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    SnrDb,
    CfoHz,
    /// Timing offset in samples.
    Timing,
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisKind::SnrDb => "snr_db",
            AxisKind::CfoHz => "cfo_hz",
            AxisKind::Timing => "timing_samples",
        })
    }
}

impl std::str::FromStr for AxisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "snr" | "snr_db" => Ok(AxisKind::SnrDb),
            "cfo" | "cfo_hz" => Ok(AxisKind::CfoHz),
            "timing" | "timing_samples" => Ok(AxisKind::Timing),
            _ => Err(format!("unknown axis {s:?}, expected snr, cfo or timing")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn points(kind: AxisKind, values: Vec<f64>) -> Self {
        Self { kind, values }
    }

    /// `start, start + step, …` up to and including `stop`.
    pub fn range(kind: AxisKind, start: f64, stop: f64, step: f64) -> Result<Self, SimError> {
        if start == stop {
            return Ok(Self::points(kind, vec![start]));
        }
        if !(step > 0.0) || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(SimError::Spec(format!(
                "axis range {start}..{stop} step {step} is empty"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(Self::points(kind, (0..n).map(|i| start + i as f64 * step).collect()))
    }

    fn profile(&self, base: &ChannelProfile, value: f64) -> ChannelProfile {
        let mut p = *base;
        match self.kind {
            AxisKind::SnrDb => p.snr_db = value,
            AxisKind::CfoHz => p.cfo_hz = value,
            AxisKind::Timing => p.timing_offset_samples = value.round() as i64,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverSet {
    Ed,
    Cd,
    Both,
}

impl ReceiverSet {
    pub fn kinds(self) -> &'static [ReceiverKind] {
        match self {
            ReceiverSet::Ed => &[ReceiverKind::Ed],
            ReceiverSet::Cd => &[ReceiverKind::Cd],
            ReceiverSet::Both => &[ReceiverKind::Ed, ReceiverKind::Cd],
        }
    }
}

impl std::str::FromStr for ReceiverSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ed" => Ok(ReceiverSet::Ed),
            "cd" => Ok(ReceiverSet::Cd),
            "both" => Ok(ReceiverSet::Both),
            _ => Err(format!("unknown receiver set {s:?}, expected ed, cd or both")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadPolicy {
    /// Trial `t` sends codepoint `t mod codepoint_count`.
    Cycle,
    Fixed(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    WusPresent(PayloadPolicy),
    NoiseOnly,
    /// LP-SS placed at a uniformly drawn offset within ± one pattern length.
    LpssSync,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::WusPresent(_) => "wus_present",
            Scenario::NoiseOnly => "noise_only",
            Scenario::LpssSync => "lpss_sync",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub cfg: LpWusConfig,
    pub lpss: LpSsConfig,
    pub axis: Axis,
    /// Channel fields not swept by the axis.
    pub base: ChannelProfile,
    pub n_trials: usize,
    pub receivers: ReceiverSet,
    pub master_seed: u64,
    pub scenario: Scenario,
    pub ed_path: EdPath,
}

/// Execution knobs that never change results.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Set to stop early; rows completed so far are flagged incomplete.
    pub cancel: Option<Arc<AtomicBool>>,
    pub deadline: Option<Instant>,
}

impl RunControl {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }

    fn stopped(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, SimError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: AxisKind,
    pub value: f64,
    pub receiver: ReceiverKind,
    /// Completed trials.
    pub n_trials: usize,
    /// Missed detections, false alarms or nonzero sync errors.
    pub events: usize,
    pub mdr: Option<f64>,
    pub far: Option<f64>,
    pub sync_rmse: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub elapsed_s: f64,
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub rows: Vec<SweepRow>,
    pub incomplete: bool,
}

pub const CSV_HEADER: &str =
    "scenario,axis,value,receiver,n_trials,events,mdr,far,sync_rmse,ci_low,ci_high,incomplete";

impl SweepResult {
    /// One row per (axis point, receiver). Floats use 9 significant digits.
    /// Wall-clock time is only written when asked for, so the default output
    /// is a pure function of the spec.
    pub fn to_csv(&self, with_elapsed: bool) -> String {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        if with_elapsed {
            out.push_str(",elapsed_s");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.scenario,
                r.axis,
                fmt_sig(r.value),
                r.receiver,
                r.n_trials,
                r.events,
                opt(r.mdr),
                opt(r.far),
                opt(r.sync_rmse),
                opt(r.ci_low),
                opt(r.ci_high),
                u8::from(r.incomplete)
            ));
            if with_elapsed {
                out.push_str(&format!(",{}", fmt_sig(r.elapsed_s)));
            }
            out.push('\n');
        }
        out
    }
}

/// Seed of trial `index` in stream `stream`: one word pair of a ChaCha8
/// keystream keyed by `master`.
pub fn trial_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

const CALIBRATION_STREAM: u64 = u64::MAX;

/// Everything a trial needs, built once per sweep.
struct Context {
    cfg: LpWusConfig,
    entry: MoEntry,
    modulator: WusModulator,
    receiver: WusReceiver,
    silence: IqSignal,
    ed: EdOptions,
    cd_threshold: f64,
    lpss: Option<LpSsSetup>,
}

struct LpSsSetup {
    pattern: LpSsPattern,
    cfg: LpSsConfig,
    engine: OfdmEngine,
    window: Vec<SlotSymbol>,
}

/// Result of one trial. Events are misses under `WusPresent` and false
/// alarms under `NoiseOnly`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub ed_event: bool,
    pub cd_event: bool,
    pub sync_error: i64,
}

impl Context {
    fn new(cfg: &LpWusConfig, lpss: Option<&LpSsConfig>, ed: EdOptions, cd_threshold: f64) -> Result<Self, SimError> {
        let schedule = resolve_mos(cfg, SlotSymbol::new(0, 0));
        let entry = schedule.first_active().cloned().ok_or(SimError::NoActiveMo)?;
        let modulator = WusModulator::new(cfg)?;
        let receiver = WusReceiver::new(cfg)?;
        let frame = encode_frame(&Payload::from_value(0, cfg.payload_bits())?, cfg)?;
        let silence = modulator.modulate(&frame, &entry)?.zeros_like();
        let lpss = match lpss {
            Some(c) => {
                let pattern = lpss_pattern(c)?;
                let window = (0..3 * c.l_lpss as u64).map(SlotSymbol::from_linear).collect();
                Some(LpSsSetup {
                    pattern,
                    cfg: c.clone(),
                    engine: OfdmEngine::new(cfg.numerology()),
                    window,
                })
            }
            None => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            entry,
            modulator,
            receiver,
            silence,
            ed,
            cd_threshold,
            lpss,
        })
    }

    fn trial_profile(&self, base: &ChannelProfile, seed: u64) -> ChannelProfile {
        let mut p = *base;
        p.seed = seed;
        if let Fading::RayleighBlock { seed: s } = base.fading {
            p.fading = Fading::RayleighBlock {
                seed: trial_seed(s, 1, seed),
            };
        }
        p
    }

    fn run(
        &self,
        scenario: Scenario,
        kinds: &[ReceiverKind],
        prof: &ChannelProfile,
        t: usize,
    ) -> Result<TrialOutcome, SimError> {
        let mut out = TrialOutcome::default();
        match scenario {
            Scenario::WusPresent(policy) => {
                let n_cp = self.cfg.codepoint_count().max(1);
                let cp = match policy {
                    PayloadPolicy::Cycle => (t % n_cp) as u8,
                    PayloadPolicy::Fixed(v) => v,
                };
                let payload = Payload::from_value(cp, self.cfg.payload_bits())?;
                let frame = encode_frame(&payload, &self.cfg)?;
                let x = self.modulator.modulate(&frame, &self.entry)?;
                let y = apply(&x, prof);
                let blocks = self.receiver.ook_blocks(&y, &self.entry)?;
                for kind in kinds {
                    let r = match kind {
                        ReceiverKind::Ed => {
                            let e: Vec<f64> = blocks.iter().map(|b| crate::receiver::block_energy(b)).collect();
                            self.receiver.ed_decode(&e, self.ed)?
                        }
                        ReceiverKind::Cd => self.receiver.cd_decode_blocks(&blocks, self.cd_threshold)?,
                    };
                    let missed = r.codepoint != Some(payload.codepoint());
                    match kind {
                        ReceiverKind::Ed => out.ed_event = missed,
                        ReceiverKind::Cd => out.cd_event = missed,
                    }
                }
            }
            Scenario::NoiseOnly => {
                let y = apply(&self.silence, prof);
                let blocks = self.receiver.ook_blocks(&y, &self.entry)?;
                for kind in kinds {
                    match kind {
                        ReceiverKind::Ed => {
                            let e: Vec<f64> = blocks.iter().map(|b| crate::receiver::block_energy(b)).collect();
                            out.ed_event = self.receiver.ed_decode(&e, self.ed)?.detected;
                        }
                        ReceiverKind::Cd => {
                            out.cd_event = self.receiver.cd_decode_blocks(&blocks, self.cd_threshold)?.detected;
                        }
                    }
                }
            }
            Scenario::LpssSync => {
                let s = self.lpss.as_ref().expect("LP-SS setup");
                let b = s.pattern.b_lpss as i64;
                let mut rng = ChaCha8Rng::seed_from_u64(prof.seed);
                let k = rng.random_range(-b..=b);
                let mut bits = vec![0u8; 3 * b as usize];
                let start = (b + k) as usize;
                bits[start..start + b as usize].copy_from_slice(&s.pattern.bits);
                let mut src = lpss_source(&s.cfg)?;
                let x = modulate_ook_stream(&s.engine, &bits, s.pattern.m_lpss, &s.window, src.as_mut());
                let noise_prof = ChannelProfile {
                    seed: rng.next_u64(),
                    ..*prof
                };
                let y = apply(&x, &noise_prof);
                let est = lpss_sync(&y, &s.pattern, &s.window)?;
                out.sync_error = est.offset - k;
            }
        }
        Ok(out)
    }
}

fn check_config(cfg: &LpWusConfig, lpss: &LpSsConfig) -> Result<(), SimError> {
    let v = validate(cfg, lpss);
    if v.is_ok() {
        Ok(())
    } else {
        let msgs: Vec<String> = v.violations.iter().map(|x| x.to_string()).collect();
        Err(SimError::Config(msgs.join("; ")))
    }
}

fn prepare(spec: &SweepSpec) -> Result<(Context, &'static [ReceiverKind]), SimError> {
    check_config(&spec.cfg, &spec.lpss)?;
    if spec.n_trials == 0 {
        return Err(SimError::Spec("n_trials must be at least 1".into()));
    }
    if spec.axis.values.is_empty() {
        return Err(SimError::Spec("axis has no points".into()));
    }
    let kinds: &'static [ReceiverKind] = match spec.scenario {
        Scenario::LpssSync => &[ReceiverKind::Ed],
        _ => spec.receivers.kinds(),
    };
    let det = &spec.cfg.detection;
    let needs = |k: ReceiverKind| kinds.contains(&k) && spec.scenario != Scenario::LpssSync;
    let ed_threshold = if needs(ReceiverKind::Ed) {
        det.ed_threshold.ok_or(SimError::MissingThreshold(ReceiverKind::Ed))?
    } else {
        0.0
    };
    let cd_threshold = if needs(ReceiverKind::Cd) {
        if spec.cfg.n_seq < 2 {
            return Err(SimError::Spec("the coherent detector needs N_seq >= 2".into()));
        }
        det.cd_threshold.ok_or(SimError::MissingThreshold(ReceiverKind::Cd))?
    } else {
        0.0
    };
    let lpss = (spec.scenario == Scenario::LpssSync).then_some(&spec.lpss);
    let ctx = Context::new(
        &spec.cfg,
        lpss,
        EdOptions {
            threshold: ed_threshold,
            path: spec.ed_path,
        },
        cd_threshold,
    )?;
    Ok((ctx, kinds))
}

/// Runs the given trials of axis point `point` one after another, in the
/// order listed. Each outcome depends only on its trial index.
pub fn run_trials(spec: &SweepSpec, point: usize, trials: &[usize]) -> Result<Vec<TrialOutcome>, SimError> {
    let (ctx, kinds) = prepare(spec)?;
    let value = *spec
        .axis
        .values
        .get(point)
        .ok_or_else(|| SimError::Spec(format!("axis has no point {point}")))?;
    let base = spec.axis.profile(&spec.base, value);
    trials
        .iter()
        .map(|&t| {
            let seed = trial_seed(spec.master_seed, point as u64, t as u64);
            ctx.run(spec.scenario, kinds, &ctx.trial_profile(&base, seed), t)
        })
        .collect()
}

/// Runs every point of the sweep.
pub fn run_sweep(spec: &SweepSpec, ctl: &RunControl) -> Result<SweepResult, SimError> {
    let (ctx, kinds) = prepare(spec)?;
    let pool = ctl.pool()?;
    let mut rows = Vec::new();
    let mut incomplete = false;
    for (pi, &value) in spec.axis.values.iter().enumerate() {
        let t0 = Instant::now();
        let base = spec.axis.profile(&spec.base, value);
        let outcomes: Vec<Option<Result<TrialOutcome, SimError>>> = pool.install(|| {
            (0..spec.n_trials)
                .into_par_iter()
                .map(|t| {
                    if ctl.stopped() {
                        return None;
                    }
                    let seed = trial_seed(spec.master_seed, pi as u64, t as u64);
                    let prof = ctx.trial_profile(&base, seed);
                    Some(ctx.run(spec.scenario, kinds, &prof, t))
                })
                .collect()
        });
        let mut done = Vec::with_capacity(outcomes.len());
        let mut point_incomplete = false;
        for o in outcomes {
            match o {
                Some(r) => done.push(r?),
                None => point_incomplete = true,
            }
        }
        incomplete |= point_incomplete;
        let elapsed_s = t0.elapsed().as_secs_f64();
        for &kind in kinds {
            rows.push(aggregate(spec, kind, value, &done, elapsed_s, point_incomplete));
        }
        if point_incomplete {
            break;
        }
    }
    Ok(SweepResult {
        scenario: spec.scenario,
        rows,
        incomplete,
    })
}

fn aggregate(
    spec: &SweepSpec,
    kind: ReceiverKind,
    value: f64,
    done: &[TrialOutcome],
    elapsed_s: f64,
    incomplete: bool,
) -> SweepRow {
    let n = done.len();
    let mut row = SweepRow {
        axis: spec.axis.kind,
        value,
        receiver: kind,
        n_trials: n,
        events: 0,
        mdr: None,
        far: None,
        sync_rmse: None,
        ci_low: None,
        ci_high: None,
        elapsed_s,
        incomplete,
    };
    if spec.scenario == Scenario::LpssSync {
        row.events = done.iter().filter(|o| o.sync_error != 0).count();
        if n > 0 {
            let sq: f64 = done.iter().map(|o| (o.sync_error * o.sync_error) as f64).sum();
            row.sync_rmse = Some((sq / n as f64).sqrt());
        }
        return row;
    }
    row.events = done
        .iter()
        .filter(|o| match kind {
            ReceiverKind::Ed => o.ed_event,
            ReceiverKind::Cd => o.cd_event,
        })
        .count();
    if n > 0 {
        let rate = row.events as f64 / n as f64;
        let (lo, hi) = wilson(row.events, n, Z_95);
        match spec.scenario {
            Scenario::NoiseOnly => row.far = Some(rate),
            _ => row.mdr = Some(rate),
        }
        row.ci_low = Some(lo);
        row.ci_high = Some(hi);
    }
    row
}

/// Noise-only detection statistics of `n_trials` trials.
pub fn noise_statistics(
    cfg: &LpWusConfig,
    kind: ReceiverKind,
    n_trials: usize,
    seed: u64,
    ctl: &RunControl,
) -> Result<Vec<f64>, SimError> {
    if kind == ReceiverKind::Cd && cfg.n_seq < 2 {
        return Err(SimError::Spec("the coherent detector needs N_seq >= 2".into()));
    }
    let ctx = Context::new(cfg, None, EdOptions::with_threshold(f64::INFINITY), f64::INFINITY)?;
    let pool = ctl.pool()?;
    // The statistics are scale invariant, so the noise level is arbitrary.
    let base = ChannelProfile::awgn(0.0, 0);
    pool.install(|| {
        (0..n_trials)
            .into_par_iter()
            .map(|t| {
                let prof = ctx.trial_profile(&base, trial_seed(seed, CALIBRATION_STREAM, t as u64));
                let y = apply(&ctx.silence, &prof);
                let blocks = ctx.receiver.ook_blocks(&y, &ctx.entry)?;
                let r = match kind {
                    ReceiverKind::Ed => {
                        let e: Vec<f64> = blocks.iter().map(|b| crate::receiver::block_energy(b)).collect();
                        ctx.receiver.ed_decode(&e, ctx.ed)?
                    }
                    ReceiverKind::Cd => ctx.receiver.cd_decode_blocks(&blocks, f64::INFINITY)?,
                };
                Ok(r.metric)
            })
            .collect()
    })
}

/// Empirical `(1 − target_far)` quantile of the noise-only statistic, so
/// that `statistic > threshold` fires on about `target_far` of noise.
pub fn calibrate_threshold(
    cfg: &LpWusConfig,
    kind: ReceiverKind,
    target_far: f64,
    n_trials: usize,
    seed: u64,
    ctl: &RunControl,
) -> Result<f64, SimError> {
    if !(target_far > 0.0 && target_far < 1.0) {
        return Err(SimError::Spec(format!("target FAR {target_far} not in (0, 1)")));
    }
    let needed = (10.0 / target_far).ceil() as usize;
    if n_trials < needed {
        return Err(SimError::TooFewTrials {
            n: n_trials,
            needed,
            target_far,
        });
    }
    let mut stats = noise_statistics(cfg, kind, n_trials, seed, ctl)?;
    stats.sort_by(f64::total_cmp);
    let k = ((n_trials as f64 * (1.0 - target_far)).ceil() as usize).clamp(1, n_trials) - 1;
    Ok(stats[k])
}
