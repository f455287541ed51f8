//! Monte-Carlo harness: BLER sweeps, projection statistics, iteration
//! histograms and training-sample collection.
//!
//! Every frame draws its noise from its own stream (see
//! [`channel::frame_rng`]). Frames are decoded in fixed-size chunks, possibly
//! in parallel, and then folded in frame order, so stopping rules and
//! reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::baseline::{AdmmL2Config, AdmmL2Decoder, BpConfig, BpDecoder};
use crate::channel::{self, ChannelParams, LlrVector};
use crate::code::CodeModel;
use crate::cppnet::{ProjectionSample, MIN_SAMPLE_ITERS};
use crate::cppnet::CppNet;
use crate::decoder::{DecodeOutcome, ProjSummary, ProjectionObserver, ProjectorKind};
use crate::error::{Error, Result};
use crate::pdd::{PddConfig, PddDecoder};
use crate::projection::ProjStats;

/// Frames decoded per scheduling chunk.
pub const CHUNK_FRAMES: usize = 256;

/// Name of the environment variable capping worker threads.
pub const THREADS_ENV: &str = "POLYDEC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecoderSpec {
    Pdd(PddConfig),
    AdmmL2(AdmmL2Config),
    Bp(BpConfig),
}

impl DecoderSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DecoderSpec::Pdd(_) => "pdd",
            DecoderSpec::AdmmL2(_) => "admm-l2",
            DecoderSpec::Bp(_) => "bp",
        }
    }
}

/// A constructed decoder of any supported kind.
#[derive(Debug, Clone)]
pub enum AnyDecoder<'a> {
    Pdd(PddDecoder<'a>),
    AdmmL2(AdmmL2Decoder<'a>),
    Bp(BpDecoder<'a>),
}

impl<'a> AnyDecoder<'a> {
    pub fn new(code: &'a CodeModel, spec: &DecoderSpec, net: Option<&'a CppNet>) -> Result<Self> {
        Ok(match *spec {
            DecoderSpec::Pdd(cfg) => AnyDecoder::Pdd(PddDecoder::new(code, cfg, net)?),
            DecoderSpec::AdmmL2(cfg) => AnyDecoder::AdmmL2(AdmmL2Decoder::new(code, cfg, net)?),
            DecoderSpec::Bp(cfg) => {
                if net.is_some() {
                    return Err(Error::Config("bp decoder takes no weight file".into()));
                }
                AnyDecoder::Bp(BpDecoder::new(code, cfg)?)
            }
        })
    }

    pub fn decode_observed(&self, v: &LlrVector, observer: &mut dyn ProjectionObserver) -> Result<DecodeOutcome> {
        match self {
            AnyDecoder::Pdd(d) => d.decode_observed(v, observer),
            AnyDecoder::AdmmL2(d) => d.decode_observed(v, observer),
            AnyDecoder::Bp(d) => d.decode(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub snrs: Vec<f64>,
    pub min_block_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub decoder: DecoderSpec,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snrs.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.min_block_errors == 0 {
            return Err(Error::Config("min_block_errors must be at least 1".into()));
        }
        if self.max_frames == 0 {
            return Err(Error::Config("max_frames must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of a sweep report.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub ebn0_db: f64,
    pub frames: u64,
    pub block_errors: u64,
    pub bler: f64,
    /// Mean projection iterations over calls that entered the loop.
    pub mean_proj_iters: f64,
    pub worst_proj_iters: u32,
    /// Mean multiplies and adds per projection call that entered the loop.
    pub mean_muls: f64,
    pub mean_adds: f64,
    pub mean_outer_iters: f64,
    /// The frame budget ran out before `min_block_errors` were seen.
    pub error_starved: bool,
    pub proj: ProjSummary,
}

impl SimRow {
    /// Half-width of the 95% normal-approximation binomial interval.
    pub fn ci95(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        1.96 * (self.bler * (1.0 - self.bler) / self.frames as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub decoder: String,
    pub rows: Vec<SimRow>,
}

impl SimReport {
    pub const CSV_HEADER: &'static str = "ebn0_db,frames,block_errors,bler,mean_proj_iters,worst_proj_iters,mean_muls,mean_adds,mean_outer_iters,error_starved";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.ebn0_db,
                r.frames,
                r.block_errors,
                r.bler,
                r.mean_proj_iters,
                r.worst_proj_iters,
                r.mean_muls,
                r.mean_adds,
                r.mean_outer_iters,
                r.error_starved
            );
        }
        out
    }

    /// Two-column `ebn0_db bler` data for gnuplot.
    pub fn to_plot_data(&self) -> String {
        let mut out = format!("# {} ebn0_db bler\n", self.decoder);
        for r in &self.rows {
            let _ = writeln!(out, "{} {}", r.ebn0_db, r.bler);
        }
        out
    }
}

/// Builds a rayon pool honouring `POLYDEC_THREADS` (or `threads` if given).
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let env = std::env::var(THREADS_ENV).ok();
    let n = match (threads, env) {
        (Some(n), _) => n,
        (None, Some(s)) => s
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}='{s}' is not a thread count")))?,
        (None, None) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// Runs `per_frame` on frames `start..start+len`, in parallel when
/// `parallel`, returning results in frame order.
fn run_chunk<T, F>(start: u64, len: u64, parallel: bool, per_frame: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if parallel {
        (start..start + len).into_par_iter().map(&per_frame).collect()
    } else {
        (start..start + len).map(per_frame).collect()
    }
}

struct FrameResult {
    block_error: bool,
    outer_iters: u32,
    proj: ProjSummary,
}

/// Noise streams are keyed by the SNR value itself, so every decoder and
/// every sweep sees the same frames at a given point.
fn noisy_frame(code: &CodeModel, params: &ChannelParams, point: u64, frame: u64) -> LlrVector {
    let mut rng = params.frame_rng(point, frame);
    channel::all_zero_frame(code.n_vars(), params.sigma2(), &mut rng)
}

/// BLER sweep with the all-zero codeword.
///
/// `parallel = false` decodes strictly serially; the report is identical
/// either way.
pub fn run_sweep(code: &CodeModel, spec: &SweepSpec, net: Option<&CppNet>, parallel: bool) -> Result<SimReport> {
    spec.validate()?;
    let decoder = AnyDecoder::new(code, &spec.decoder, net)?;
    let mut rows = Vec::with_capacity(spec.snrs.len());
    for &snr in &spec.snrs {
        let params = ChannelParams::new(snr, code.rate(), spec.seed)?;
        let point = snr.to_bits();
        let mut frames = 0u64;
        let mut errors = 0u64;
        let mut outer_sum = 0u64;
        let mut proj = ProjSummary::default();

        'frames: while frames < spec.max_frames {
            let len = (CHUNK_FRAMES as u64).min(spec.max_frames - frames);
            let results = run_chunk(frames, len, parallel, |f| {
                let v = noisy_frame(code, &params, point, f);
                let out = decoder.decode_observed(&v, &mut ())?;
                Ok(FrameResult {
                    block_error: out.bits.iter().any(|&b| b != 0),
                    outer_iters: out.outer_iters,
                    proj: out.proj,
                })
            })?;
            for r in results {
                frames += 1;
                outer_sum += u64::from(r.outer_iters);
                proj.merge(&r.proj);
                if r.block_error {
                    errors += 1;
                    if errors >= spec.min_block_errors {
                        break 'frames;
                    }
                }
            }
        }

        let (mean_muls, mean_adds) = proj.mean_ops();
        rows.push(SimRow {
            ebn0_db: snr,
            frames,
            block_errors: errors,
            bler: errors as f64 / frames as f64,
            mean_proj_iters: proj.mean_iters(),
            worst_proj_iters: proj.worst_iters,
            mean_muls,
            mean_adds,
            mean_outer_iters: outer_sum as f64 / frames as f64,
            error_starved: errors < spec.min_block_errors,
            proj,
        });
    }
    Ok(SimReport {
        decoder: spec.decoder.name().into(),
        rows,
    })
}

/// Distribution of projection loop counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationHistogram {
    pub ebn0_db: f64,
    pub frames: u64,
    /// Calls whose clamped input was already feasible. They are also
    /// counted in `counts` under `K = 1`, the single residual evaluation.
    pub membership_calls: u64,
    /// Iteration count `K` → number of calls, over all calls.
    pub counts: BTreeMap<u32, u64>,
}

impl IterationHistogram {
    pub fn total_calls(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn loop_calls(&self) -> u64 {
        self.total_calls() - self.membership_calls
    }

    /// `(K, frequency)` over all calls.
    pub fn frequencies(&self) -> Vec<(u32, f64)> {
        let total = self.total_calls() as f64;
        self.counts.iter().map(|(&k, &c)| (k, c as f64 / total)).collect()
    }

    /// Most frequent iteration count (smallest on ties).
    pub fn mode(&self) -> Option<u32> {
        let mut best: Option<(u32, u64)> = None;
        for (&k, &c) in &self.counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best.map(|(k, _)| k)
    }

    fn merge(&mut self, other: &IterationHistogram) {
        self.membership_calls += other.membership_calls;
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_default() += c;
        }
    }
}

impl ProjectionObserver for IterationHistogram {
    fn observe(&mut self, _input: &[f64], stats: &ProjStats) {
        let k = if stats.entered_loop() {
            stats.iterations
        } else {
            self.membership_calls += 1;
            1
        };
        *self.counts.entry(k).or_default() += 1;
    }
}

pub const HIST_CSV_HEADER: &str = "ebn0_db,k_iters,count,frequency";

pub fn histograms_to_csv(hists: &[IterationHistogram]) -> String {
    let mut out = String::from(HIST_CSV_HEADER);
    out.push('\n');
    for h in hists {
        for (k, f) in h.frequencies() {
            let _ = writeln!(out, "{},{},{},{}", h.ebn0_db, k, h.counts[&k], f);
        }
    }
    out
}

/// Runs `frames` PDD frames at `ebn0_db` and histograms every projection.
pub fn iteration_histogram(
    code: &CodeModel,
    cfg: PddConfig,
    net: Option<&CppNet>,
    ebn0_db: f64,
    frames: u64,
    seed: u64,
    parallel: bool,
) -> Result<IterationHistogram> {
    let decoder = PddDecoder::new(code, cfg, net)?;
    let params = ChannelParams::new(ebn0_db, code.rate(), seed)?;
    let mut hist = IterationHistogram {
        ebn0_db,
        frames,
        ..IterationHistogram::default()
    };
    let mut done = 0u64;
    while done < frames {
        let len = (CHUNK_FRAMES as u64).min(frames - done);
        let parts = run_chunk(done, len, parallel, |f| {
            let v = noisy_frame(code, &params, params.ebn0_db.to_bits(), f);
            let mut h = IterationHistogram::default();
            decoder.decode_observed(&v, &mut h)?;
            Ok(h)
        })?;
        for h in &parts {
            hist.merge(h);
        }
        done += len;
    }
    Ok(hist)
}

/// Projection statistics of a decoding run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjBenchRow {
    pub projector: ProjectorKind,
    pub frames: u64,
    pub summary: ProjSummary,
}

impl ProjBenchRow {
    pub const CSV_HEADER: &'static str = "projector,frames,calls,loop_calls,mean_iters,worst_iters,mean_muls,mean_adds";

    pub fn csv_line(&self) -> String {
        let (m, a) = self.summary.mean_ops();
        format!(
            "{},{},{},{},{},{},{},{}",
            match self.projector {
                ProjectorKind::Icpp => "icpp",
                ProjectorKind::Ncpp => "ncpp",
            },
            self.frames,
            self.summary.calls,
            self.summary.loop_calls,
            self.summary.mean_iters(),
            self.summary.worst_iters,
            m,
            a
        )
    }
}

/// Decodes whole chunks of PDD frames until at least `min_loop_calls`
/// projections have entered the loop or `max_frames` frames are used.
#[allow(clippy::too_many_arguments)]
pub fn projection_stats(
    code: &CodeModel,
    cfg: PddConfig,
    net: Option<&CppNet>,
    ebn0_db: f64,
    min_loop_calls: u64,
    max_frames: u64,
    seed: u64,
    parallel: bool,
) -> Result<ProjBenchRow> {
    let decoder = PddDecoder::new(code, cfg, net)?;
    let params = ChannelParams::new(ebn0_db, code.rate(), seed)?;
    let mut summary = ProjSummary::default();
    let mut frames = 0u64;
    while frames < max_frames && summary.loop_calls < min_loop_calls {
        let len = (CHUNK_FRAMES as u64).min(max_frames - frames);
        let parts = run_chunk(frames, len, parallel, |f| {
            let v = noisy_frame(code, &params, params.ebn0_db.to_bits(), f);
            Ok(decoder.decode(&v)?.proj)
        })?;
        for p in &parts {
            summary.merge(p);
        }
        frames += len;
    }
    Ok(ProjBenchRow {
        projector: cfg.projector,
        frames,
        summary,
    })
}

struct SampleSink {
    k_min: u32,
    samples: Vec<ProjectionSample>,
}

impl ProjectionObserver for SampleSink {
    fn observe(&mut self, input: &[f64], stats: &ProjStats) {
        if stats.iterations >= self.k_min {
            self.samples.push(ProjectionSample {
                features: input.to_vec(),
                label: stats.s_total,
                k_iters: stats.iterations,
            });
        }
    }
}

/// Collected samples split into training and validation sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub train: Vec<ProjectionSample>,
    pub validation: Vec<ProjectionSample>,
    pub frames: u64,
    /// Degrees for which fewer than the requested samples were found.
    pub short_degrees: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectSpec {
    pub ebn0_db: f64,
    pub train_per_degree: usize,
    pub validation_per_degree: usize,
    pub k_min: u32,
    pub max_frames: u64,
    pub seed: u64,
}

impl Default for CollectSpec {
    fn default() -> Self {
        CollectSpec {
            ebn0_db: 5.0,
            train_per_degree: 100_000,
            validation_per_degree: 10_000,
            k_min: MIN_SAMPLE_ITERS,
            max_frames: 1_000_000,
            seed: 1,
        }
    }
}

/// Records projection inputs with their converged shifts while decoding
/// with the plain iterative projector.
pub fn collect_samples(code: &CodeModel, cfg: PddConfig, spec: &CollectSpec, parallel: bool) -> Result<SampleSet> {
    if spec.k_min < MIN_SAMPLE_ITERS {
        return Err(Error::Config(format!("k_min must be at least {MIN_SAMPLE_ITERS}")));
    }
    if cfg.projector != ProjectorKind::Icpp {
        return Err(Error::Config("sample collection requires the icpp projector".into()));
    }
    let decoder = PddDecoder::new(code, cfg, None)?;
    let params = ChannelParams::new(spec.ebn0_db, code.rate(), spec.seed)?;
    let target = spec.train_per_degree + spec.validation_per_degree;
    let degrees = code.distinct_check_degrees();
    let mut by_degree: BTreeMap<usize, Vec<ProjectionSample>> = degrees.iter().map(|&d| (d, Vec::new())).collect();
    let mut frames = 0u64;
    let full = |m: &BTreeMap<usize, Vec<ProjectionSample>>| m.values().all(|v| v.len() >= target);

    while frames < spec.max_frames && !full(&by_degree) {
        let len = (CHUNK_FRAMES as u64).min(spec.max_frames - frames);
        let parts = run_chunk(frames, len, parallel, |f| {
            let v = noisy_frame(code, &params, params.ebn0_db.to_bits(), f);
            let mut sink = SampleSink {
                k_min: spec.k_min,
                samples: Vec::new(),
            };
            decoder.decode_observed(&v, &mut sink)?;
            Ok(sink.samples)
        })?;
        for part in parts {
            frames += 1;
            for s in part {
                let bucket = by_degree.entry(s.degree()).or_default();
                if bucket.len() < target {
                    bucket.push(s);
                }
            }
            if full(&by_degree) {
                break;
            }
        }
    }

    let mut set = SampleSet {
        frames,
        ..SampleSet::default()
    };
    for (d, mut group) in by_degree {
        if group.len() < target {
            set.short_degrees.push(d);
        }
        let n_train = spec.train_per_degree.min(group.len());
        let val = group.split_off(n_train);
        set.train.extend(group);
        set.validation.extend(val);
    }
    Ok(set)
}
