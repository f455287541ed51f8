use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polydec::baseline::{AdmmL2Config, BpConfig};
use polydec::bench::{self, CollectSpec, DecoderSpec, ProjBenchRow, SweepSpec};
use polydec::code::{parse_alist, CodeModel};
use polydec::cppnet::{write_sample_files, CppNet};
use polydec::decoder::ProjectorKind;
use polydec::pdd::PddConfig;
use polydec::Error;

#[derive(Parser)]
#[command(name = "polydec", version, about = "LP decoding benchmarks for binary linear codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BLER sweep over a list of Eb/N0 points.
    Simulate(SimulateArgs),
    /// Dump projection inputs and converged shifts for network training.
    CollectSamples(CollectArgs),
    /// Projection iteration and operation statistics while decoding.
    ProjBench(ProjBenchArgs),
    /// Histogram of projection loop counts.
    Hist(HistArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Pdd,
    #[value(name = "admm-l2")]
    AdmmL2,
    Bp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectorArg {
    Icpp,
    Ncpp,
}

#[derive(Args)]
struct CommonArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    code: PathBuf,
    /// Comma-separated Eb/N0 values in dB.
    #[arg(long, value_delimiter = ',', required = true)]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "icpp")]
    projector: ProjectorArg,
    /// cppnet-v1 weight file (required for --projector ncpp).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    mu0: f64,
    /// Penalty growth factor per outer iteration.
    #[arg(long = "c", default_value_t = 1.1)]
    c: f64,
    /// Projection convergence threshold.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 50)]
    inner_iters: u32,
    #[arg(long, default_value_t = 100)]
    outer_iters: u32,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "pdd")]
    decoder: DecoderArg,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_frames: u64,
    /// ADMM-l2 penalty parameter.
    #[arg(long, default_value_t = 3.0)]
    admm_mu: f64,
    /// ADMM-l2 penalty weight.
    #[arg(long, default_value_t = 0.8)]
    admm_alpha: f64,
    #[arg(long, default_value_t = 1000)]
    admm_iters: u32,
    #[arg(long, default_value_t = 100)]
    bp_iters: u32,
    /// Also write gnuplot-ready `ebn0 bler` data to this file.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct CollectArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 100_000)]
    train: usize,
    #[arg(long, default_value_t = 10_000)]
    val: usize,
    #[arg(long, default_value_t = 2)]
    k_min: u32,
    #[arg(long, default_value_t = 1_000_000)]
    max_frames: u64,
}

#[derive(Args)]
struct ProjBenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Stop once this many projections have entered the loop.
    #[arg(long, default_value_t = 100_000)]
    min_calls: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_frames: u64,
}

#[derive(Args)]
struct HistArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Frames decoded per SNR point.
    #[arg(long, default_value_t = 2000)]
    max_frames: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> polydec::Result<()> {
    let pool = bench::thread_pool(None)?;
    pool.install(|| match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::CollectSamples(args) => collect(args),
        Command::ProjBench(args) => proj_bench(args),
        Command::Hist(args) => hist(args),
    })
}

struct Loaded {
    code: CodeModel,
    net: Option<CppNet>,
}

fn load(common: &CommonArgs) -> polydec::Result<Loaded> {
    let text = std::fs::read_to_string(&common.code)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.code.display())))?;
    let code = parse_alist(&text)?;
    let net = match &common.weights {
        Some(p) => Some(CppNet::load(p)?),
        None => None,
    };
    Ok(Loaded { code, net })
}

fn pdd_config(common: &CommonArgs) -> PddConfig {
    PddConfig {
        mu0: common.mu0,
        c: common.c,
        max_outer: common.outer_iters,
        max_inner: common.inner_iters,
        epsilon_proj: common.epsilon,
        projector: projector_kind(common.projector),
        ..PddConfig::default()
    }
}

fn projector_kind(p: ProjectorArg) -> ProjectorKind {
    match p {
        ProjectorArg::Icpp => ProjectorKind::Icpp,
        ProjectorArg::Ncpp => ProjectorKind::Ncpp,
    }
}

fn emit(out: Option<&Path>, text: &str) -> polydec::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> polydec::Result<()> {
    let common = &args.common;
    let Loaded { code, net } = load(common)?;
    let decoder = match args.decoder {
        DecoderArg::Pdd => DecoderSpec::Pdd(pdd_config(common)),
        DecoderArg::AdmmL2 => DecoderSpec::AdmmL2(AdmmL2Config {
            mu: args.admm_mu,
            alpha: args.admm_alpha,
            max_iters: args.admm_iters,
            epsilon_proj: common.epsilon,
            projector: projector_kind(common.projector),
            ..AdmmL2Config::default()
        }),
        DecoderArg::Bp => DecoderSpec::Bp(BpConfig {
            max_iters: args.bp_iters,
            ..BpConfig::default()
        }),
    };
    let spec = SweepSpec {
        snrs: common.snr.clone(),
        min_block_errors: args.min_errors,
        max_frames: args.max_frames,
        seed: common.seed,
        decoder,
    };
    let start = Instant::now();
    let report = bench::run_sweep(&code, &spec, net.as_ref(), true)?;
    for row in report.rows.iter().filter(|r| r.error_starved) {
        eprintln!(
            "warning: {} dB reached only {} of {} block errors in {} frames",
            row.ebn0_db, row.block_errors, spec.min_block_errors, row.frames
        );
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    emit(common.out.as_deref(), &report.to_csv())?;
    if let Some(plot) = &args.plot {
        std::fs::write(plot, report.to_plot_data())?;
    }
    Ok(())
}

fn collect(args: CollectArgs) -> polydec::Result<()> {
    let common = &args.common;
    let Loaded { code, net } = load(common)?;
    if net.is_some() || !matches!(common.projector, ProjectorArg::Icpp) {
        return Err(Error::Config("collect-samples runs the icpp projector without weights".into()));
    }
    let [snr] = common.snr[..] else {
        return Err(Error::Config("collect-samples takes exactly one --snr value".into()));
    };
    let spec = CollectSpec {
        ebn0_db: snr,
        train_per_degree: args.train,
        validation_per_degree: args.val,
        k_min: args.k_min,
        max_frames: args.max_frames,
        seed: common.seed,
    };
    let set = bench::collect_samples(&code, pdd_config(common), &spec, true)?;
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("samples"));
    let train = write_sample_files(&dir.join("train"), &set.train)?;
    let val = write_sample_files(&dir.join("val"), &set.validation)?;
    for d in &set.short_degrees {
        eprintln!("warning: degree {d} did not reach the requested sample count within {} frames", set.frames);
    }
    for p in train.iter().chain(&val) {
        eprintln!("wrote {}", p.display());
    }
    eprintln!(
        "{} training and {} validation samples from {} frames",
        set.train.len(),
        set.validation.len(),
        set.frames
    );
    Ok(())
}

fn proj_bench(args: ProjBenchArgs) -> polydec::Result<()> {
    let common = &args.common;
    let Loaded { code, net } = load(common)?;
    let mut cfg = pdd_config(common);
    let mut out = String::from("ebn0_db,");
    out.push_str(ProjBenchRow::CSV_HEADER);
    out.push('\n');
    for &snr in &common.snr {
        let mut kinds = vec![ProjectorKind::Icpp];
        if net.is_some() {
            kinds.push(ProjectorKind::Ncpp);
        }
        for kind in kinds {
            cfg.projector = kind;
            let weights = match kind {
                ProjectorKind::Icpp => None,
                ProjectorKind::Ncpp => net.as_ref(),
            };
            let start = Instant::now();
            let row = bench::projection_stats(&code, cfg, weights, snr, args.min_calls, args.max_frames, common.seed, true)?;
            eprintln!("{snr} dB {:?}: {:.1?}", kind, start.elapsed());
            out.push_str(&format!("{snr},{}\n", row.csv_line()));
        }
    }
    emit(common.out.as_deref(), &out)
}

fn hist(args: HistArgs) -> polydec::Result<()> {
    let common = &args.common;
    let Loaded { code, net } = load(common)?;
    let cfg = pdd_config(common);
    let mut hists = Vec::new();
    for &snr in &common.snr {
        let h = bench::iteration_histogram(&code, cfg, net.as_ref(), snr, args.max_frames, common.seed, true)?;
        eprintln!(
            "{snr} dB: {} loop calls, {} membership calls, mode k = {:?}",
            h.loop_calls(),
            h.membership_calls,
            h.mode()
        );
        hists.push(h);
    }
    emit(common.out.as_deref(), &bench::histograms_to_csv(&hists))
}
