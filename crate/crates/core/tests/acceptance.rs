//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::time::Instant;

use polydec::baseline::{AdmmL2Config, BpConfig};
use polydec::bench::{iteration_histogram, projection_stats, run_sweep, DecoderSpec, SimRow, SweepSpec};
use polydec::code::CodeModel;
use polydec::cppnet::CppNet;
use polydec::decoder::ProjectorKind;
use polydec::pdd::{augmented_lagrangian, update_x, update_x_hat, update_z, PddConfig, PddState, XHatRule, ZScratch};
use polydec::projection::{project_icpp, project_oracle, CheckProjector, OpCount};
use polydec::channel::LlrVector;
use polydec::decoder::ProjSummary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and protocol constants.
const ORACLE_GAP: f64 = 1e-4;
const ORACLE_SAMPLES: usize = 10_000;
const UPDATE_GAP: f64 = 1e-8;
const UPDATE_STATES: usize = 10_000;
const DESCENT_REL: f64 = 1e-9;
const TABLE_SNR: f64 = 3.0;
const TABLE_MIN_CALLS: u64 = 100_000;
const ICPP_MEAN_REF: f64 = 20.3675;
const ICPP_MEAN_BAND: f64 = 1.5;
const ICPP_WORST_MAX: u32 = 95;
const NCPP_RATIO_MAX: f64 = 0.65;
const NCPP_MEAN_REF: f64 = 11.0653;
const OPS_REL: f64 = 0.10;
const ICPP_OPS_REF: (f64, f64) = (366.61, 244.41);
const NCPP_OPS_REF: (f64, f64) = (201.17, 139.78);
const BLER_SNRS: [f64; 3] = [2.0, 3.0, 4.0];
const BLER_MIN_ERRORS: u64 = 100;
const BLER_MAX_FRAMES: u64 = 400_000;
/// Slower penalty schedule used for the error-rate comparison.
const BLER_PDD: PddConfig = PddConfig {
    mu0: 0.5,
    c: 1.02,
    max_outer: 200,
    max_inner: 50,
    tol_inner: 1e-5,
    tol_feas: 1e-5,
    epsilon_proj: 1e-6,
    projector: ProjectorKind::Icpp,
    x_hat_rule: XHatRule::Stationary,
};
const HIST_SNRS: [f64; 2] = [2.0, 5.0];
const HIST_FRAMES: u64 = 300;
const SEED: u64 = 2024;

/// Reference quantized weights for d = 6, `hidden × degree`.
const REFERENCE_D6: &str = "cppnet-v1
degree 6
hidden 3
Wa
0 0 0 -2 0 0
0 0 0 -2 0 0
1 1 -1 0 0 0
ba
0 0 0
wb
-1 1 0
bb
0
";

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "{} {name}: {detail} [{:.1?}]",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed()
        );
    }
}

fn oracle_equivalence(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for d in 3..=16 {
        for _ in 0..ORACLE_SAMPLES {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..2.0)).collect();
            let a = project_icpp(&v, 1e-6).unwrap().r;
            let b = project_oracle(&v, 1e-10);
            worst = worst.max(common::max_abs_diff(&a, &b));
        }
    }
    r.line(
        "projection oracle equivalence (d = 3..16)",
        worst <= ORACLE_GAP,
        format!("max L-inf gap {worst:.3e} <= {ORACLE_GAP:e}"),
        t,
    );
}

fn bisect_derivative(df: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if df(lo) >= 0.0 {
        return lo;
    }
    if df(hi) <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if df(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn random_state(code: &CodeModel, rng: &mut ChaCha8Rng) -> (PddState, LlrVector) {
    let mut s = PddState::new(code, rng.random_range(0.5..10.0));
    for i in 0..code.n_vars() {
        s.x[i] = rng.random_range(0.0..1.0);
        s.x_hat[i] = rng.random_range(-0.5..1.5);
        s.w[i] = rng.random_range(-3.0..3.0);
        s.eta[i] = rng.random_range(-3.0..3.0);
    }
    for j in 0..code.n_checks() {
        let raw: Vec<f64> = code.check_edges(j).map(|_| rng.random_range(-1.0..2.0)).collect();
        for (e, z) in code.check_edges(j).zip(project_oracle(&raw, 1e-12)) {
            s.z[e] = z;
        }
    }
    for y in s.y.iter_mut() {
        *y = rng.random_range(-3.0..3.0);
    }
    let v = LlrVector((0..code.n_vars()).map(|_| rng.random_range(-5.0..5.0)).collect());
    (s, v)
}

fn closed_form_updates(r: &mut Report, code: &CodeModel) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut gap_x, mut gap_xh) = (0.0f64, 0.0f64);
    let mut worst_rise = f64::NEG_INFINITY;
    let projector = CheckProjector::icpp(1e-9);
    let mut scratch = ZScratch::default();
    for _ in 0..UPDATE_STATES {
        let (s0, v) = random_state(code, &mut rng);
        let mu = s0.mu;

        let mut s = s0.clone();
        let l0 = augmented_lagrangian(&s, code, &v);
        update_x(&mut s, code, &v).unwrap();
        let l1 = augmented_lagrangian(&s, code, &v);
        for i in 0..code.n_vars() {
            let (xh, w, eta) = (s0.x_hat[i], s0.w[i], s0.eta[i]);
            let df = |t: f64| {
                let mut g = v.0[i];
                for &e in code.var_edges(i) {
                    g += mu * (t - s0.z[e] + s0.y[e] / mu);
                }
                g + mu * (xh - 1.0) * (t * (xh - 1.0) + w / mu) + mu * (t - xh + eta / mu)
            };
            gap_x = gap_x.max((bisect_derivative(df, 0.0, 1.0) - s.x[i]).abs());
        }
        let mut summary = ProjSummary::default();
        update_z(&mut s, code, &projector, &mut scratch, &[], &mut summary, &mut ()).unwrap();
        let l2 = augmented_lagrangian(&s, code, &v);
        let before_xh = s.clone();
        update_x_hat(&mut s, XHatRule::Stationary);
        let l3 = augmented_lagrangian(&s, code, &v);
        for i in 0..code.n_vars() {
            let (x, w, eta) = (before_xh.x[i], before_xh.w[i], before_xh.eta[i]);
            let df = |t: f64| mu * x * (x * (t - 1.0) + w / mu) - mu * (x - t + eta / mu);
            gap_xh = gap_xh.max((bisect_derivative(df, -100.0, 100.0) - s.x_hat[i]).abs());
        }
        for (a, b) in [(l0, l1), (l1, l2), (l2, l3)] {
            worst_rise = worst_rise.max((b - a) / a.abs().max(1.0));
        }
    }
    r.line(
        "closed-form block updates",
        gap_x <= UPDATE_GAP && gap_xh <= UPDATE_GAP && worst_rise <= DESCENT_REL,
        format!(
            "x gap {gap_x:.2e}, x-hat gap {gap_xh:.2e} (<= {UPDATE_GAP:e}); worst relative objective change {worst_rise:.2e} (<= {DESCENT_REL:e})"
        ),
        t,
    );
}

fn ncpp_cfg() -> PddConfig {
    PddConfig {
        projector: ProjectorKind::Ncpp,
        ..PddConfig::default()
    }
}

fn tables(r: &mut Report, code: &CodeModel, net: &CppNet) {
    let t = Instant::now();
    let icpp = projection_stats(code, PddConfig::default(), None, TABLE_SNR, TABLE_MIN_CALLS, u64::MAX, SEED, true).unwrap();
    let s = &icpp.summary;
    let mean = s.mean_iters();
    r.line(
        "iteration table, plain projector",
        (mean - ICPP_MEAN_REF).abs() <= ICPP_MEAN_BAND && s.worst_iters <= ICPP_WORST_MAX && s.loop_calls >= TABLE_MIN_CALLS,
        format!(
            "mean {mean:.4} (ref {ICPP_MEAN_REF} +- {ICPP_MEAN_BAND}), worst {} (<= {ICPP_WORST_MAX}), {} loop calls in {} frames",
            s.worst_iters, s.loop_calls, icpp.frames
        ),
        t,
    );

    let t = Instant::now();
    let ncpp = projection_stats(code, ncpp_cfg(), Some(net), TABLE_SNR, TABLE_MIN_CALLS, u64::MAX, SEED, true).unwrap();
    let n = &ncpp.summary;
    let ratio = n.mean_iters() / mean;
    r.line(
        "iteration table, network-seeded projector",
        ratio <= NCPP_RATIO_MAX && n.loop_calls >= TABLE_MIN_CALLS,
        format!(
            "mean {:.4} vs {mean:.4}, ratio {ratio:.3} (<= {NCPP_RATIO_MAX}), worst {} vs {}",
            n.mean_iters(),
            n.worst_iters,
            s.worst_iters
        ),
        t,
    );

    // Operation counts: the counters must equal the per-pass model exactly
    // on the measured runs, and the model must reproduce the reference
    // totals from the reference mean iteration counts.
    let t = Instant::now();
    let d = 6;
    let pass = OpCount::loop_pass(d);
    let icpp_ops = s.mean_ops();
    let icpp_model = (mean * pass.muls as f64, mean * pass.adds as f64);
    let fixture_cost = net.subnet(d).unwrap().forward_cost();
    let ncpp_ops = n.mean_ops();
    let ncpp_model = (
        n.mean_iters() * pass.muls as f64 + fixture_cost.muls as f64,
        n.mean_iters() * pass.adds as f64 + fixture_cost.adds as f64,
    );
    let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= 1e-9 * b.0 && (a.1 - b.1).abs() <= 1e-9 * b.1;

    let reference = CppNet::from_text(REFERENCE_D6).unwrap();
    let reference_cost = reference.subnet(d).unwrap().forward_cost();
    let per_call = |iters: f64, net_cost: OpCount| {
        (
            iters * pass.muls as f64 + net_cost.muls as f64,
            iters * pass.adds as f64 + net_cost.adds as f64,
        )
    };
    let icpp_ref = per_call(ICPP_MEAN_REF, OpCount::default());
    let ncpp_ref = per_call(NCPP_MEAN_REF, reference_cost);
    let within = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= OPS_REL * b.0 && (a.1 - b.1).abs() <= OPS_REL * b.1;
    r.line(
        "operation table",
        close(icpp_ops, icpp_model) && close(ncpp_ops, ncpp_model) && within(icpp_ref, ICPP_OPS_REF) && within(ncpp_ref, NCPP_OPS_REF),
        format!(
            "reference means give {:.2}/{:.2} (ref {}/{}) and {:.2}/{:.2} (ref {}/{}) muls/adds; measured {:.2}/{:.2} and {:.2}/{:.2} match the per-pass model",
            icpp_ref.0, icpp_ref.1, ICPP_OPS_REF.0, ICPP_OPS_REF.1, ncpp_ref.0, ncpp_ref.1, NCPP_OPS_REF.0, NCPP_OPS_REF.1,
            icpp_ops.0, icpp_ops.1, ncpp_ops.0, ncpp_ops.1
        ),
        t,
    );
}

fn sweep(code: &CodeModel, decoder: DecoderSpec) -> Vec<SimRow> {
    let spec = SweepSpec {
        snrs: BLER_SNRS.to_vec(),
        min_block_errors: BLER_MIN_ERRORS,
        max_frames: BLER_MAX_FRAMES,
        seed: SEED,
        decoder,
    };
    run_sweep(code, &spec, None, true).unwrap().rows
}

/// `a` is not significantly worse than `b` at the 95% level.
fn not_worse(a: &SimRow, b: &SimRow) -> bool {
    let var = |r: &SimRow| r.bler * (1.0 - r.bler) / r.frames as f64;
    a.bler - b.bler <= 1.96 * (var(a) + var(b)).sqrt()
}

fn bler_ordering(r: &mut Report, code: &CodeModel) {
    let t = Instant::now();
    let pdd = sweep(code, DecoderSpec::Pdd(BLER_PDD));
    let admm = sweep(code, DecoderSpec::AdmmL2(AdmmL2Config::default()));
    let bp = sweep(code, DecoderSpec::Bp(BpConfig::default()));
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, &snr) in BLER_SNRS.iter().enumerate() {
        let (p, a, b) = (&pdd[k], &admm[k], &bp[k]);
        let enough = [p, a, b].iter().all(|row| row.block_errors >= BLER_MIN_ERRORS);
        if snr >= 3.0 {
            pass &= enough && not_worse(p, a) && not_worse(p, b);
        }
        detail.push(format!(
            "{snr} dB: pdd {:.3e} ({}/{}), admm-l2 {:.3e} ({}/{}), bp {:.3e} ({}/{})",
            p.bler, p.block_errors, p.frames, a.bler, a.block_errors, a.frames, b.bler, b.block_errors, b.frames
        ));
    }
    detail.push(format!("pdd mu0 {}, c {}, max outer {}", BLER_PDD.mu0, BLER_PDD.c, BLER_PDD.max_outer));
    r.line("block error rate ordering at 3 and 4 dB", pass, detail.join("; "), t);
}

fn histogram_mode(r: &mut Report, code: &CodeModel) {
    let t = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for snr in HIST_SNRS {
        let h = iteration_histogram(code, PddConfig::default(), None, snr, HIST_FRAMES, SEED, true).unwrap();
        let freq = h.frequencies();
        let p1 = freq.first().map(|&(_, f)| f).unwrap_or(0.0);
        let runner_up = freq.iter().skip(1).map(|&(_, f)| f).fold(0.0, f64::max);
        pass &= h.mode() == Some(1);
        detail.push(format!(
            "{snr} dB: mode {:?}, P(K=1) {p1:.3}, next largest {runner_up:.3}",
            h.mode()
        ));
    }
    r.line("iteration histogram mode", pass, detail.join("; "), t);
}

fn determinism(r: &mut Report, code: &CodeModel, net: &CppNet) {
    let t = Instant::now();
    let spec = |decoder| SweepSpec {
        snrs: vec![2.5, 3.5],
        min_block_errors: 5,
        max_frames: 600,
        seed: SEED,
        decoder,
    };
    let mut pass = true;
    for (decoder, weights) in [
        (DecoderSpec::Pdd(PddConfig::default()), None),
        (DecoderSpec::Pdd(ncpp_cfg()), Some(net)),
        (DecoderSpec::AdmmL2(AdmmL2Config::default()), None),
        (DecoderSpec::Bp(BpConfig::default()), None),
    ] {
        let s = spec(decoder);
        let serial = run_sweep(code, &s, weights, false).unwrap().to_csv();
        let parallel = run_sweep(code, &s, weights, true).unwrap().to_csv();
        let again = run_sweep(code, &s, weights, true).unwrap().to_csv();
        pass &= serial == parallel && parallel == again;
    }
    r.line("determinism", pass, "serial, parallel and repeated sweeps give byte-identical CSV for all decoders".into(), t);
}

fn main() {
    let code = common::mackay();
    let net = common::trained_net();
    let mut report = Report { failures: 0 };
    oracle_equivalence(&mut report);
    closed_form_updates(&mut report, &common::small_code());
    tables(&mut report, &code, &net);
    histogram_mode(&mut report, &code);
    determinism(&mut report, &code, &net);
    bler_ordering(&mut report, &code);
    if report.failures > 0 {
        println!("{} acceptance criteria failed", report.failures);
        std::process::exit(1);
    }
}
