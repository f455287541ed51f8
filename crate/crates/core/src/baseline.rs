//! Reference decoders: flooding sum-product BP and the ADMM decoder with an
//! ℓ2 penalty pushing variables away from 1/2.

use crate::channel::LlrVector;
use crate::code::CodeModel;
use crate::cppnet::CppNet;
use crate::decoder::{hard_decision, net_costs, DecodeOutcome, ProjSummary, ProjectionObserver, ProjectorKind};
use crate::error::{Error, Result};
use crate::pdd::make_projector;
use crate::projection::{CheckProjector, OpCount};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub max_iters: u32,
    pub early_exit_on_syndrome: bool,
    /// Magnitude cap applied to every message.
    pub llr_clip: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iters: 100,
            early_exit_on_syndrome: true,
            llr_clip: 30.0,
        }
    }
}

/// Flooding sum-product decoder with the exact tanh check rule.
#[derive(Debug, Clone)]
pub struct BpDecoder<'a> {
    code: &'a CodeModel,
    cfg: BpConfig,
}

impl<'a> BpDecoder<'a> {
    pub fn new(code: &'a CodeModel, cfg: BpConfig) -> Result<Self> {
        if !(cfg.llr_clip > 0.0) {
            return Err(Error::Config(format!("llr_clip must be positive, got {}", cfg.llr_clip)));
        }
        Ok(BpDecoder { code, cfg })
    }

    pub fn decode(&self, v: &LlrVector) -> Result<DecodeOutcome> {
        let code = self.code;
        let v = v.as_slice();
        if v.len() != code.n_vars() {
            return Err(Error::LengthMismatch {
                expected: code.n_vars(),
                got: v.len(),
            });
        }
        let clip = self.cfg.llr_clip;
        let e = code.n_edges();
        // Variable-to-check messages start from the channel.
        let mut v2c: Vec<f64> = (0..e).map(|k| v[code.edge_var(k)].clamp(-clip, clip)).collect();
        let mut c2v = vec![0.0; e];
        let mut total = v.to_vec();
        let mut bits: Vec<u8> = v.iter().map(|&x| u8::from(x < 0.0)).collect();
        let mut prefix = Vec::new();
        let mut iters = 0u32;

        if self.cfg.early_exit_on_syndrome && code.syndrome_holds(&bits) {
            return Ok(outcome(code, bits, 0));
        }
        while iters < self.cfg.max_iters {
            iters += 1;
            for j in 0..code.n_checks() {
                let edges = code.check_edges(j);
                let t: Vec<f64> = edges.clone().map(|k| (0.5 * v2c[k]).tanh()).collect();
                // Leave-one-out products via prefix/suffix sweeps.
                prefix.clear();
                let mut acc = 1.0;
                for &ti in &t {
                    prefix.push(acc);
                    acc *= ti;
                }
                let mut suffix = 1.0;
                for (idx, k) in edges.enumerate().rev() {
                    let prod = prefix[idx] * suffix;
                    suffix *= t[idx];
                    c2v[k] = (2.0 * prod.clamp(-1.0, 1.0).atanh()).clamp(-clip, clip);
                }
            }
            for i in 0..code.n_vars() {
                let s: f64 = v[i] + code.var_edges(i).iter().map(|&k| c2v[k]).sum::<f64>();
                total[i] = s;
                for &k in code.var_edges(i) {
                    v2c[k] = (s - c2v[k]).clamp(-clip, clip);
                }
            }
            bits.clear();
            bits.extend(total.iter().map(|&x| u8::from(x < 0.0)));
            if self.cfg.early_exit_on_syndrome && code.syndrome_holds(&bits) {
                break;
            }
        }
        Ok(outcome(code, bits, iters))
    }
}

fn outcome(code: &CodeModel, bits: Vec<u8>, iters: u32) -> DecodeOutcome {
    let converged = code.syndrome_holds(&bits);
    DecodeOutcome {
        bits,
        converged,
        outer_iters: iters,
        inner_iters_total: iters,
        proj: ProjSummary::default(),
    }
}

pub fn decode_bp(code: &CodeModel, v: &LlrVector, cfg: BpConfig) -> Result<DecodeOutcome> {
    BpDecoder::new(code, cfg)?.decode(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmL2Config {
    /// Augmented Lagrangian penalty.
    pub mu: f64,
    /// Weight of the `-α‖x - 1/2‖²` penalty.
    pub alpha: f64,
    pub max_iters: u32,
    /// Stop when both primal and copy-change residuals (L∞) fall below this.
    pub tol: f64,
    pub epsilon_proj: f64,
    pub projector: ProjectorKind,
}

impl Default for AdmmL2Config {
    fn default() -> Self {
        AdmmL2Config {
            mu: 3.0,
            alpha: 0.8,
            max_iters: 1000,
            tol: 1e-5,
            epsilon_proj: 1e-6,
            projector: ProjectorKind::Icpp,
        }
    }
}

/// ADMM penalized decoder sharing the check-polytope projectors.
#[derive(Debug, Clone)]
pub struct AdmmL2Decoder<'a> {
    code: &'a CodeModel,
    cfg: AdmmL2Config,
    projector: CheckProjector<'a>,
    net_costs: Vec<OpCount>,
}

impl<'a> AdmmL2Decoder<'a> {
    pub fn new(code: &'a CodeModel, cfg: AdmmL2Config, net: Option<&'a CppNet>) -> Result<Self> {
        if !(cfg.mu > 0.0) || !(cfg.alpha >= 0.0) || !(cfg.tol > 0.0) || !(cfg.epsilon_proj > 0.0) {
            return Err(Error::Config(format!("invalid ADMM-l2 parameters {cfg:?}")));
        }
        let min_dv = code.var_degrees().into_iter().min().unwrap_or(1) as f64;
        if cfg.mu * min_dv <= 2.0 * cfg.alpha {
            return Err(Error::Config(format!(
                "ADMM-l2 needs mu * d_v > 2 alpha (mu {}, alpha {}, min d_v {min_dv})",
                cfg.mu, cfg.alpha
            )));
        }
        let projector = make_projector(cfg.projector, cfg.epsilon_proj, net)?;
        let degrees = code.distinct_check_degrees();
        projector.check_degrees(&degrees)?;
        let net_costs = net_costs(projector.net(), &degrees)?;
        Ok(AdmmL2Decoder {
            code,
            cfg,
            projector,
            net_costs,
        })
    }

    pub fn decode(&self, v: &LlrVector) -> Result<DecodeOutcome> {
        self.decode_observed(v, &mut ())
    }

    pub fn decode_observed(&self, v: &LlrVector, observer: &mut dyn ProjectionObserver) -> Result<DecodeOutcome> {
        let code = self.code;
        let gamma = v.as_slice();
        if gamma.len() != code.n_vars() {
            return Err(Error::LengthMismatch {
                expected: code.n_vars(),
                got: gamma.len(),
            });
        }
        let AdmmL2Config { mu, alpha, .. } = self.cfg;
        let e = code.n_edges();
        let mut x = vec![0.5; code.n_vars()];
        let mut z = vec![0.5; e];
        let mut lambda = vec![0.0; e];
        let mut input = Vec::new();
        let mut output = Vec::new();
        let mut summary = ProjSummary::default();
        let mut bits = Vec::with_capacity(code.n_vars());
        let mut iters = 0u32;

        while iters < self.cfg.max_iters {
            iters += 1;
            for (i, xi) in x.iter_mut().enumerate() {
                let edges = code.var_edges(i);
                let s: f64 = edges.iter().map(|&k| z[k] - lambda[k] / mu).sum();
                let num = s - (gamma[i] + alpha) / mu;
                let den = edges.len() as f64 - 2.0 * alpha / mu;
                *xi = (num / den).clamp(0.0, 1.0);
                if !xi.is_finite() {
                    return Err(Error::Numeric(format!("ADMM x-update for variable {i} is not finite")));
                }
            }
            let mut primal = 0.0f64;
            let mut dual = 0.0f64;
            for j in 0..code.n_checks() {
                let edges = code.check_edges(j);
                let d = edges.len();
                input.clear();
                input.extend(edges.clone().map(|k| x[code.edge_var(k)] + lambda[k] / mu));
                output.resize(d, 0.0);
                let stats = self.projector.project_into(&input, &mut output)?;
                let cost = self.net_costs.get(d).copied().unwrap_or_default();
                summary.record(&stats, OpCount::of_projection(&stats, d, cost));
                observer.observe(&input, &stats);
                for (k, &new) in edges.zip(&output) {
                    dual = dual.max((new - z[k]).abs());
                    z[k] = new;
                    let r = x[code.edge_var(k)] - new;
                    primal = primal.max(r.abs());
                    lambda[k] += mu * r;
                }
            }
            hard_decision(&x, &mut bits);
            if code.syndrome_holds(&bits) || (primal < self.cfg.tol && dual < self.cfg.tol) {
                break;
            }
        }
        hard_decision(&x, &mut bits);
        let converged = code.syndrome_holds(&bits);
        Ok(DecodeOutcome {
            bits,
            converged,
            outer_iters: iters,
            inner_iters_total: iters,
            proj: summary,
        })
    }
}

pub fn decode_admm_l2(code: &CodeModel, v: &LlrVector, cfg: AdmmL2Config, net: Option<&CppNet>) -> Result<DecodeOutcome> {
    AdmmL2Decoder::new(code, cfg, net)?.decode(v)
}
