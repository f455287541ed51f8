//! Penalty dual decomposition (PDD) decoder over the fundamental polytope.
//!
//! The LP `min vᵀx s.t. P_j x ∈ PP_{d_j}` is rewritten with copies
//! `z_j = P_j x` and a second copy `x̂ = x` tied by `x_i(x̂_i - 1) = 0`,
//! which forces feasible points to be binary. The augmented Lagrangian
//!
//! ```text
//! vᵀx + μ/2 Σ_j ‖P_j x - z_j + y_j/μ‖²
//!     + Σ_i μ/2 (x_i(x̂_i - 1) + w_i/μ)² + μ/2 (x_i - x̂_i + η_i/μ)²
//! ```
//!
//! is minimized by block coordinate descent over `x`, `z`, `x̂` (each block
//! has a closed-form minimizer), then the multipliers `y, w, η` take a
//! dual ascent step and the penalty grows geometrically.

use crate::channel::LlrVector;
use crate::code::CodeModel;
use crate::cppnet::CppNet;
use crate::decoder::{hard_decision, net_costs, DecodeOutcome, ProjSummary, ProjectionObserver, ProjectorKind};
use crate::error::{Error, Result};
use crate::projection::{CheckProjector, OpCount};

/// Closed form used for the `x̂` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XHatRule {
    /// Stationary point of the `x̂` subproblem.
    #[default]
    Stationary,
    /// The reciprocal expression kept for comparison studies only; it is
    /// not the block minimizer.
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PddConfig {
    pub mu0: f64,
    /// Penalty growth factor per outer iteration.
    pub c: f64,
    pub max_outer: u32,
    pub max_inner: u32,
    /// Inner loop stops when the largest block change (L∞) falls below this.
    pub tol_inner: f64,
    /// Outer loop stops when every constraint residual falls below this.
    pub tol_feas: f64,
    pub epsilon_proj: f64,
    pub projector: ProjectorKind,
    pub x_hat_rule: XHatRule,
}

impl Default for PddConfig {
    fn default() -> Self {
        PddConfig {
            mu0: 1.0,
            c: 1.1,
            max_outer: 100,
            max_inner: 50,
            tol_inner: 1e-5,
            tol_feas: 1e-5,
            epsilon_proj: 1e-6,
            projector: ProjectorKind::Icpp,
            x_hat_rule: XHatRule::Stationary,
        }
    }
}

impl PddConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad(format!("mu0 must be positive, got {}", self.mu0));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return bad(format!("penalty growth c must be >= 1, got {}", self.c));
        }
        if !(self.tol_inner > 0.0 && self.tol_feas > 0.0 && self.epsilon_proj > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration caps must be at least 1".into());
        }
        Ok(())
    }
}

/// Primal and dual iterates. `z` and `y` are stored per edge in the
/// check-major order of [`CodeModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct PddState {
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub eta: Vec<f64>,
    pub mu: f64,
    /// `μ/2 Σ_j P_jᵀ(y_j/μ - z_j)` from the latest x-update.
    pub alpha: Vec<f64>,
}

impl PddState {
    /// Zero multipliers and copies, `x̂ = 0.5`.
    pub fn new(code: &CodeModel, mu0: f64) -> Self {
        let n = code.n_vars();
        let e = code.n_edges();
        PddState {
            x: vec![0.5; n],
            x_hat: vec![0.5; n],
            z: vec![0.0; e],
            y: vec![0.0; e],
            w: vec![0.0; n],
            eta: vec![0.0; n],
            mu: mu0,
            alpha: vec![0.0; n],
        }
    }
}

/// Quadratic coefficients `(a_i, b_i)` of the x-subproblem `a t² + b t`.
pub fn x_coefficients(state: &PddState, code: &CodeModel, v: &[f64], i: usize) -> (f64, f64) {
    let mu = state.mu;
    let xh = state.x_hat[i];
    let alpha = 0.5
        * mu
        * code
            .var_edges(i)
            .iter()
            .map(|&e| state.y[e] / mu - state.z[e])
            .sum::<f64>();
    let a = 0.5 * mu * (code.var_degree(i) as f64 + (xh - 1.0) * (xh - 1.0) + 1.0);
    let b = v[i] + 2.0 * alpha + state.w[i] * (xh - 1.0) + state.eta[i] - mu * xh;
    (a, b)
}

/// Exact minimization over `x ∈ [0,1]^N`; returns the L∞ change.
pub fn update_x(state: &mut PddState, code: &CodeModel, v: &LlrVector) -> Result<f64> {
    let v = v.as_slice();
    let mu = state.mu;
    let mut change = 0.0f64;
    for i in 0..code.n_vars() {
        let mut acc = 0.0;
        for &e in code.var_edges(i) {
            acc += state.y[e] / mu - state.z[e];
        }
        let alpha = 0.5 * mu * acc;
        state.alpha[i] = alpha;
        let xh = state.x_hat[i];
        let a = 0.5 * mu * (code.var_degree(i) as f64 + (xh - 1.0) * (xh - 1.0) + 1.0);
        debug_assert!(a > 0.0);
        let b = v[i] + 2.0 * alpha + state.w[i] * (xh - 1.0) + state.eta[i] - mu * xh;
        if !b.is_finite() {
            return Err(Error::Numeric(format!("x-update coefficient for variable {i} is {b}")));
        }
        let xi = (-0.5 * b / a).clamp(0.0, 1.0);
        change = change.max((xi - state.x[i]).abs());
        state.x[i] = xi;
    }
    Ok(change)
}

/// Reusable buffers for [`update_z`].
#[derive(Debug, Default)]
pub struct ZScratch {
    input: Vec<f64>,
    output: Vec<f64>,
}

/// `z_j ← Π_PP(P_j x + y_j/μ)` for every check; returns the L∞ change.
#[allow(clippy::too_many_arguments)]
pub fn update_z(
    state: &mut PddState,
    code: &CodeModel,
    projector: &CheckProjector<'_>,
    scratch: &mut ZScratch,
    net_costs: &[OpCount],
    summary: &mut ProjSummary,
    observer: &mut dyn ProjectionObserver,
) -> Result<f64> {
    let inv_mu = 1.0 / state.mu;
    let mut change = 0.0f64;
    for j in 0..code.n_checks() {
        let edges = code.check_edges(j);
        let d = edges.len();
        scratch.input.clear();
        scratch
            .input
            .extend(edges.clone().map(|e| state.x[code.edge_var(e)] + state.y[e] * inv_mu));
        scratch.output.resize(d, 0.0);
        let stats = projector.project_into(&scratch.input, &mut scratch.output)?;
        let cost = net_costs.get(d).copied().unwrap_or_default();
        summary.record(&stats, OpCount::of_projection(&stats, d, cost));
        observer.observe(&scratch.input, &stats);
        for (e, &new) in edges.zip(&scratch.output) {
            change = change.max((new - state.z[e]).abs());
            state.z[e] = new;
        }
    }
    Ok(change)
}

/// Closed-form `x̂` update; returns the L∞ change.
pub fn update_x_hat(state: &mut PddState, rule: XHatRule) -> f64 {
    let mu = state.mu;
    let mut change = 0.0f64;
    for i in 0..state.x.len() {
        let x = state.x[i];
        let (w, eta) = (state.w[i], state.eta[i]);
        let new = match rule {
            XHatRule::Stationary => (mu * (x * x + x) - w * x + eta) / (mu * (x * x + 1.0)),
            XHatRule::Reciprocal => {
                let den = 4.0 * ((w - mu * x) * x - (eta + mu * x));
                if den == 0.0 {
                    state.x_hat[i]
                } else {
                    -mu * (x * x + 1.0) / den
                }
            }
        };
        change = change.max((new - state.x_hat[i]).abs());
        state.x_hat[i] = new;
    }
    change
}

/// Dual ascent on `y, w, η`, then `μ ← c·μ`.
pub fn update_duals(state: &mut PddState, code: &CodeModel, c: f64) {
    let mu = state.mu;
    for (e, (y, z)) in state.y.iter_mut().zip(&state.z).enumerate() {
        *y += mu * (state.x[code.edge_var(e)] - z);
    }
    for i in 0..state.x.len() {
        let (x, xh) = (state.x[i], state.x_hat[i]);
        state.w[i] += mu * x * (xh - 1.0);
        state.eta[i] += mu * (x - xh);
    }
    state.mu = c * mu;
}

/// Largest constraint violation: `‖P_j x - z_j‖∞`, `|x_i(x̂_i - 1)|`,
/// `|x_i - x̂_i|`.
pub fn feasibility_residual(state: &PddState, code: &CodeModel) -> f64 {
    let mut r = 0.0f64;
    for (e, &z) in state.z.iter().enumerate() {
        r = r.max((state.x[code.edge_var(e)] - z).abs());
    }
    for (&x, &xh) in state.x.iter().zip(&state.x_hat) {
        r = r.max((x * (xh - 1.0)).abs()).max((x - xh).abs());
    }
    r
}

/// The augmented Lagrangian at the current iterate.
pub fn augmented_lagrangian(state: &PddState, code: &CodeModel, v: &LlrVector) -> f64 {
    let mu = state.mu;
    let linear: f64 = v.as_slice().iter().zip(&state.x).map(|(a, b)| a * b).sum();
    let mut pen = 0.0;
    for e in 0..code.n_edges() {
        let r = state.x[code.edge_var(e)] - state.z[e] + state.y[e] / mu;
        pen += r * r;
    }
    let mut var_pen = 0.0;
    for i in 0..state.x.len() {
        let (x, xh) = (state.x[i], state.x_hat[i]);
        let a = x * (xh - 1.0) + state.w[i] / mu;
        let b = x - xh + state.eta[i] / mu;
        var_pen += a * a + b * b;
    }
    linear + 0.5 * mu * (pen + var_pen)
}

/// PDD decoder bound to a code and configuration.
#[derive(Debug, Clone)]
pub struct PddDecoder<'a> {
    code: &'a CodeModel,
    cfg: PddConfig,
    projector: CheckProjector<'a>,
    net_costs: Vec<OpCount>,
}

impl<'a> PddDecoder<'a> {
    /// `net` must be given iff the configured projector is NCPP and must
    /// cover every check degree of `code`.
    pub fn new(code: &'a CodeModel, cfg: PddConfig, net: Option<&'a CppNet>) -> Result<Self> {
        cfg.validate()?;
        let projector = make_projector(cfg.projector, cfg.epsilon_proj, net)?;
        let degrees = code.distinct_check_degrees();
        projector.check_degrees(&degrees)?;
        let net_costs = net_costs(projector.net(), &degrees)?;
        Ok(PddDecoder {
            code,
            cfg,
            projector,
            net_costs,
        })
    }

    pub fn config(&self) -> &PddConfig {
        &self.cfg
    }

    pub fn decode(&self, v: &LlrVector) -> Result<DecodeOutcome> {
        self.decode_observed(v, &mut ())
    }

    pub fn decode_observed(&self, v: &LlrVector, observer: &mut dyn ProjectionObserver) -> Result<DecodeOutcome> {
        self.decode_with_trace(v, observer, &mut |_| {})
    }

    /// Like [`decode_observed`](Self::decode_observed), additionally
    /// reporting the feasibility residual after every outer iteration.
    pub fn decode_with_trace(
        &self,
        v: &LlrVector,
        observer: &mut dyn ProjectionObserver,
        on_outer: &mut dyn FnMut(f64),
    ) -> Result<DecodeOutcome> {
        let code = self.code;
        if v.len() != code.n_vars() {
            return Err(Error::LengthMismatch {
                expected: code.n_vars(),
                got: v.len(),
            });
        }
        let cfg = &self.cfg;
        let mut state = PddState::new(code, cfg.mu0);
        let mut scratch = ZScratch::default();
        let mut summary = ProjSummary::default();
        let mut bits = Vec::with_capacity(code.n_vars());
        let mut inner_total = 0u32;
        let mut outer = 0u32;

        while outer < cfg.max_outer {
            for _ in 0..cfg.max_inner {
                let dx = update_x(&mut state, code, v)?;
                let dz = update_z(
                    &mut state,
                    code,
                    &self.projector,
                    &mut scratch,
                    &self.net_costs,
                    &mut summary,
                    observer,
                )?;
                let dxh = update_x_hat(&mut state, cfg.x_hat_rule);
                inner_total += 1;
                if !dxh.is_finite() {
                    return Err(Error::Numeric("x-hat update produced a non-finite value".into()));
                }
                if dx.max(dz).max(dxh) < cfg.tol_inner {
                    break;
                }
            }
            outer += 1;

            hard_decision(&state.x, &mut bits);
            if code.syndrome_holds(&bits) {
                on_outer(feasibility_residual(&state, code));
                break;
            }
            let residual = feasibility_residual(&state, code);
            on_outer(residual);
            if residual < cfg.tol_feas {
                break;
            }
            update_duals(&mut state, code, cfg.c);
        }

        hard_decision(&state.x, &mut bits);
        let converged = code.syndrome_holds(&bits);
        Ok(DecodeOutcome {
            bits,
            converged,
            outer_iters: outer,
            inner_iters_total: inner_total,
            proj: summary,
        })
    }
}

pub(crate) fn make_projector<'a>(
    kind: ProjectorKind,
    epsilon: f64,
    net: Option<&'a CppNet>,
) -> Result<CheckProjector<'a>> {
    match (kind, net) {
        (ProjectorKind::Icpp, None) => Ok(CheckProjector::icpp(epsilon)),
        (ProjectorKind::Ncpp, Some(net)) => Ok(CheckProjector::ncpp(epsilon, net)),
        (ProjectorKind::Icpp, Some(_)) => Err(Error::Config("weights given but projector is icpp".into())),
        (ProjectorKind::Ncpp, None) => Err(Error::Config("ncpp projector requires a weight file".into())),
    }
}

/// One-shot convenience wrapper around [`PddDecoder`].
pub fn decode(code: &CodeModel, v: &LlrVector, cfg: PddConfig, net: Option<&CppNet>) -> Result<DecodeOutcome> {
    PddDecoder::new(code, cfg, net)?.decode(v)
}
