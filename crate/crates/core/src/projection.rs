//! Euclidean projection onto the parity polytope `PP_d`.
//!
//! `PP_d` is the convex hull of the even-weight vectors of `{0,1}^d`. If the
//! clamped point `Π_[0,1]^d(v)` is not already inside, the projection lies on
//! a single odd-set facet `θᵀx = p` and has the form `Π_[0,1]^d(v - sθ)` for
//! one scalar shift `s ≥ 0`. The facet is read off `v` directly
//! ([`build_cut`]); the projectors here differ only in how they find `s`:
//!
//! * [`CheckProjector::icpp`] runs the fixed-point iteration
//!   `s ← s + (θᵀΠ(v - sθ) - p) / d` from the first residual.
//! * [`CheckProjector::ncpp`] starts the same iteration from a shift
//!   predicted by a [`CppNet`] subnetwork.
//! * [`project_oracle`] bisects the monotone residual and is used as the
//!   reference in tests.

use crate::cppnet::{CppNet, Subnet};
use crate::error::{Error, Result};

/// Default iteration cap for the fixed-point loop.
pub const DEFAULT_MAX_ITERS: u32 = 10_000;

/// Default convergence threshold.
pub const DEFAULT_EPSILON: f64 = 1e-6;

// Distances to 0.5 closer than this count as a tie in the flip search, so
// decimal ties such as 0.8 vs 0.2 resolve to the lowest index.
const TIE_TOL: f64 = 1e-12;

/// Componentwise clamp to `[0, 1]`.
pub fn box_project(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| clamp01(x)).collect()
}

#[inline]
pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Odd-set facet `θᵀx ≤ p` of `PP_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutHyperplane {
    pub theta: Vec<i8>,
    pub p: usize,
}

impl CutHyperplane {
    /// `θᵀx - p`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        dot_theta(&self.theta, x) - self.p as f64
    }
}

fn dot_theta(theta: &[i8], x: &[f64]) -> f64 {
    theta
        .iter()
        .zip(x)
        .map(|(&t, &xi)| if t > 0 { xi } else { -xi })
        .sum()
}

/// Sign pattern and flip position for the facet associated with `v`.
///
/// `θ_i = sgn(v_i - 0.5)` with `sgn(0) = +1`; when the number of `+1`
/// entries is even, the entry closest to 0.5 (lowest index on ties) is
/// flipped. Distances within `1e-12` of each other count as ties.
#[derive(Debug, Clone, Copy)]
struct Cut {
    flip: Option<usize>,
    p: usize,
}

impl Cut {
    fn of(v: &[f64]) -> Cut {
        let mut positives = 0usize;
        let mut closest = 0usize;
        let mut closest_dist = f64::INFINITY;
        for (i, &x) in v.iter().enumerate() {
            if x >= 0.5 {
                positives += 1;
            }
            let dist = (x - 0.5).abs();
            if dist < closest_dist - TIE_TOL {
                closest_dist = dist;
                closest = i;
            }
        }
        if positives.is_multiple_of(2) {
            let flip_was_positive = v[closest] >= 0.5;
            let positives = if flip_was_positive {
                positives - 1
            } else {
                positives + 1
            };
            Cut {
                flip: Some(closest),
                p: positives - 1,
            }
        } else {
            Cut {
                flip: None,
                p: positives - 1,
            }
        }
    }

    #[inline]
    fn theta(&self, v: &[f64], i: usize) -> f64 {
        let s = if v[i] >= 0.5 { 1.0 } else { -1.0 };
        if self.flip == Some(i) {
            -s
        } else {
            s
        }
    }
}

/// Builds the assistant hyperplane for `v`.
pub fn build_cut(v: &[f64]) -> CutHyperplane {
    assert!(v.len() >= 2, "parity polytope needs d >= 2");
    let cut = Cut::of(v);
    let theta = (0..v.len())
        .map(|i| if cut.theta(v, i) > 0.0 { 1 } else { -1 })
        .collect();
    CutHyperplane { theta, p: cut.p }
}

/// Per-call statistics of one projection.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProjStats {
    /// Iteration counter `k` at exit. The plain iterative projector starts
    /// from a zero shift, so its first counted iteration only produces the
    /// initial residual; the warm-started one counts passes after the net.
    /// Zero when the clamped input was already inside the polytope.
    pub iterations: u32,
    /// True when the warm-start network was evaluated.
    pub used_net: bool,
    /// Accumulated shift, including the network's initial estimate.
    pub s_total: f64,
}

impl ProjStats {
    /// True when the loop was entered, i.e. the input was not a member.
    pub fn entered_loop(&self) -> bool {
        self.iterations > 0
    }
}

/// Outcome of a standalone projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub r: Vec<f64>,
    pub iterations: u32,
    pub used_net: bool,
    pub s_total: f64,
}

/// Reusable check-polytope projector, either plain iterative or
/// network-warm-started.
#[derive(Debug, Clone, Copy)]
pub struct CheckProjector<'a> {
    pub epsilon: f64,
    pub max_iters: u32,
    net: Option<&'a CppNet>,
}

impl<'a> CheckProjector<'a> {
    pub fn icpp(epsilon: f64) -> Self {
        CheckProjector {
            epsilon,
            max_iters: DEFAULT_MAX_ITERS,
            net: None,
        }
    }

    pub fn ncpp(epsilon: f64, net: &'a CppNet) -> Self {
        CheckProjector {
            epsilon,
            max_iters: DEFAULT_MAX_ITERS,
            net: Some(net),
        }
    }

    pub fn with_max_iters(mut self, max_iters: u32) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn net(&self) -> Option<&'a CppNet> {
        self.net
    }

    /// Fails unless a subnetwork exists for every listed degree.
    pub fn check_degrees(&self, degrees: &[usize]) -> Result<()> {
        if let Some(net) = self.net {
            for &d in degrees {
                net.subnet(d)?;
            }
        }
        Ok(())
    }

    /// Projects `v` onto `PP_d`, writing the result into `out`.
    pub fn project_into(&self, v: &[f64], out: &mut [f64]) -> Result<ProjStats> {
        let subnet = match self.net {
            Some(net) => Some(net.subnet(v.len())?),
            None => None,
        };
        project_with(v, out, self.epsilon, self.max_iters, subnet)
    }

    pub fn project(&self, v: &[f64]) -> Result<ProjectionResult> {
        let mut r = vec![0.0; v.len()];
        let stats = self.project_into(v, &mut r)?;
        Ok(ProjectionResult {
            r,
            iterations: stats.iterations,
            used_net: stats.used_net,
            s_total: stats.s_total,
        })
    }
}

fn project_with(
    v: &[f64],
    out: &mut [f64],
    epsilon: f64,
    max_iters: u32,
    subnet: Option<&Subnet>,
) -> Result<ProjStats> {
    let d = v.len();
    assert_eq!(out.len(), d);
    assert!(d >= 2, "parity polytope needs d >= 2");
    let cut = Cut::of(v);
    let p = cut.p as f64;
    let inv_d = 1.0 / d as f64;

    let mut acc = 0.0;
    for (i, &x) in v.iter().enumerate() {
        acc += cut.theta(v, i) * clamp01(x);
    }
    let mut eta = (acc - p) * inv_d;
    if eta < epsilon {
        for (o, &x) in out.iter_mut().zip(v) {
            *o = clamp01(x);
        }
        return Ok(ProjStats::default());
    }

    let used_net = subnet.is_some();
    if let Some(net) = subnet {
        eta = net.forward(v);
    }

    out.copy_from_slice(v);
    let mut s_total = 0.0;
    // Without a net the zero-shift pass is already done: it is the residual
    // computed above.
    let mut k = u32::from(!used_net);
    loop {
        let mut acc = 0.0;
        for (i, o) in out.iter_mut().enumerate() {
            let t = cut.theta(v, i);
            *o -= eta * t;
            acc += t * clamp01(*o);
        }
        s_total += eta;
        k += 1;
        eta = (acc - p) * inv_d;
        if !eta.is_finite() {
            return Err(Error::Numeric(format!(
                "projection residual became {eta} at iteration {k}"
            )));
        }
        if eta.abs() < epsilon {
            break;
        }
        if k >= max_iters {
            return Err(Error::Numeric(format!(
                "projection did not converge within {max_iters} iterations"
            )));
        }
    }
    for o in out.iter_mut() {
        *o = clamp01(*o);
    }
    Ok(ProjStats {
        iterations: k,
        used_net,
        s_total,
    })
}

/// Iterative projection with the default iteration cap.
pub fn project_icpp(v: &[f64], epsilon: f64) -> Result<ProjectionResult> {
    CheckProjector::icpp(epsilon).project(v)
}

/// Network-warm-started projection with the default iteration cap.
pub fn project_ncpp(v: &[f64], epsilon: f64, net: &CppNet) -> Result<ProjectionResult> {
    CheckProjector::ncpp(epsilon, net).project(v)
}

/// Reference projection by bisection on the shift.
///
/// `g(s) = θᵀΠ(v - sθ) - p` is continuous and non-increasing, so the shift
/// is bracketed by doubling and then bisected until `|g| ≤ tol`.
pub fn project_oracle(v: &[f64], tol: f64) -> Vec<f64> {
    let cut = build_cut(v);
    let shifted = |s: f64| -> Vec<f64> {
        v.iter()
            .zip(&cut.theta)
            .map(|(&x, &t)| clamp01(x - s * f64::from(t)))
            .collect()
    };
    let g = |s: f64| cut.violation(&shifted(s));

    if g(0.0) <= 0.0 {
        return box_project(v);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut s = hi;
    for _ in 0..200 {
        s = 0.5 * (lo + hi);
        let gs = g(s);
        if gs.abs() <= tol {
            break;
        }
        if gs > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    shifted(s)
}

/// Multiply/add tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub muls: u64,
    pub adds: u64,
}

impl std::ops::AddAssign for OpCount {
    fn add_assign(&mut self, rhs: Self) {
        self.muls += rhs.muls;
        self.adds += rhs.adds;
    }
}

impl OpCount {
    /// One loop pass at degree `d`: the shift costs `d` muls and `d` adds,
    /// the residual `2d` muls and `d` adds.
    pub fn loop_pass(d: usize) -> OpCount {
        let d = d as u64;
        OpCount {
            muls: 3 * d,
            adds: 2 * d,
        }
    }

    /// Cost of one projection call; `net_cost` is charged when the
    /// network was evaluated.
    pub fn of_projection(stats: &ProjStats, d: usize, net_cost: OpCount) -> OpCount {
        let pass = OpCount::loop_pass(d);
        let k = u64::from(stats.iterations);
        let mut total = OpCount {
            muls: pass.muls * k,
            adds: pass.adds * k,
        };
        if stats.used_net {
            total += net_cost;
        }
        total
    }
}
