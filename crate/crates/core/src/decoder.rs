//! Types shared by all decoders.

use crate::cppnet::CppNet;
use crate::error::Result;
use crate::projection::{OpCount, ProjStats};

/// Receives every check-polytope projection a decoder performs.
pub trait ProjectionObserver {
    fn observe(&mut self, input: &[f64], stats: &ProjStats);
}

impl ProjectionObserver for () {
    fn observe(&mut self, _input: &[f64], _stats: &ProjStats) {}
}

/// Aggregated projection statistics for one or more frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProjSummary {
    /// All projection calls.
    pub calls: u64,
    /// Calls whose clamped input was outside the polytope.
    pub loop_calls: u64,
    /// Loop passes summed over `loop_calls`.
    pub total_iters: u64,
    pub worst_iters: u32,
    /// Operation count over all calls.
    pub ops: OpCount,
}

impl ProjSummary {
    pub fn record(&mut self, stats: &ProjStats, ops: OpCount) {
        self.calls += 1;
        if stats.entered_loop() {
            self.loop_calls += 1;
            self.total_iters += u64::from(stats.iterations);
            self.worst_iters = self.worst_iters.max(stats.iterations);
        }
        self.ops += ops;
    }

    pub fn merge(&mut self, other: &ProjSummary) {
        self.calls += other.calls;
        self.loop_calls += other.loop_calls;
        self.total_iters += other.total_iters;
        self.worst_iters = self.worst_iters.max(other.worst_iters);
        self.ops += other.ops;
    }

    /// Mean loop passes per call that entered the loop.
    pub fn mean_iters(&self) -> f64 {
        if self.loop_calls == 0 {
            0.0
        } else {
            self.total_iters as f64 / self.loop_calls as f64
        }
    }

    /// Mean multiplies and additions per call that entered the loop.
    pub fn mean_ops(&self) -> (f64, f64) {
        if self.loop_calls == 0 {
            (0.0, 0.0)
        } else {
            let n = self.loop_calls as f64;
            (self.ops.muls as f64 / n, self.ops.adds as f64 / n)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Hard decision.
    pub bits: Vec<u8>,
    /// True iff `bits` satisfies every check.
    pub converged: bool,
    pub outer_iters: u32,
    pub inner_iters_total: u32,
    pub proj: ProjSummary,
}

/// Which check-polytope projector a decoder uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectorKind {
    #[default]
    Icpp,
    Ncpp,
}

/// Per-degree network forward costs, indexed by degree.
pub(crate) fn net_costs(net: Option<&CppNet>, degrees: &[usize]) -> Result<Vec<OpCount>> {
    let max_d = degrees.iter().copied().max().unwrap_or(0);
    let mut costs = vec![OpCount::default(); max_d + 1];
    if let Some(net) = net {
        for &d in degrees {
            costs[d] = net.subnet(d)?.forward_cost();
        }
    }
    Ok(costs)
}

/// `1` where `x_i > 0.5`, ties to `0`.
pub(crate) fn hard_decision(x: &[f64], bits: &mut Vec<u8>) {
    bits.clear();
    bits.extend(x.iter().map(|&xi| u8::from(xi > 0.5)));
}
