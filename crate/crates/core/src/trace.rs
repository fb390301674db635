//! Per-iteration solver records shared by all methods.

use std::fmt;
use std::time::Instant;

use crate::treeplex::SequenceVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Warm,
    Main,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Warm => "warm",
            Phase::Main => "main",
        })
    }
}

/// Smoothing parameters at a recorded EGT iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smoothing {
    pub mu1: f64,
    pub mu2: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    /// 1-based, counted across phases.
    pub iteration: usize,
    pub epsilon: f64,
    /// Absent for the CFR family.
    pub smoothing: Option<Smoothing>,
    pub phase: Phase,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// First iteration of the main phase when a warm start preceded it.
    pub phase_boundary: Option<usize>,
}

impl SolveTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_epsilon(&self) -> Option<f64> {
        self.last().map(|r| r.epsilon)
    }
}

/// Output of a solver run.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: SequenceVector,
    pub y: SequenceVector,
    pub trace: SolveTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Exploitability is evaluated every `eval_stride` iterations and at the
    /// last one.
    pub eval_stride: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { eval_stride: 1 }
    }
}

pub type Callback<'a> = dyn FnMut(&TraceRecord) + 'a;

pub(crate) struct Recorder<'a, 'b> {
    stride: usize,
    offset: usize,
    total: usize,
    phase: Phase,
    start: Instant,
    records: Vec<TraceRecord>,
    callback: &'a mut Callback<'b>,
}

impl<'a, 'b> Recorder<'a, 'b> {
    pub(crate) fn new(
        options: &SolveOptions,
        total: usize,
        phase: Phase,
        offset: usize,
        start: Instant,
        callback: &'a mut Callback<'b>,
    ) -> Self {
        Self {
            stride: options.eval_stride.max(1),
            offset,
            total,
            phase,
            start,
            records: Vec::new(),
            callback,
        }
    }

    /// Whether phase-local iteration `k` gets a record.
    pub(crate) fn wants(&self, k: usize) -> bool {
        k % self.stride == 0 || k == self.total
    }

    pub(crate) fn push(&mut self, k: usize, epsilon: f64, smoothing: Option<Smoothing>) {
        let record = TraceRecord {
            iteration: self.offset + k,
            epsilon,
            smoothing,
            phase: self.phase,
            elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        (self.callback)(&record);
        self.records.push(record);
    }

    pub(crate) fn into_records(self) -> Vec<TraceRecord> {
        self.records
    }
}
