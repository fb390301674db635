//! CFR and CFR+ on the sequence-form representation.
//!
//! Strategies live on the treeplex: `z` holds per-infoset action
//! distributions (behavioral form) and `prod` lifts them to sequence form.
//! Counterfactual values are `-A y` for player 1 (who minimizes) and
//! `A^T x` for player 2.

use std::time::Instant;

use crate::bspp::SaddlePointProblem;
use crate::error::{SolveError, TreeplexError};
use crate::trace::{Callback, Phase, Recorder, Solution, SolveOptions, SolveTrace};
use crate::treeplex::{SequenceVector, Treeplex, EMPTY_SEQUENCE};

/// Sequence form of the behavioral strategy `z`: `x_{I,a} = x_{p(I)} z_{I,a}`.
pub fn prod(t: &Treeplex, z: &[f64]) -> SequenceVector {
    let mut x = SequenceVector::zeros(t.num_sequences());
    x[EMPTY_SEQUENCE] = 1.0;
    for id in t.top_down() {
        let info = t.infoset(id);
        let reach = x[info.parent()];
        for s in info.actions() {
            x[s] = reach * z[s];
        }
    }
    x
}

/// Regret matching: per infoset, proportional to `r` when some entry is
/// positive, uniform otherwise.
pub fn normalize(t: &Treeplex, r: &[f64]) -> Result<SequenceVector, TreeplexError> {
    if let Some((index, &value)) = r.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(TreeplexError::NonPositiveEntry { index, value });
    }
    let mut z = SequenceVector::zeros(t.num_sequences());
    z[EMPTY_SEQUENCE] = 1.0;
    for info in t.infosets() {
        let range = info.actions();
        let total: f64 = r[range.clone()].iter().sum();
        if total > 0.0 {
            for s in range {
                z[s] = r[s] / total;
            }
        } else {
            let share = 1.0 / info.num_actions() as f64;
            for s in range {
                z[s] = share;
            }
        }
    }
    Ok(z)
}

/// Instantaneous regrets for action values `u` under `z`. Each infoset's
/// expected value is folded into its parent sequence before the parent is
/// processed; `u` itself is left untouched.
pub fn regret(t: &Treeplex, z: &[f64], u: &[f64]) -> SequenceVector {
    let mut u = u.to_vec();
    let mut r = SequenceVector::zeros(t.num_sequences());
    for id in t.bottom_up() {
        let info = t.infoset(id);
        let ev: f64 = info.actions().map(|s| u[s] * z[s]).sum();
        for s in info.actions() {
            r[s] = u[s] - ev;
        }
        u[info.parent()] += ev;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfrVariant {
    /// Simultaneous updates, regret matching on `max(r, 0)`, uniform average.
    Vanilla,
    /// Alternating updates, clipped regrets, linearly weighted average.
    Plus,
}

/// Cumulative regrets, current strategies and averaging sums for both
/// players.
#[derive(Clone, Debug)]
pub struct RegretState {
    pub r: SequenceVector,
    pub z: SequenceVector,
    pub current: SequenceVector,
    pub sum: SequenceVector,
}

impl RegretState {
    fn new(t: &Treeplex) -> Self {
        let r = SequenceVector::zeros(t.num_sequences());
        let z = normalize(t, &r).expect("zero regrets are nonnegative");
        let current = prod(t, &z);
        Self {
            r,
            z,
            sum: SequenceVector::zeros(t.num_sequences()),
            current,
        }
    }

    fn update(&mut self, t: &Treeplex, u: &[f64], plus: bool) {
        let inst = regret(t, &self.z, u);
        for (acc, d) in self.r.iter_mut().zip(inst.iter()) {
            *acc += d;
            if plus {
                *acc = acc.max(0.0);
            }
        }
        let positive: Vec<f64> = self.r.iter().map(|v| v.max(0.0)).collect();
        self.z = normalize(t, &positive).expect("clipped regrets are nonnegative");
        self.current = prod(t, &self.z);
    }

    fn accumulate(&mut self, weight: f64) {
        for (s, x) in self.sum.iter_mut().zip(self.current.iter()) {
            *s += weight * x;
        }
    }
}

/// Step-by-step CFR / CFR+ driver. Iteration `k` holds strategies
/// `(x^k, y^k)`; construction yields iteration 1 with uniform strategies.
#[derive(Clone, Debug)]
pub struct CfrSolver<'a> {
    problem: &'a SaddlePointProblem,
    variant: CfrVariant,
    players: [RegretState; 2],
    weight_sum: f64,
    iteration: usize,
}

impl<'a> CfrSolver<'a> {
    pub fn new(problem: &'a SaddlePointProblem, variant: CfrVariant) -> Self {
        let mut solver = Self {
            problem,
            variant,
            players: [
                RegretState::new(problem.tx()),
                RegretState::new(problem.ty()),
            ],
            weight_sum: 0.0,
            iteration: 1,
        };
        solver.accumulate();
        solver
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn regrets(&self) -> (&SequenceVector, &SequenceVector) {
        (&self.players[0].r, &self.players[1].r)
    }

    pub fn current(&self) -> (&SequenceVector, &SequenceVector) {
        (&self.players[0].current, &self.players[1].current)
    }

    pub fn state(&self) -> &[RegretState; 2] {
        &self.players
    }

    fn weight(&self, k: usize) -> f64 {
        match self.variant {
            CfrVariant::Vanilla => 1.0,
            CfrVariant::Plus => k as f64,
        }
    }

    fn accumulate(&mut self) {
        let w = self.weight(self.iteration);
        self.weight_sum += w;
        for p in &mut self.players {
            p.accumulate(w);
        }
    }

    pub fn step(&mut self) {
        let (tx, ty) = (self.problem.tx().clone(), self.problem.ty().clone());
        match self.variant {
            CfrVariant::Vanilla => {
                let ux = self.problem.a_y(&self.players[1].current).scaled(-1.0);
                let uy = self.problem.at_x(&self.players[0].current);
                self.players[0].update(&tx, &ux, false);
                self.players[1].update(&ty, &uy, false);
            }
            CfrVariant::Plus => {
                let ux = self.problem.a_y(&self.players[1].current).scaled(-1.0);
                self.players[0].update(&tx, &ux, true);
                let uy = self.problem.at_x(&self.players[0].current);
                self.players[1].update(&ty, &uy, true);
            }
        }
        self.iteration += 1;
        self.accumulate();
    }

    /// Average strategies over iterations `1..=k`: uniform weights for CFR,
    /// weights `k` for CFR+.
    pub fn average(&self) -> (SequenceVector, SequenceVector) {
        let scale = 1.0 / self.weight_sum;
        (
            self.players[0].sum.scaled(scale),
            self.players[1].sum.scaled(scale),
        )
    }
}

fn solve(
    problem: &SaddlePointProblem,
    iterations: usize,
    variant: CfrVariant,
    options: &SolveOptions,
    phase: Phase,
    start: Instant,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    if iterations == 0 {
        return Err(SolveError::NoIterations);
    }
    let mut recorder = Recorder::new(options, iterations, phase, 0, start, callback);
    let mut solver = CfrSolver::new(problem, variant);
    for k in 1..=iterations {
        if k > 1 {
            solver.step();
        }
        if recorder.wants(k) {
            let (x, y) = solver.average();
            recorder.push(k, problem.exploitability(&x, &y)?, None);
        }
    }
    let (x, y) = solver.average();
    Ok(Solution {
        x,
        y,
        trace: SolveTrace {
            records: recorder.into_records(),
            phase_boundary: None,
        },
    })
}

pub fn cfr_solve(
    problem: &SaddlePointProblem,
    iterations: usize,
    options: &SolveOptions,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    solve(
        problem,
        iterations,
        CfrVariant::Vanilla,
        options,
        Phase::Main,
        Instant::now(),
        callback,
    )
}

pub fn cfr_plus_solve(
    problem: &SaddlePointProblem,
    iterations: usize,
    options: &SolveOptions,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    solve(
        problem,
        iterations,
        CfrVariant::Plus,
        options,
        Phase::Main,
        Instant::now(),
        callback,
    )
}

pub(crate) fn cfr_plus_phase(
    problem: &SaddlePointProblem,
    iterations: usize,
    options: &SolveOptions,
    start: Instant,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    solve(
        problem,
        iterations,
        CfrVariant::Plus,
        options,
        Phase::Warm,
        start,
        callback,
    )
}
