//! Excessive Gap Technique.
//!
//! The state `(x, y, mu1, mu2)` keeps the excessive gap condition
//! `f_mu2(x) <= phi_mu1(y)`, which bounds the exploitability by
//! `mu1 D1 + mu2 D2`. Each step shrinks one smoothing parameter by `1 - tau`.

use std::time::Instant;

use log::{debug, info};

use crate::bspp::SaddlePointProblem;
use crate::cfr::cfr_plus_phase;
use crate::error::{SolveError, TreeplexError};
use crate::games::Player;
use crate::trace::{Callback, Phase, Recorder, Smoothing, Solution, SolveOptions, SolveTrace};
use crate::treeplex::{SequenceVector, Treeplex, MEMBERSHIP_TOL};

/// Relative slack of the excessive gap check.
pub const EGC_TOL: f64 = 1e-9;
/// Starting smoothing parameter of the heuristic driver.
pub const HEURISTIC_INITIAL_MU: f64 = 1e-6;
/// Factor applied to `mu` while initialization fails the gap check.
pub const MU_GROWTH: f64 = 1.2;
/// Starting global step size of the heuristic driver.
pub const HEURISTIC_INITIAL_TAU: f64 = 0.5;
/// Step sizes below this abort the heuristic driver.
pub const MIN_TAU: f64 = 1e-12;
/// Default mixing weight of [`make_interior`].
pub const DEFAULT_INTERIOR_DELTA: f64 = 1e-6;

const MAX_MU_GROWTH_STEPS: usize = 2000;

#[derive(Clone, Debug)]
pub struct EgtState {
    pub x: SequenceVector,
    pub y: SequenceVector,
    pub mu1: f64,
    pub mu2: f64,
    pub tau: f64,
    pub iteration: usize,
    /// Player whose smoothing parameter the last step shrank.
    pub last_shrunk: Option<Player>,
}

impl EgtState {
    pub fn smoothing(&self) -> Smoothing {
        Smoothing {
            mu1: self.mu1,
            mu2: self.mu2,
            tau: self.tau,
        }
    }
}

fn check_mu(mu: f64) -> Result<(), SolveError> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(SolveError::NonPositiveMu(mu))
    }
}

fn check_tau(tau: f64) -> Result<(), SolveError> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(SolveError::InvalidTau(tau))
    }
}

/// Initial iterates for smoothing parameters `(mu1, mu2)`. The gap
/// condition is not checked here.
pub fn egt_init(problem: &SaddlePointProblem, mu1: f64, mu2: f64) -> Result<EgtState, SolveError> {
    check_mu(mu1)?;
    check_mu(mu2)?;
    let (px, py) = (problem.prox_x(), problem.prox_y());
    let center = px.conjugate(&SequenceVector::zeros(problem.tx().num_sequences()))?;
    let y = py.conjugate(&problem.at_x(&center.argmax).scaled(1.0 / mu2))?.argmax;
    let xi = px
        .gradient_from_log(&center.log_argmax)
        .add_scaled(&problem.a_y(&y), -1.0 / mu1);
    let x = px.conjugate(&xi)?.argmax;
    Ok(EgtState {
        x,
        y,
        mu1,
        mu2,
        tau: HEURISTIC_INITIAL_TAU,
        iteration: 1,
        last_shrunk: None,
    })
}

/// One step shrinking `mu1` to `(1 - tau) mu1`.
pub fn egt_shrink_mu1(
    problem: &SaddlePointProblem,
    state: &EgtState,
    tau: f64,
) -> Result<EgtState, SolveError> {
    check_tau(tau)?;
    let (px, py) = (problem.prox_x(), problem.prox_y());
    let (mu1, mu2) = (state.mu1, state.mu2);
    let x_bar = px.conjugate(&problem.a_y(&state.y).scaled(-1.0 / mu1))?;
    let x_mix = state.x.lerp(&x_bar.argmax, tau);
    let y_bar = py.conjugate(&problem.at_x(&x_mix).scaled(1.0 / mu2))?.argmax;
    let y = state.y.lerp(&y_bar, tau);
    let xi = px
        .gradient_from_log(&x_bar.log_argmax)
        .add_scaled(&problem.a_y(&y_bar), -tau / ((1.0 - tau) * mu1));
    let x = state.x.lerp(&px.conjugate(&xi)?.argmax, tau);
    Ok(EgtState {
        x,
        y,
        mu1: (1.0 - tau) * mu1,
        mu2,
        tau,
        iteration: state.iteration + 1,
        last_shrunk: Some(Player::One),
    })
}

/// One step shrinking `mu2` to `(1 - tau) mu2`.
pub fn egt_shrink_mu2(
    problem: &SaddlePointProblem,
    state: &EgtState,
    tau: f64,
) -> Result<EgtState, SolveError> {
    check_tau(tau)?;
    let (px, py) = (problem.prox_x(), problem.prox_y());
    let (mu1, mu2) = (state.mu1, state.mu2);
    let y_bar = py.conjugate(&problem.at_x(&state.x).scaled(1.0 / mu2))?;
    let y_mix = state.y.lerp(&y_bar.argmax, tau);
    let x_bar = px.conjugate(&problem.a_y(&y_mix).scaled(-1.0 / mu1))?.argmax;
    let x = state.x.lerp(&x_bar, tau);
    let xi = py
        .gradient_from_log(&y_bar.log_argmax)
        .add_scaled(&problem.at_x(&x_bar), tau / ((1.0 - tau) * mu2));
    let y = state.y.lerp(&py.conjugate(&xi)?.argmax, tau);
    Ok(EgtState {
        x,
        y,
        mu1,
        mu2: (1.0 - tau) * mu2,
        tau,
        iteration: state.iteration + 1,
        last_shrunk: Some(Player::Two),
    })
}

/// `(f_mu2(x), phi_mu1(y))`
pub fn smoothed_values(problem: &SaddlePointProblem, state: &EgtState) -> Result<(f64, f64), SolveError> {
    Ok((
        problem.smoothed_f(&state.x, state.mu2)?,
        problem.smoothed_phi(&state.y, state.mu1)?,
    ))
}

/// `f_mu2(x) - phi_mu1(y)`; nonpositive when the gap condition holds.
pub fn excessive_gap(problem: &SaddlePointProblem, state: &EgtState) -> Result<f64, SolveError> {
    let (f, phi) = smoothed_values(problem, state)?;
    Ok(f - phi)
}

pub fn satisfies_egc(problem: &SaddlePointProblem, state: &EgtState) -> Result<bool, SolveError> {
    let (f, phi) = smoothed_values(problem, state)?;
    Ok(f <= phi + EGC_TOL * (1.0 + f.abs()))
}

/// `mu1 D1 + mu2 D2`, the exploitability bound implied by the gap condition.
pub fn gap_bound(problem: &SaddlePointProblem, state: &EgtState) -> f64 {
    state.mu1 * problem.prox_x().diameter() + state.mu2 * problem.prox_y().diameter()
}

/// Mixes `x` with the uniform point: `(1 - delta) x + delta u`. With
/// `delta = 0`, `x` must already be strictly positive.
pub fn make_interior(x: &[f64], t: &Treeplex, delta: f64) -> Result<SequenceVector, TreeplexError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(TreeplexError::InvalidDelta(delta));
    }
    t.check_member(x, MEMBERSHIP_TOL)?;
    if delta == 0.0 {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(TreeplexError::NonPositiveEntry { index, value });
        }
        return Ok(SequenceVector::from(x.to_vec()));
    }
    Ok(SequenceVector::from(x.to_vec()).lerp(&t.uniform_point(), delta))
}

/// Heuristic driver: a single `mu` grown by [`MU_GROWTH`] until the gap
/// condition holds, then steps that shrink the larger `mu` with a global
/// `tau` halved on every rejected step.
#[derive(Clone, Debug)]
pub struct HeuristicEgt<'a> {
    problem: &'a SaddlePointProblem,
    state: EgtState,
}

impl<'a> HeuristicEgt<'a> {
    pub fn new(problem: &'a SaddlePointProblem) -> Result<Self, SolveError> {
        let mut mu = HEURISTIC_INITIAL_MU;
        for _ in 0..MAX_MU_GROWTH_STEPS {
            let state = egt_init(problem, mu, mu)?;
            if satisfies_egc(problem, &state)? {
                debug!("heuristic init accepted mu = {mu:e}");
                return Ok(Self { problem, state });
            }
            mu *= MU_GROWTH;
        }
        Err(SolveError::InitFailed { mu })
    }

    pub fn state(&self) -> &EgtState {
        &self.state
    }

    pub fn into_state(self) -> EgtState {
        self.state
    }

    pub fn step(&mut self) -> Result<(), SolveError> {
        let shrink_first = self.state.mu1 > self.state.mu2;
        let mut tau = self.state.tau;
        loop {
            let next = if shrink_first {
                egt_shrink_mu1(self.problem, &self.state, tau)?
            } else {
                egt_shrink_mu2(self.problem, &self.state, tau)?
            };
            if satisfies_egc(self.problem, &next)? {
                self.state = next;
                return Ok(());
            }
            tau *= 0.5;
            if tau < MIN_TAU {
                return Err(SolveError::TauUnderflow {
                    iteration: self.state.iteration + 1,
                    min: MIN_TAU,
                });
            }
            debug!("iteration {}: tau reduced to {tau:e}", self.state.iteration + 1);
        }
    }
}

/// Driver with the step size dictated by the problem constants:
/// `mu1 = mu2 = ||A|| / sqrt(sigma1 sigma2)` to start, then alternating
/// shrinks with the largest admissible `tau`.
#[derive(Clone, Debug)]
pub struct GuaranteedEgt<'a> {
    problem: &'a SaddlePointProblem,
    state: EgtState,
    norm: f64,
}

impl<'a> GuaranteedEgt<'a> {
    pub fn new(problem: &'a SaddlePointProblem) -> Result<Self, SolveError> {
        let norm = match problem.matrix_norm() {
            n if n > 0.0 => n,
            _ => 1.0,
        };
        let sigma = problem.prox_x().sigma() * problem.prox_y().sigma();
        let mu = norm / sigma.sqrt();
        let mut out = Self {
            problem,
            state: egt_init(problem, mu, mu)?,
            norm,
        };
        out.state.tau = out.next_tau();
        out.assert_gap()?;
        Ok(out)
    }

    /// Largest `tau` with `tau^2 / (1 - tau) <= sigma1 sigma2 mu1 mu2 / ||A||^2`.
    pub fn next_tau(&self) -> f64 {
        let c = self.problem.prox_x().sigma() * self.problem.prox_y().sigma() * self.state.mu1 * self.state.mu2
            / (self.norm * self.norm);
        let tau = (-c + (c * c + 4.0 * c).sqrt()) / 2.0;
        tau.min(1.0 - f64::EPSILON)
    }

    pub fn state(&self) -> &EgtState {
        &self.state
    }

    fn assert_gap(&self) -> Result<(), SolveError> {
        let (f, phi) = smoothed_values(self.problem, &self.state)?;
        if f > phi + EGC_TOL * (1.0 + f.abs()) {
            return Err(SolveError::GapViolated {
                iteration: self.state.iteration,
                gap: f - phi,
            });
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), SolveError> {
        let tau = self.next_tau();
        self.state = match self.state.last_shrunk {
            Some(Player::One) => egt_shrink_mu2(self.problem, &self.state, tau)?,
            _ => egt_shrink_mu1(self.problem, &self.state, tau)?,
        };
        self.assert_gap()
    }
}

fn finish(problem: &SaddlePointProblem, state: EgtState, records: Recorder<'_, '_>) -> Solution {
    debug_assert!(problem.tx().contains(&state.x, 1e-8));
    Solution {
        x: state.x,
        y: state.y,
        trace: SolveTrace {
            records: records.into_records(),
            phase_boundary: None,
        },
    }
}

fn heuristic_phase(
    problem: &SaddlePointProblem,
    iterations: usize,
    options: &SolveOptions,
    phase: Phase,
    offset: usize,
    start: Instant,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    if iterations == 0 {
        return Err(SolveError::NoIterations);
    }
    let mut recorder = Recorder::new(options, iterations, phase, offset, start, callback);
    let mut driver = HeuristicEgt::new(problem)?;
    for k in 1..=iterations {
        if k > 1 {
            driver.step()?;
        }
        if recorder.wants(k) {
            let s = driver.state();
            recorder.push(k, problem.exploitability(&s.x, &s.y)?, Some(s.smoothing()));
        }
    }
    Ok(finish(problem, driver.into_state(), recorder))
}

/// Heuristic EGT for `iterations` iterations; iteration 1 is the
/// initialization.
pub fn egt_solve_heuristic(
    problem: &SaddlePointProblem,
    iterations: usize,
    options: &SolveOptions,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    heuristic_phase(problem, iterations, options, Phase::Main, 0, Instant::now(), callback)
}

pub fn egt_solve_guaranteed(
    problem: &SaddlePointProblem,
    iterations: usize,
    options: &SolveOptions,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    if iterations == 0 {
        return Err(SolveError::NoIterations);
    }
    let start = Instant::now();
    let mut recorder = Recorder::new(options, iterations, Phase::Main, 0, start, callback);
    let mut driver = GuaranteedEgt::new(problem)?;
    for k in 1..=iterations {
        if k > 1 {
            driver.step()?;
        }
        if recorder.wants(k) {
            let s = driver.state();
            recorder.push(k, problem.exploitability(&s.x, &s.y)?, Some(s.smoothing()));
        }
    }
    let state = driver.state().clone();
    Ok(finish(problem, state, recorder))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WarmStart {
    Egt,
    CfrPlus,
}

/// Number of warm-start iterations out of `iterations`.
pub fn warm_iterations(iterations: usize, warm_fraction: f64) -> usize {
    (warm_fraction * iterations as f64).floor() as usize
}

/// Warm start for `floor(warm_fraction * iterations)` iterations, then
/// heuristic EGT with both prox-functions centered at the (interior-mixed)
/// warm-start solution.
pub fn solve_with_centering(
    problem: &SaddlePointProblem,
    iterations: usize,
    warm: WarmStart,
    warm_fraction: f64,
    options: &SolveOptions,
    callback: &mut Callback<'_>,
) -> Result<Solution, SolveError> {
    if !(warm_fraction > 0.0 && warm_fraction < 1.0) {
        return Err(SolveError::InvalidWarmFraction(warm_fraction));
    }
    let w = warm_iterations(iterations, warm_fraction);
    if w == 0 || w >= iterations {
        return Err(SolveError::EmptyPhase {
            iterations,
            warm: w,
            main: iterations.saturating_sub(w),
        });
    }
    let start = Instant::now();
    let first = match warm {
        WarmStart::Egt => heuristic_phase(problem, w, options, Phase::Warm, 0, start, callback)?,
        WarmStart::CfrPlus => cfr_plus_phase(problem, w, options, start, callback)?,
    };
    info!(
        "warm start finished after {w} iterations, eps = {:e}",
        first.trace.final_epsilon().unwrap_or(f64::NAN)
    );
    let x0 = make_interior(&first.x, problem.tx(), DEFAULT_INTERIOR_DELTA)?;
    let y0 = make_interior(&first.y, problem.ty(), DEFAULT_INTERIOR_DELTA)?;
    let centered = problem.centered_at(&x0, &y0)?;
    let second = heuristic_phase(&centered, iterations - w, options, Phase::Main, w, start, callback)?;
    let mut records = first.trace.records;
    records.extend(second.trace.records);
    Ok(Solution {
        x: second.x,
        y: second.y,
        trace: SolveTrace {
            records,
            phase_boundary: Some(w + 1),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{build_kuhn, sequence_form};
    use crate::sparse::SparsePayoffMatrix;
    use std::sync::Arc;

    fn kuhn() -> SaddlePointProblem {
        sequence_form(&build_kuhn()).unwrap().problem
    }

    fn nothing() -> impl FnMut(&crate::trace::TraceRecord) {
        |_| {}
    }

    #[test]
    fn init_rejects_bad_mu() {
        let p = kuhn();
        assert!(egt_init(&p, 0.0, 1.0).is_err());
        assert!(egt_init(&p, 1.0, -1.0).is_err());
    }

    #[test]
    fn zero_matrix_init_is_prox_center() {
        let t = Arc::new(Treeplex::simplex(3).unwrap());
        let p = SaddlePointProblem::new(t.clone(), t.clone(), Arc::new(SparsePayoffMatrix::zeros(4, 4))).unwrap();
        let s = egt_init(&p, 1e-6, 1e-6).unwrap();
        let u = t.uniform_point();
        for (a, b) in s.x.iter().zip(u.iter()).chain(s.y.iter().zip(u.iter())) {
            assert!((a - b).abs() < 1e-14);
        }
        let (f, phi) = smoothed_values(&p, &s).unwrap();
        assert!(f.abs() < 1e-15 && phi.abs() < 1e-15);
        assert!(satisfies_egc(&p, &s).unwrap());
        let mut cb = nothing();
        let sol = egt_solve_heuristic(&p, 5, &SolveOptions::default(), &mut cb).unwrap();
        assert_eq!(sol.trace.records.len(), 5);
        assert!(sol.trace.records.iter().all(|r| r.epsilon == 0.0));
    }

    #[test]
    fn guaranteed_init_satisfies_gap() {
        let p = kuhn();
        let g = GuaranteedEgt::new(&p).unwrap();
        assert!(satisfies_egc(&p, g.state()).unwrap());
        let c = p.prox_x().sigma() * p.prox_y().sigma() * g.state().mu1 * g.state().mu2 / p.matrix_norm().powi(2);
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_is_maximal_admissible() {
        let p = kuhn();
        let mut g = GuaranteedEgt::new(&p).unwrap();
        for _ in 0..20 {
            let tau = g.next_tau();
            let s = g.state();
            let c = p.prox_x().sigma() * p.prox_y().sigma() * s.mu1 * s.mu2 / p.matrix_norm().powi(2);
            assert!((tau * tau / (1.0 - tau) - c).abs() <= 1e-12 * c.max(1.0));
            let before = s.mu1 * s.mu2;
            g.step().unwrap();
            let after = g.state().mu1 * g.state().mu2;
            assert!((after - (1.0 - tau) * before).abs() <= 1e-14 * before);
        }
    }

    #[test]
    fn heuristic_shrinks_larger_mu() {
        let p = kuhn();
        let mut h = HeuristicEgt::new(&p).unwrap();
        for _ in 0..50 {
            let (m1, m2) = (h.state().mu1, h.state().mu2);
            h.step().unwrap();
            let s = h.state();
            let expected = if m1 > m2 { Player::One } else { Player::Two };
            assert_eq!(s.last_shrunk, Some(expected));
            assert!(satisfies_egc(&p, s).unwrap());
            assert!(p.tx().contains(&s.x, 1e-8) && p.ty().contains(&s.y, 1e-8));
        }
    }

    #[test]
    fn tau_validation() {
        let p = kuhn();
        let s = HeuristicEgt::new(&p).unwrap().into_state();
        assert!(egt_shrink_mu1(&p, &s, 0.0).is_err());
        assert!(egt_shrink_mu2(&p, &s, 1.0).is_err());
    }

    #[test]
    fn make_interior_cases() {
        let t = Treeplex::simplex(3).unwrap();
        let pure = [1.0, 1.0, 0.0, 0.0];
        let out = make_interior(&pure, &t, 1e-6).unwrap();
        assert!(out.iter().all(|&v| v > 0.0));
        assert!(t.residual(&out).unwrap() < 1e-12);
        assert!(make_interior(&pure, &t, 0.0).is_err());
        let inner = [1.0, 0.2, 0.3, 0.5];
        assert_eq!(make_interior(&inner, &t, 0.0).unwrap().into_vec(), inner.to_vec());
        assert!(make_interior(&[1.0, 0.5, 0.0, 0.0], &t, 0.1).is_err());
        assert!(make_interior(&inner, &t, 1.0).is_err());
    }

    #[test]
    fn centering_split() {
        assert_eq!(warm_iterations(1000, 0.1), 100);
        assert_eq!(warm_iterations(2000, 0.1), 200);
        let p = kuhn();
        let mut cb = nothing();
        let opts = SolveOptions::default();
        assert!(matches!(
            solve_with_centering(&p, 5, WarmStart::Egt, 0.1, &opts, &mut cb),
            Err(SolveError::EmptyPhase { .. })
        ));
        assert!(solve_with_centering(&p, 50, WarmStart::Egt, 1.0, &opts, &mut cb).is_err());
        let sol = solve_with_centering(&p, 50, WarmStart::CfrPlus, 0.1, &opts, &mut cb).unwrap();
        assert_eq!(sol.trace.phase_boundary, Some(6));
        let warm = sol.trace.records.iter().filter(|r| r.phase == Phase::Warm).count();
        assert_eq!(warm, 5);
        assert_eq!(sol.trace.records.len(), 50);
        let iters: Vec<usize> = sol.trace.records.iter().map(|r| r.iteration).collect();
        assert_eq!(iters, (1..=50).collect::<Vec<_>>());
    }
}
