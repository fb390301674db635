//! The bilinear saddle-point problem `min_{x in Q1} max_{y in Q2} x^T A y`.

use std::sync::Arc;

use crate::error::SolveError;
use crate::games::Player;
use crate::sparse::SparsePayoffMatrix;
use crate::treeplex::{ProxSetup, SequenceVector, Treeplex, MEMBERSHIP_TOL};

/// Exploitability below this is treated as rounding noise and clamped to 0.
pub const NEGATIVE_EPS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SaddlePointProblem {
    tx: Arc<Treeplex>,
    ty: Arc<Treeplex>,
    matrix: Arc<SparsePayoffMatrix>,
    prox_x: ProxSetup,
    prox_y: ProxSetup,
}

impl SaddlePointProblem {
    pub fn new(
        tx: Arc<Treeplex>,
        ty: Arc<Treeplex>,
        matrix: Arc<SparsePayoffMatrix>,
    ) -> Result<Self, SolveError> {
        if matrix.rows() != tx.num_sequences() || matrix.cols() != ty.num_sequences() {
            return Err(SolveError::ShapeMismatch {
                rows: matrix.rows(),
                cols: matrix.cols(),
                expected_rows: tx.num_sequences(),
                expected_cols: ty.num_sequences(),
            });
        }
        let prox_x = ProxSetup::new(tx.clone());
        let prox_y = ProxSetup::new(ty.clone());
        Ok(Self {
            tx,
            ty,
            matrix,
            prox_x,
            prox_y,
        })
    }

    /// The same game with both prox-functions centered at `(x, y)`.
    pub fn centered_at(&self, x: &[f64], y: &[f64]) -> Result<Self, SolveError> {
        let base_x = ProxSetup::new(self.tx.clone());
        let base_y = ProxSetup::new(self.ty.clone());
        Ok(Self {
            prox_x: base_x.centered_at(x)?,
            prox_y: base_y.centered_at(y)?,
            ..self.clone()
        })
    }

    pub fn tx(&self) -> &Arc<Treeplex> {
        &self.tx
    }

    pub fn ty(&self) -> &Arc<Treeplex> {
        &self.ty
    }

    pub fn treeplex(&self, player: Player) -> &Arc<Treeplex> {
        match player {
            Player::One => &self.tx,
            Player::Two => &self.ty,
        }
    }

    pub fn matrix(&self) -> &SparsePayoffMatrix {
        &self.matrix
    }

    pub fn prox_x(&self) -> &ProxSetup {
        &self.prox_x
    }

    pub fn prox_y(&self) -> &ProxSetup {
        &self.prox_y
    }

    /// `||A|| = max |A_ij|`.
    pub fn matrix_norm(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// `A y`
    pub fn a_y(&self, y: &[f64]) -> SequenceVector {
        self.matrix.mul(y).into()
    }

    /// `A^T x`
    pub fn at_x(&self, x: &[f64]) -> SequenceVector {
        self.matrix.mul_transpose(x).into()
    }

    /// `x^T A y`: expected chips lost by player 1.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matrix.bilinear(x, y)
    }

    /// Best response of `player` against the opponent's sequence-form
    /// strategy. Player 1 minimizes and player 2 maximizes `x^T A y`; the
    /// returned value is that optimum.
    pub fn best_response(
        &self,
        player: Player,
        opponent: &[f64],
    ) -> Result<(f64, SequenceVector), SolveError> {
        self.treeplex(player.opponent())
            .check_member(opponent, MEMBERSHIP_TOL)?;
        Ok(match player {
            Player::One => {
                let neg: Vec<f64> = self.matrix.mul(opponent).iter().map(|v| -v).collect();
                let (v, x) = self.tx.linear_max(&neg);
                (-v, x)
            }
            Player::Two => self.ty.linear_max(&self.matrix.mul_transpose(opponent)),
        })
    }

    /// `f(x) = max_y x^T A y`
    pub fn f(&self, x: &[f64]) -> Result<f64, SolveError> {
        Ok(self.best_response(Player::Two, x)?.0)
    }

    /// `phi(y) = min_x x^T A y`
    pub fn phi(&self, y: &[f64]) -> Result<f64, SolveError> {
        Ok(self.best_response(Player::One, y)?.0)
    }

    /// `eps(x, y) = f(x) - phi(y)`, clamped at zero within
    /// [`NEGATIVE_EPS_TOL`].
    pub fn exploitability(&self, x: &[f64], y: &[f64]) -> Result<f64, SolveError> {
        let eps = self.f(x)? - self.phi(y)?;
        if eps < -NEGATIVE_EPS_TOL {
            return Err(SolveError::NegativeExploitability(eps));
        }
        Ok(eps.max(0.0))
    }

    /// `f_mu2(x) = max_y { x^T A y - mu2 d2(y) }` with `d2` shifted to have
    /// minimum zero.
    pub fn smoothed_f(&self, x: &[f64], mu2: f64) -> Result<f64, SolveError> {
        Ok(self.smoothed_f_with_argmax(x, mu2)?.0)
    }

    pub(crate) fn smoothed_f_with_argmax(
        &self,
        x: &[f64],
        mu2: f64,
    ) -> Result<(f64, SequenceVector), SolveError> {
        if !(mu2 > 0.0) {
            return Err(SolveError::NonPositiveMu(mu2));
        }
        self.tx.check_member(x, MEMBERSHIP_TOL)?;
        let xi = self.at_x(x).scaled(1.0 / mu2);
        let conj = self.prox_y.conjugate(&xi)?;
        Ok((mu2 * (conj.value + self.prox_y.min_value()), conj.argmax))
    }

    /// `phi_mu1(y) = min_x { x^T A y + mu1 d1(x) }` with `d1` shifted to
    /// have minimum zero.
    pub fn smoothed_phi(&self, y: &[f64], mu1: f64) -> Result<f64, SolveError> {
        Ok(self.smoothed_phi_with_argmin(y, mu1)?.0)
    }

    pub(crate) fn smoothed_phi_with_argmin(
        &self,
        y: &[f64],
        mu1: f64,
    ) -> Result<(f64, SequenceVector), SolveError> {
        if !(mu1 > 0.0) {
            return Err(SolveError::NonPositiveMu(mu1));
        }
        self.ty.check_member(y, MEMBERSHIP_TOL)?;
        let xi = self.a_y(y).scaled(-1.0 / mu1);
        let conj = self.prox_x.conjugate(&xi)?;
        Ok((-mu1 * (conj.value + self.prox_x.min_value()), conj.argmax))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{build_kuhn, sequence_form};

    fn kuhn() -> SaddlePointProblem {
        sequence_form(&build_kuhn()).unwrap().problem
    }

    #[test]
    fn shape_checked() {
        let t = Arc::new(Treeplex::simplex(2).unwrap());
        let m = Arc::new(SparsePayoffMatrix::zeros(3, 4));
        assert!(matches!(
            SaddlePointProblem::new(t.clone(), t, m),
            Err(SolveError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_matrix_norm() {
        let t = Arc::new(Treeplex::simplex(2).unwrap());
        let p = SaddlePointProblem::new(t.clone(), t, Arc::new(SparsePayoffMatrix::zeros(3, 3))).unwrap();
        assert_eq!(p.matrix_norm(), 0.0);
    }

    #[test]
    fn epsilon_equals_f_minus_phi() {
        let p = kuhn();
        let x = p.tx().uniform_point();
        let y = p.ty().uniform_point();
        let eps = p.exploitability(&x, &y).unwrap();
        let diff = p.f(&x).unwrap() - p.phi(&y).unwrap();
        assert!((eps - diff).abs() < 1e-12);
        assert!(eps > 0.0);
    }

    #[test]
    fn smoothing_sandwich_at_uniform() {
        let p = kuhn();
        let x = p.tx().uniform_point();
        let y = p.ty().uniform_point();
        for mu in [1e-3, 0.1, 1.0, 10.0] {
            let fm = p.smoothed_f(&x, mu).unwrap();
            let f = p.f(&x).unwrap();
            assert!(fm <= f + 1e-12 && f <= fm + mu * p.prox_y().diameter() + 1e-12);
            let pm = p.smoothed_phi(&y, mu).unwrap();
            let phi = p.phi(&y).unwrap();
            assert!(pm - mu * p.prox_x().diameter() <= phi + 1e-12 && phi <= pm + 1e-12);
        }
        assert!(p.smoothed_f(&x, 0.0).is_err());
        assert!(p.smoothed_phi(&y, -1.0).is_err());
    }

    #[test]
    fn large_mu_maximizer_tends_to_prox_minimizer() {
        let p = kuhn();
        let x = p.tx().uniform_point();
        let (_, y) = p.smoothed_f_with_argmax(&x, 1e9).unwrap();
        let zero = vec![0.0; p.ty().num_sequences()];
        let center = p.prox_y().conjugate(&zero).unwrap().argmax;
        for (a, b) in y.iter().zip(center.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn membership_enforced() {
        let p = kuhn();
        let bad = vec![0.5; 13];
        assert!(p.best_response(Player::Two, &bad).is_err());
        assert!(p.exploitability(&bad, &bad).is_err());
    }
}
