use std::sync::Arc;

use super::{SequenceVector, Treeplex, Weights, EMPTY_SEQUENCE, MEMBERSHIP_TOL};
use crate::error::TreeplexError;

/// Entries at or below this are rejected by [`ProxSetup::gradient`].
const GRADIENT_FLOOR: f64 = 1e-300;

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Result of evaluating the conjugate `d*(xi) = max_{x in Q} xi.x - d(x)`.
#[derive(Clone, Debug)]
pub struct Conjugate {
    pub value: f64,
    /// The unique maximizer, which is also the gradient of `d*` at `xi`.
    pub argmax: SequenceVector,
    /// Entrywise natural log of `argmax`, always finite.
    pub log_argmax: SequenceVector,
}

#[derive(Clone, Debug)]
struct Center {
    point: SequenceVector,
    gradient: SequenceVector,
    /// `d(x') - grad d(x') . x'`
    offset: f64,
}

/// The dilated-entropy prox-function
///
/// `d(x) = x_0 ln x_0 + sum_{I,a} (w_I - sum_{p(I')=(I,a)} w_I') x_{I,a} ln x_{I,a}`
///
/// on one treeplex, optionally re-centered at an interior point `x'` as
/// `d(x) - d(x') - grad d(x') . (x - x')`.
///
/// [`value`](Self::value) and [`conjugate`](Self::conjugate) use `d` as
/// written (its minimum over `Q` is `-d*(0)`, its maximum is `0`). The
/// smoothing code subtracts [`min_value`](Self::min_value) so that the
/// function it smooths with has minimum zero.
#[derive(Clone, Debug)]
pub struct ProxSetup {
    treeplex: Arc<Treeplex>,
    weights: Weights,
    coeffs: Vec<f64>,
    center: Option<Center>,
    sigma: f64,
    max_l1: f64,
    base_optimum: f64,
    diameter: f64,
}

impl ProxSetup {
    pub fn new(treeplex: Arc<Treeplex>) -> Self {
        let weights = treeplex.weights();
        let mut coeffs = vec![1.0; treeplex.num_sequences()];
        for (id, info) in treeplex.infosets().iter().enumerate() {
            for s in info.actions() {
                let below: u64 = treeplex.children_of(s).iter().map(|&c| weights.get(c)).sum();
                coeffs[s] = (weights.get(id) - below) as f64;
            }
        }
        let max_l1 = treeplex.max_l1_norm(&weights);
        let mut setup = Self {
            treeplex,
            weights,
            coeffs,
            center: None,
            sigma: 1.0 / max_l1,
            max_l1,
            base_optimum: 0.0,
            diameter: 0.0,
        };
        let zero = SequenceVector::zeros(setup.treeplex.num_sequences());
        setup.base_optimum = setup.base_conjugate(&zero).value;
        setup.diameter = setup.base_optimum;
        setup
    }

    /// The prox-function re-centered at `center`, which must be strictly
    /// positive and inside the treeplex.
    pub fn centered_at(&self, center: &[f64]) -> Result<Self, TreeplexError> {
        self.treeplex.check_member(center, MEMBERSHIP_TOL)?;
        if let Some((index, &value)) = center
            .iter()
            .enumerate()
            .find(|(_, &v)| v <= GRADIENT_FLOOR)
        {
            return Err(TreeplexError::NonPositiveEntry { index, value });
        }
        let point = SequenceVector::from(center.to_vec());
        let gradient = self.raw_gradient(&point);
        let offset = self.raw_value(&point) - gradient.dot(&point);
        let neg: Vec<f64> = gradient.iter().map(|g| -g).collect();
        // d~ is convex, so its maximum over Q sits at a pure strategy where d = 0.
        let (vertex_max, _) = self.treeplex.linear_max(&neg);
        let mut out = self.clone();
        out.diameter = (vertex_max - offset).max(0.0);
        out.center = Some(Center {
            point,
            gradient,
            offset,
        });
        Ok(out)
    }

    pub fn treeplex(&self) -> &Arc<Treeplex> {
        &self.treeplex
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Per-sequence entropy coefficients (`1` for the empty sequence).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn center(&self) -> Option<&SequenceVector> {
        self.center.as_ref().map(|c| &c.point)
    }

    /// Strong-convexity modulus w.r.t. the L1 norm, `1 / M_Q`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn max_l1_norm(&self) -> f64 {
        self.max_l1
    }

    /// `max_Q d - min_Q d` for the active (base or centered) function.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `min_Q` of the active function: `-d*(0)` for the base, `0` centered.
    pub fn min_value(&self) -> f64 {
        match self.center {
            Some(_) => 0.0,
            None => -self.base_optimum,
        }
    }

    fn raw_value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.coeffs).map(|(&v, c)| c * xlnx(v)).sum()
    }

    fn raw_gradient(&self, x: &[f64]) -> SequenceVector {
        x.iter()
            .zip(&self.coeffs)
            .map(|(&v, c)| c * (1.0 + v.ln()))
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, TreeplexError> {
        self.treeplex.check_member(x, MEMBERSHIP_TOL)?;
        let raw = self.raw_value(x);
        Ok(match &self.center {
            None => raw,
            Some(c) => raw - c.offset - c.gradient.dot(x),
        })
    }

    /// Gradient at a strictly positive `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<SequenceVector, TreeplexError> {
        if x.len() != self.coeffs.len() {
            return Err(TreeplexError::DimensionMismatch {
                expected: self.coeffs.len(),
                found: x.len(),
            });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| !(v > GRADIENT_FLOOR)) {
            return Err(TreeplexError::NonPositiveEntry { index, value });
        }
        let g = self.raw_gradient(x);
        Ok(match &self.center {
            None => g,
            Some(c) => g.add_scaled(&c.gradient, -1.0),
        })
    }

    /// Gradient at the point whose entrywise log is `log_x`. Stays finite
    /// where the point itself underflows.
    pub fn gradient_from_log(&self, log_x: &[f64]) -> SequenceVector {
        let g: SequenceVector = log_x
            .iter()
            .zip(&self.coeffs)
            .map(|(&l, c)| c * (1.0 + l))
            .collect();
        match &self.center {
            None => g,
            Some(c) => g.add_scaled(&c.gradient, -1.0),
        }
    }

    /// Conjugate value and maximizer in `O(|Sigma|)`.
    pub fn conjugate(&self, xi: &[f64]) -> Result<Conjugate, TreeplexError> {
        if xi.len() != self.coeffs.len() {
            return Err(TreeplexError::DimensionMismatch {
                expected: self.coeffs.len(),
                found: xi.len(),
            });
        }
        if let Some(index) = xi.iter().position(|v| !v.is_finite()) {
            return Err(TreeplexError::NonFinite { index });
        }
        Ok(match &self.center {
            None => self.base_conjugate(xi),
            Some(c) => {
                let shifted = c.gradient.add_scaled(xi, 1.0);
                let mut out = self.base_conjugate(&shifted);
                out.value += c.offset;
                out
            }
        })
    }

    fn base_conjugate(&self, xi: &[f64]) -> Conjugate {
        let t = &*self.treeplex;
        let mut acc = xi.to_vec();
        let mut log_z = vec![0.0; xi.len()];
        for id in t.bottom_up() {
            let info = t.infoset(id);
            let w = self.weights.get(id) as f64;
            let range = info.actions();
            let peak = acc[range.clone()]
                .iter()
                .fold(f64::NEG_INFINITY, |m, &v| m.max(v / w));
            let sum: f64 = acc[range.clone()].iter().map(|&v| (v / w - peak).exp()).sum();
            let lse = peak + sum.ln();
            for s in range {
                log_z[s] = acc[s] / w - lse;
            }
            acc[info.parent()] += w * lse;
        }
        let mut log_x = SequenceVector::zeros(xi.len());
        for id in t.top_down() {
            let info = t.infoset(id);
            let base = log_x[info.parent()];
            for s in info.actions() {
                log_x[s] = base + log_z[s];
            }
        }
        log_x[EMPTY_SEQUENCE] = 0.0;
        let argmax = log_x.iter().map(|l| l.exp()).collect();
        Conjugate {
            value: acc[EMPTY_SEQUENCE],
            argmax,
            log_argmax: log_x,
        }
    }
}
