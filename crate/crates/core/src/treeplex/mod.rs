//! Sequence-form strategy sets ("treeplexes") and the dilated-entropy
//! prox-function defined on them.
//!
//! A treeplex is described by its information sets. Sequence `0` is the empty
//! sequence; every infoset owns a contiguous block of sequence indices, one
//! per action, and hangs below a single parent sequence. A vector `x` lies in
//! the treeplex when `x >= 0`, `x[0] == 1` and for every infoset the mass of
//! its actions equals the mass of its parent sequence.

mod prox;

use std::ops::{Deref, DerefMut, Range};

use crate::error::TreeplexError;

pub use prox::{Conjugate, ProxSetup};

/// Index of the empty sequence.
pub const EMPTY_SEQUENCE: usize = 0;

/// Default tolerance on the flow-conservation constraints.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A real value per sequence, ordered like [`Treeplex`] sequences.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SequenceVector(Vec<f64>);

impl SequenceVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &[f64], t: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(other)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &[f64], scale: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(other)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self(self.0.iter().map(|a| a * scale).collect())
    }
}

impl Deref for SequenceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for SequenceVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for SequenceVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl FromIterator<f64> for SequenceVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Input record for [`Treeplex::new`]: an infoset hanging below `parent`
/// with `actions` actions.
///
/// Action sequences are numbered in spec order: infoset `i` owns the
/// indices `1 + sum(actions of specs 0..i) ..` onwards, so `parent` may refer
/// to any sequence of any infoset in the list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InfosetSpec {
    pub parent: usize,
    pub actions: usize,
}

impl InfosetSpec {
    pub fn new(parent: usize, actions: usize) -> Self {
        Self { parent, actions }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Infoset {
    parent: usize,
    first: usize,
    len: usize,
}

impl Infoset {
    /// The parent sequence `p(I)`.
    pub fn parent(&self) -> usize {
        self.parent
    }

    /// Sequence indices `(I, a)` for every action `a`.
    pub fn actions(&self) -> Range<usize> {
        self.first..self.first + self.len
    }

    pub fn num_actions(&self) -> usize {
        self.len
    }
}

/// The sequence-form strategy polytope of one player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Treeplex {
    num_sequences: usize,
    infosets: Vec<Infoset>,
    /// Parents before children.
    topo_order: Vec<usize>,
    /// Child infosets below each sequence.
    children: Vec<Vec<usize>>,
    /// Owning infoset of each sequence, `None` for the empty sequence.
    owner: Vec<Option<usize>>,
}

impl Treeplex {
    pub fn new(specs: &[InfosetSpec]) -> Result<Self, TreeplexError> {
        let mut infosets = Vec::with_capacity(specs.len());
        let mut next = 1;
        for (i, spec) in specs.iter().enumerate() {
            if spec.actions == 0 {
                return Err(TreeplexError::ZeroActions { infoset: i });
            }
            infosets.push(Infoset {
                parent: spec.parent,
                first: next,
                len: spec.actions,
            });
            next += spec.actions;
        }
        let num_sequences = next;

        let mut owner = vec![None; num_sequences];
        for (i, info) in infosets.iter().enumerate() {
            for s in info.actions() {
                owner[s] = Some(i);
            }
        }
        let mut children = vec![Vec::new(); num_sequences];
        for (i, info) in infosets.iter().enumerate() {
            if info.parent >= num_sequences {
                return Err(TreeplexError::ParentOutOfRange {
                    infoset: i,
                    parent: info.parent,
                    len: num_sequences,
                });
            }
            children[info.parent].push(i);
        }

        let topo_order = topological_order(&infosets, &owner, &children)?;
        Ok(Self {
            num_sequences,
            infosets,
            topo_order,
            children,
            owner,
        })
    }

    /// The treeplex of a single simplex with `actions` vertices.
    pub fn simplex(actions: usize) -> Result<Self, TreeplexError> {
        Self::new(&[InfosetSpec::new(EMPTY_SEQUENCE, actions)])
    }

    pub fn num_sequences(&self) -> usize {
        self.num_sequences
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, id: usize) -> &Infoset {
        &self.infosets[id]
    }

    /// Infoset ids with every parent before its children.
    pub fn top_down(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.topo_order.iter().copied()
    }

    /// Infoset ids with every child before its parent.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> + '_ {
        self.topo_order.iter().rev().copied()
    }

    /// Infosets whose parent sequence is `sequence`.
    pub fn children_of(&self, sequence: usize) -> &[usize] {
        &self.children[sequence]
    }

    pub fn owner_of(&self, sequence: usize) -> Option<usize> {
        self.owner[sequence]
    }

    /// Infosets hanging directly below the empty sequence.
    pub fn root_infosets(&self) -> &[usize] {
        &self.children[EMPTY_SEQUENCE]
    }

    /// `w_I = 1 + max_a sum_{p(I') = (I, a)} w_I'`, evaluated bottom-up.
    pub fn weights(&self) -> Weights {
        let mut w = vec![0u64; self.infosets.len()];
        for id in self.bottom_up() {
            let best = self.infosets[id]
                .actions()
                .map(|s| self.children[s].iter().map(|&c| w[c]).sum::<u64>())
                .max()
                .unwrap_or(0);
            w[id] = 1 + best;
        }
        Weights(w)
    }

    /// `M_Q = max_{x in Q} ||x||_1 = 1 + sum of root infoset weights`.
    pub fn max_l1_norm(&self, weights: &Weights) -> f64 {
        let roots: u64 = self.root_infosets().iter().map(|&i| weights.get(i)).sum();
        (1 + roots) as f64
    }

    /// The uniform behavioral strategy in sequence form.
    pub fn uniform_point(&self) -> SequenceVector {
        let mut x = SequenceVector::zeros(self.num_sequences);
        x[EMPTY_SEQUENCE] = 1.0;
        for id in self.top_down() {
            let info = &self.infosets[id];
            let share = x[info.parent] / info.len as f64;
            for s in info.actions() {
                x[s] = share;
            }
        }
        x
    }

    /// Largest violation of the treeplex constraints, or `None` if `x` has
    /// the wrong length or non-finite entries.
    pub fn residual(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.num_sequences || x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut worst = (x[EMPTY_SEQUENCE] - 1.0).abs();
        for v in x {
            worst = worst.max(-v);
        }
        for info in &self.infosets {
            let mass: f64 = x[info.actions()].iter().sum();
            worst = worst.max((x[info.parent] - mass).abs());
        }
        Some(worst)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.residual(x).is_some_and(|r| r <= tol)
    }

    pub(crate) fn check_member(&self, x: &[f64], tol: f64) -> Result<(), TreeplexError> {
        if x.len() != self.num_sequences {
            return Err(TreeplexError::DimensionMismatch {
                expected: self.num_sequences,
                found: x.len(),
            });
        }
        match self.residual(x) {
            Some(r) if r <= tol => Ok(()),
            Some(r) => Err(TreeplexError::NotInTreeplex { residual: r }),
            None => Err(TreeplexError::NotInTreeplex {
                residual: f64::INFINITY,
            }),
        }
    }

    /// Maximizes `g . x` over the treeplex.
    ///
    /// Returns the optimum and a pure maximizer. Ties go to the lowest action
    /// index.
    pub fn linear_max(&self, g: &[f64]) -> (f64, SequenceVector) {
        let mut value = g.to_vec();
        let mut choice = vec![0usize; self.infosets.len()];
        for id in self.bottom_up() {
            let info = &self.infosets[id];
            let mut best = info.first;
            for s in info.actions().skip(1) {
                if value[s] > value[best] {
                    best = s;
                }
            }
            choice[id] = best;
            value[info.parent] += value[best];
        }
        let mut x = SequenceVector::zeros(self.num_sequences);
        x[EMPTY_SEQUENCE] = 1.0;
        for id in self.top_down() {
            let info = &self.infosets[id];
            x[choice[id]] = x[info.parent];
        }
        (value[EMPTY_SEQUENCE], x)
    }
}

fn topological_order(
    infosets: &[Infoset],
    owner: &[Option<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, TreeplexError> {
    let parent_infoset = |i: usize| owner[infosets[i].parent];

    // Specs emitted in top-down order keep the identity permutation.
    if (0..infosets.len()).all(|i| parent_infoset(i).is_none_or(|p| p < i)) {
        return Ok((0..infosets.len()).collect());
    }

    let mut order = Vec::with_capacity(infosets.len());
    let mut queue: std::collections::VecDeque<usize> =
        children[EMPTY_SEQUENCE].iter().copied().collect();
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for s in infosets[i].actions() {
            queue.extend(children[s].iter().copied());
        }
    }
    if order.len() == infosets.len() {
        return Ok(order);
    }

    // Anything unreachable from the root sits on or below a cycle; walk up
    // until a repeat to name an infoset on the cycle itself.
    let mut reached = vec![false; infosets.len()];
    for &i in &order {
        reached[i] = true;
    }
    let start = (0..infosets.len()).find(|&i| !reached[i]).unwrap();
    let mut seen = vec![false; infosets.len()];
    let mut cur = start;
    while !seen[cur] {
        seen[cur] = true;
        cur = parent_infoset(cur).expect("unreached infoset must have a parent infoset");
    }
    Err(TreeplexError::Cycle { infoset: cur })
}

/// Integer infoset weights `w_I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights(Vec<u64>);

impl Weights {
    pub fn get(&self, infoset: usize) -> u64 {
        self.0[infoset]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}
