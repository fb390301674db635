#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use efg_smooth::cfr::prod;
use efg_smooth::games::{GameTree, Player, SequenceForm};
use efg_smooth::treeplex::{InfosetSpec, ProxSetup, SequenceVector, Treeplex, EMPTY_SEQUENCE};

pub const KUHN_VALUE: f64 = -1.0 / 18.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-infoset distributions with every entry in `[floor, 1]` before
/// normalization.
pub fn random_behavioral(t: &Treeplex, rng: &mut impl Rng, floor: f64) -> SequenceVector {
    let mut z = SequenceVector::zeros(t.num_sequences());
    z[EMPTY_SEQUENCE] = 1.0;
    for info in t.infosets() {
        let raw: Vec<f64> = info.actions().map(|_| rng.random_range(floor..=1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (s, v) in info.actions().zip(raw) {
            z[s] = v / total;
        }
    }
    z
}

/// A point in the relative interior of the treeplex.
pub fn random_interior(t: &Treeplex, rng: &mut impl Rng) -> SequenceVector {
    let z = random_behavioral(t, rng, 0.05);
    prod(t, &z)
}

/// A point with some infosets played purely, so that some sequences get
/// zero mass.
pub fn random_mixed_or_pure(t: &Treeplex, rng: &mut impl Rng) -> SequenceVector {
    let mut z = random_behavioral(t, rng, 0.0);
    for info in t.infosets() {
        if rng.random_bool(0.3) {
            let pick = rng.random_range(info.actions());
            for s in info.actions() {
                z[s] = if s == pick { 1.0 } else { 0.0 };
            }
        }
    }
    prod(t, &z)
}

/// A random treeplex with at most `max_sequences` sequences.
pub fn random_treeplex(rng: &mut impl Rng, max_sequences: usize) -> Treeplex {
    let mut specs: Vec<InfosetSpec> = Vec::new();
    let mut sequences = 1;
    loop {
        let room = max_sequences - sequences;
        if room < 2 || (!specs.is_empty() && rng.random_bool(0.25)) {
            break;
        }
        let actions = rng.random_range(2..=room.min(3));
        let parent = rng.random_range(0..sequences);
        specs.push(InfosetSpec::new(parent, actions));
        sequences += actions;
    }
    Treeplex::new(&specs).expect("generated specs are valid")
}

/// Sequence-form strategy of `player` when every game infoset plays
/// `policy(infoset)`.
pub fn sequence_strategy(
    game: &GameTree,
    sf: &SequenceForm,
    player: Player,
    policy: &dyn Fn(usize) -> Vec<f64>,
) -> SequenceVector {
    let t = sf.problem.treeplex(player);
    let mut z = SequenceVector::zeros(t.num_sequences());
    z[EMPTY_SEQUENCE] = 1.0;
    for (g, info) in game.infosets().iter().enumerate() {
        if info.player != player {
            continue;
        }
        let local = sf.infoset_index[g];
        for (s, p) in t.infoset(local).actions().zip(policy(g)) {
            z[s] = p;
        }
    }
    prod(t, &z)
}

/// Maximizes `xi.x - d(x)` over the treeplex by an equality-constrained
/// damped Newton method on the flow constraints, starting from the uniform
/// point. Independent of the closed-form recursion.
pub fn newton_conjugate(prox: &ProxSetup, xi: &[f64]) -> (f64, Vec<f64>) {
    let t = prox.treeplex();
    let n = t.num_sequences();
    let m = t.num_infosets() + 1;
    let c = prox.coefficients();
    let mut cons = DMatrix::<f64>::zeros(m, n);
    cons[(0, EMPTY_SEQUENCE)] = 1.0;
    for (i, info) in t.infosets().iter().enumerate() {
        cons[(i + 1, info.parent())] -= 1.0;
        for s in info.actions() {
            cons[(i + 1, s)] = 1.0;
        }
    }
    let objective = |x: &[f64]| -> f64 {
        x.iter()
            .zip(xi)
            .zip(c)
            .map(|((&v, &g), &w)| g * v - if v > 0.0 { w * v * v.ln() } else { 0.0 })
            .sum()
    };
    let mut x: Vec<f64> = t.uniform_point().into_vec();
    for _ in 0..200 {
        let grad: Vec<f64> = (0..n).map(|j| xi[j] - c[j] * (1.0 + x[j].ln())).collect();
        let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
        let mut rhs = DVector::<f64>::zeros(n + m);
        for j in 0..n {
            kkt[(j, j)] = c[j] / x[j];
            rhs[j] = grad[j];
        }
        for i in 0..m {
            for j in 0..n {
                kkt[(n + i, j)] = cons[(i, j)];
                kkt[(j, n + i)] = cons[(i, j)];
            }
        }
        let sol = kkt.lu().solve(&rhs).expect("KKT system is nonsingular");
        let dir: Vec<f64> = (0..n).map(|j| sol[j]).collect();
        let decrement: f64 = (0..n).map(|j| dir[j] * grad[j]).sum();
        if decrement < 1e-28 {
            break;
        }
        let mut step = 1.0;
        while (0..n).any(|j| x[j] + step * dir[j] <= 0.0) {
            step *= 0.5;
        }
        let f0 = objective(&x);
        loop {
            let cand: Vec<f64> = (0..n).map(|j| x[j] + step * dir[j]).collect();
            if objective(&cand) >= f0 + 0.25 * step * decrement || step < 1e-12 {
                x = cand;
                break;
            }
            step *= 0.5;
        }
    }
    (objective(&x), x)
}

/// `d(x)` in its nested form `sum_I w_I x_p(I) sum_a z_a ln z_a`.
pub fn dilated_form(prox: &ProxSetup, x: &[f64]) -> f64 {
    let t = prox.treeplex();
    let w = prox.weights();
    let mut total = 0.0;
    for (id, info) in t.infosets().iter().enumerate() {
        let parent = x[info.parent()];
        let inner: f64 = info
            .actions()
            .map(|s| {
                let z = x[s] / parent;
                if z > 0.0 {
                    z * z.ln()
                } else {
                    0.0
                }
            })
            .sum();
        total += w.get(id) as f64 * parent * inner;
    }
    total
}

/// The Kuhn equilibrium with P1 never bluffing (alpha = 0), by infoset key.
pub fn kuhn_equilibrium(key: &str) -> Vec<f64> {
    match key {
        // player 1 opening: check every card
        "J|" | "Q|" | "K|" => vec![1.0, 0.0],
        // player 1 facing a bet after checking: fold / call
        "J|cr" => vec![1.0, 0.0],
        "Q|cr" => vec![2.0 / 3.0, 1.0 / 3.0],
        "K|cr" => vec![0.0, 1.0],
        // player 2 after a check: check / bet
        "J|c" => vec![2.0 / 3.0, 1.0 / 3.0],
        "Q|c" => vec![1.0, 0.0],
        "K|c" => vec![0.0, 1.0],
        // player 2 facing a bet: fold / call
        "J|r" => vec![1.0, 0.0],
        "Q|r" => vec![2.0 / 3.0, 1.0 / 3.0],
        "K|r" => vec![0.0, 1.0],
        other => panic!("unknown kuhn infoset {other}"),
    }
}
