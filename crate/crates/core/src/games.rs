//! Game trees for Kuhn poker and Leduc Hold'em, perfect-recall validation,
//! and compilation to sequence form.
//!
//! Payoffs are stored as `u`, the amount player 1 loses (equivalently the
//! amount player 2 wins). Player 1 minimizes `x^T A y`, player 2 maximizes.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bspp::SaddlePointProblem;
use crate::error::GameError;
use crate::sparse::SparsePayoffMatrix;
use crate::treeplex::{InfosetSpec, Treeplex, EMPTY_SEQUENCE};

const CHANCE_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Decision {
        player: Player,
        infoset: usize,
        children: Vec<NodeId>,
    },
    Terminal {
        /// Chips lost by player 1.
        payoff: f64,
        /// Product of chance probabilities on the root path.
        chance_reach: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfosetInfo {
    pub key: String,
    pub player: Player,
    pub actions: Vec<String>,
}

/// A finite two-player game tree with chance.
#[derive(Clone, Debug)]
pub struct GameTree {
    nodes: Vec<Node>,
    infosets: Vec<InfosetInfo>,
    root: NodeId,
}

impl GameTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn infosets(&self) -> &[InfosetInfo] {
        &self.infosets
    }

    pub fn terminals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Terminal {
                payoff,
                chance_reach,
            } => Some((*payoff, *chance_reach)),
            _ => None,
        })
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals().count()
    }

    pub fn num_infosets_of(&self, player: Player) -> usize {
        self.infosets.iter().filter(|i| i.player == player).count()
    }

    /// Expected `u` when each infoset `I` plays `policy(I)`, computed by
    /// walking the tree.
    pub fn expected_payoff<'a>(&self, policy: impl Fn(usize) -> &'a [f64]) -> f64 {
        let mut total = 0.0;
        let mut stack = vec![(self.root, 1.0)];
        while let Some((id, reach)) = stack.pop() {
            match &self.nodes[id] {
                Node::Chance { outcomes } => {
                    stack.extend(outcomes.iter().map(|&(p, c)| (c, reach * p)));
                }
                Node::Decision {
                    infoset, children, ..
                } => {
                    let probs = policy(*infoset);
                    for (&c, &p) in children.iter().zip(probs) {
                        if p != 0.0 {
                            stack.push((c, reach * p));
                        }
                    }
                }
                Node::Terminal { payoff, .. } => total += reach * payoff,
            }
        }
        total
    }
}

/// Assembles a [`GameTree`] bottom-up: children are added before parents.
#[derive(Debug, Default)]
pub struct GameBuilder {
    nodes: Vec<Node>,
    infosets: Vec<InfosetInfo>,
    index: HashMap<String, usize>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terminal(&mut self, payoff: f64, chance_reach: f64) -> NodeId {
        self.push(Node::Terminal {
            payoff,
            chance_reach,
        })
    }

    pub fn chance(&mut self, outcomes: Vec<(f64, NodeId)>) -> NodeId {
        self.push(Node::Chance { outcomes })
    }

    pub fn decision(
        &mut self,
        player: Player,
        key: &str,
        actions: &[&str],
        children: Vec<NodeId>,
    ) -> Result<NodeId, GameError> {
        if actions.is_empty() || actions.len() != children.len() {
            return Err(GameError::InconsistentInfoset {
                key: key.to_string(),
                reason: "action labels and children differ in number",
            });
        }
        let infoset = match self.index.get(key) {
            Some(&id) => {
                let info = &self.infosets[id];
                if info.player != player {
                    return Err(GameError::InconsistentInfoset {
                        key: key.to_string(),
                        reason: "nodes belong to different players",
                    });
                }
                if info.actions.iter().map(String::as_str).ne(actions.iter().copied()) {
                    return Err(GameError::InconsistentInfoset {
                        key: key.to_string(),
                        reason: "nodes have different legal actions",
                    });
                }
                id
            }
            None => {
                let id = self.infosets.len();
                self.infosets.push(InfosetInfo {
                    key: key.to_string(),
                    player,
                    actions: actions.iter().map(|a| a.to_string()).collect(),
                });
                self.index.insert(key.to_string(), id);
                id
            }
        };
        Ok(self.push(Node::Decision {
            player,
            infoset,
            children,
        }))
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Finishes the tree at `root`, checking chance sums and the stored
    /// chance reach of every terminal.
    pub fn finish(self, root: NodeId) -> Result<GameTree, GameError> {
        let tree = GameTree {
            nodes: self.nodes,
            infosets: self.infosets,
            root,
        };
        let mut stack = vec![(root, 1.0f64)];
        while let Some((id, reach)) = stack.pop() {
            match &tree.nodes[id] {
                Node::Chance { outcomes } => {
                    let sum: f64 = outcomes.iter().map(|o| o.0).sum();
                    if (sum - 1.0).abs() > CHANCE_SUM_TOL {
                        return Err(GameError::ChanceSum { node: id, sum });
                    }
                    stack.extend(outcomes.iter().map(|&(p, c)| (c, reach * p)));
                }
                Node::Decision { children, .. } => {
                    stack.extend(children.iter().map(|&c| (c, reach)));
                }
                Node::Terminal { chance_reach, .. } => {
                    if (chance_reach - reach).abs() > CHANCE_SUM_TOL * reach.max(1.0) {
                        return Err(GameError::ChanceReach {
                            node: id,
                            stored: *chance_reach,
                            expected: reach,
                        });
                    }
                }
            }
        }
        Ok(tree)
    }
}

/// Betting structure shared by the Kuhn and Leduc generators.
#[derive(Clone, Debug)]
struct PokerRules {
    ranks: usize,
    suits: usize,
    /// Raise size per betting round; a community card precedes every round
    /// after the first.
    raise_sizes: Vec<f64>,
    /// Raises permitted per round (bet plus re-raises).
    max_raises: usize,
}

const RANK_NAMES: &[u8] = b"23456789TJQKA";

/// Rank names end at king for decks of up to 12 ranks (Kuhn is J, Q, K),
/// and at ace for the full 13.
fn rank_name(rank: usize, ranks: usize) -> String {
    let top = if ranks < RANK_NAMES.len() {
        RANK_NAMES.len() - 1
    } else {
        RANK_NAMES.len()
    };
    if ranks <= RANK_NAMES.len() {
        (RANK_NAMES[top - ranks + rank] as char).to_string()
    } else {
        format!("<{rank}>")
    }
}

struct PokerGen<'a> {
    rules: &'a PokerRules,
    builder: GameBuilder,
}

#[derive(Clone)]
struct Hand {
    cards: [usize; 2],
    board: Option<usize>,
    /// Closed betting rounds.
    history: Vec<String>,
    contrib: [f64; 2],
    reach: f64,
}

impl PokerGen<'_> {
    fn rank(&self, card: usize) -> usize {
        card / self.rules.suits
    }

    fn root(&mut self) -> Result<NodeId, GameError> {
        let deck = self.rules.ranks * self.rules.suits;
        let p = 1.0 / (deck * (deck - 1)) as f64;
        let mut outcomes = Vec::new();
        for c1 in 0..deck {
            for c2 in (0..deck).filter(|&c| c != c1) {
                let hand = Hand {
                    cards: [c1, c2],
                    board: None,
                    history: Vec::new(),
                    contrib: [1.0, 1.0],
                    reach: p,
                };
                outcomes.push((p, self.round(&hand, String::new(), 0)?));
            }
        }
        Ok(self.builder.chance(outcomes))
    }

    fn key(&self, hand: &Hand, player: Player, current: &str) -> String {
        let ranks = self.rules.ranks;
        let mut key = rank_name(self.rank(hand.cards[player.index()]), ranks);
        if let Some(b) = hand.board {
            key.push_str(&rank_name(self.rank(b), ranks));
        }
        key.push('|');
        for h in &hand.history {
            key.push_str(h);
            key.push('/');
        }
        key.push_str(current);
        key
    }

    /// A decision inside the current betting round. `current` holds the
    /// actions taken so far in this round (`c` check/call, `r` raise,
    /// `f` fold); player 1 opens every round.
    fn round(&mut self, hand: &Hand, current: String, raises: usize) -> Result<NodeId, GameError> {
        let actor = if current.len() % 2 == 0 {
            Player::One
        } else {
            Player::Two
        };
        let me = actor.index();
        let other = 1 - me;
        let facing = hand.contrib[other] > hand.contrib[me];
        let round_index = hand.history.len();
        let raise = self.rules.raise_sizes[round_index];
        let can_raise = raises < self.rules.max_raises;

        let mut labels: Vec<&str> = Vec::new();
        let mut children = Vec::new();
        if facing {
            labels.push("fold");
            let payoff = match actor {
                Player::One => hand.contrib[0],
                Player::Two => -hand.contrib[1],
            };
            children.push(self.builder.terminal(payoff, hand.reach));

            labels.push("call");
            let mut called = hand.clone();
            called.contrib[me] = called.contrib[other];
            children.push(self.close_round(called, current.clone() + "c")?);
        } else {
            labels.push("check");
            let next = current.clone() + "c";
            children.push(if current.is_empty() {
                self.round(hand, next, raises)?
            } else {
                self.close_round(hand.clone(), next)?
            });
        }
        if can_raise {
            labels.push("raise");
            let mut raised = hand.clone();
            raised.contrib[me] = raised.contrib[other] + raise;
            children.push(self.round(&raised, current.clone() + "r", raises + 1)?);
        }
        let key = self.key(hand, actor, &current);
        self.builder.decision(actor, &key, &labels, children)
    }

    fn close_round(&mut self, mut hand: Hand, current: String) -> Result<NodeId, GameError> {
        hand.history.push(current);
        if hand.history.len() == self.rules.raise_sizes.len() {
            return Ok(self.showdown(&hand));
        }
        let deck = self.rules.ranks * self.rules.suits;
        let remaining: Vec<usize> = (0..deck).filter(|c| !hand.cards.contains(c)).collect();
        let p = 1.0 / remaining.len() as f64;
        let mut outcomes = Vec::with_capacity(remaining.len());
        for card in remaining {
            let mut next = hand.clone();
            next.board = Some(card);
            next.reach *= p;
            outcomes.push((p, self.round(&next, String::new(), 0)?));
        }
        Ok(self.builder.chance(outcomes))
    }

    fn showdown(&mut self, hand: &Hand) -> NodeId {
        let r1 = self.rank(hand.cards[0]);
        let r2 = self.rank(hand.cards[1]);
        let board = hand.board.map(|b| self.rank(b));
        let strength = |r: usize| {
            let paired = board == Some(r);
            (paired, r)
        };
        let payoff = match strength(r1).cmp(&strength(r2)) {
            std::cmp::Ordering::Greater => -hand.contrib[1],
            std::cmp::Ordering::Less => hand.contrib[0],
            std::cmp::Ordering::Equal => 0.0,
        };
        self.builder.terminal(payoff, hand.reach)
    }
}

fn build_poker(rules: &PokerRules) -> Result<GameTree, GameError> {
    let mut generator = PokerGen {
        rules,
        builder: GameBuilder::new(),
    };
    let root = generator.root()?;
    generator.builder.finish(root)
}

/// Kuhn poker: three cards, ante 1, a single 1-chip raise.
pub fn build_kuhn() -> GameTree {
    build_poker(&PokerRules {
        ranks: 3,
        suits: 1,
        raise_sizes: vec![1.0],
        max_raises: 1,
    })
    .expect("kuhn rules are well formed")
}

/// Leduc Hold'em with `ranks` ranks of two cards each: ante 1, raises of 2
/// then 4 chips, at most a raise and a re-raise per round, one community
/// card between the rounds.
pub fn build_leduc(ranks: usize) -> Result<GameTree, GameError> {
    if ranks < 2 {
        return Err(GameError::TooFewRanks(ranks));
    }
    build_poker(&PokerRules {
        ranks,
        suits: 2,
        raise_sizes: vec![2.0, 4.0],
        max_raises: 2,
    })
}

/// Parent of each game infoset in its owner's information tree:
/// `None` for the empty sequence, otherwise `(infoset, action)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentMap(pub Vec<Option<(usize, usize)>>);

/// Checks that all nodes of an infoset share the owner's own action
/// history, returning the parent function on success.
pub fn validate_perfect_recall(game: &GameTree) -> Result<ParentMap, GameError> {
    let mut seen: Vec<Option<Vec<(usize, usize)>>> = vec![None; game.infosets.len()];
    let mut histories: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
    walk_recall(game, game.root, &mut histories, &mut seen)?;
    Ok(ParentMap(
        seen.into_iter()
            .map(|h| h.and_then(|h| h.last().copied()))
            .collect(),
    ))
}

fn walk_recall(
    game: &GameTree,
    id: NodeId,
    histories: &mut [Vec<(usize, usize)>; 2],
    seen: &mut [Option<Vec<(usize, usize)>>],
) -> Result<(), GameError> {
    match &game.nodes[id] {
        Node::Chance { outcomes } => {
            for &(_, c) in outcomes {
                walk_recall(game, c, histories, seen)?;
            }
        }
        Node::Decision {
            player,
            infoset,
            children,
        } => {
            let own = &histories[player.index()];
            match &seen[*infoset] {
                Some(h) if h != own => {
                    return Err(GameError::ImperfectRecall {
                        key: game.infosets[*infoset].key.clone(),
                    })
                }
                Some(_) => {}
                None => seen[*infoset] = Some(own.clone()),
            }
            for (a, &c) in children.iter().enumerate() {
                histories[player.index()].push((*infoset, a));
                walk_recall(game, c, histories, seen)?;
                histories[player.index()].pop();
            }
        }
        Node::Terminal { .. } => {}
    }
    Ok(())
}

/// A game compiled to sequence form.
#[derive(Clone, Debug)]
pub struct SequenceForm {
    pub problem: SaddlePointProblem,
    /// Treeplex infoset id of every game infoset (within its owner's
    /// treeplex).
    pub infoset_index: Vec<usize>,
}

/// Compiles a perfect-recall game into two treeplexes and the payoff matrix
/// `A[p1(z), p2(z)] += pi_c(z) u(z)`.
pub fn sequence_form(game: &GameTree) -> Result<SequenceForm, GameError> {
    validate_perfect_recall(game)?;

    struct Compiler<'a> {
        game: &'a GameTree,
        specs: [Vec<InfosetSpec>; 2],
        next: [usize; 2],
        assigned: Vec<Option<(usize, usize)>>,
        entries: Vec<(usize, usize, f64)>,
    }

    impl Compiler<'_> {
        fn visit(&mut self, id: NodeId, last: [usize; 2]) {
            match &self.game.nodes[id] {
                Node::Chance { outcomes } => {
                    for &(_, c) in outcomes {
                        self.visit(c, last);
                    }
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let p = player.index();
                    let first = match self.assigned[*infoset] {
                        Some((_, first)) => first,
                        None => {
                            let local = self.specs[p].len();
                            self.specs[p].push(InfosetSpec::new(last[p], children.len()));
                            let first = self.next[p];
                            self.next[p] += children.len();
                            self.assigned[*infoset] = Some((local, first));
                            first
                        }
                    };
                    for (a, &c) in children.iter().enumerate() {
                        let mut next = last;
                        next[p] = first + a;
                        self.visit(c, next);
                    }
                }
                Node::Terminal {
                    payoff,
                    chance_reach,
                } => self.entries.push((last[0], last[1], chance_reach * payoff)),
            }
        }
    }

    let mut compiler = Compiler {
        game,
        specs: [Vec::new(), Vec::new()],
        next: [1, 1],
        assigned: vec![None; game.infosets.len()],
        entries: Vec::new(),
    };
    compiler.visit(game.root, [EMPTY_SEQUENCE; 2]);

    let [s1, s2] = &compiler.specs;
    let tx = Arc::new(Treeplex::new(s1)?);
    let ty = Arc::new(Treeplex::new(s2)?);
    let matrix = SparsePayoffMatrix::from_triplets(
        tx.num_sequences(),
        ty.num_sequences(),
        compiler.entries,
    );
    let problem = SaddlePointProblem::new(tx, ty, Arc::new(matrix))
        .expect("compiled matrix matches the treeplex sizes");
    let infoset_index = compiler
        .assigned
        .into_iter()
        .map(|a| a.map_or(usize::MAX, |(local, _)| local))
        .collect();
    Ok(SequenceForm {
        problem,
        infoset_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_counts() {
        let g = build_kuhn();
        assert_eq!(g.num_terminals(), 30);
        assert_eq!(g.num_infosets_of(Player::One), 6);
        assert_eq!(g.num_infosets_of(Player::Two), 6);
        let total: f64 = g.terminals().map(|t| t.1).sum();
        // 6 deals x 5 endings, each with reach 1/6
        assert!((total - 5.0).abs() < 1e-12);
    }

    #[test]
    fn kuhn_king_beats_jack_on_raise_call() {
        let g = build_kuhn();
        let Node::Chance { outcomes } = g.node(g.root()) else {
            panic!("root is the deal");
        };
        // P1 holds K against either J or Q; both lose to nothing
        let mut found = false;
        for &(_, c) in outcomes {
            let Node::Decision { infoset, children, .. } = g.node(c) else { continue };
            if g.infosets()[*infoset].key != "K|" {
                continue;
            }
            let raise = children[1];
            let Node::Decision { children: p2, infoset: j, .. } = g.node(raise) else {
                panic!()
            };
            assert_eq!(g.infosets()[*j].actions, vec!["fold", "call"]);
            let Node::Terminal { payoff, .. } = g.node(p2[1]) else { panic!() };
            assert_eq!(*payoff, -2.0);
            let Node::Terminal { payoff, .. } = g.node(p2[0]) else { panic!() };
            assert_eq!(*payoff, -1.0);
            found = true;
        }
        assert!(found);
    }

    #[test]
    fn leduc_sizes() {
        let g = build_leduc(3).unwrap();
        let Node::Chance { outcomes } = g.node(g.root()) else { panic!() };
        assert_eq!(outcomes.len(), 30);
        let max = g.terminals().map(|t| t.0.abs()).fold(0.0, f64::max);
        assert_eq!(max, 13.0);
        // 30 deals x (4 folds + 5 continuations x 4 boards x 9 endings)
        assert_eq!(g.num_terminals(), 30 * (4 + 5 * 4 * 9));
        assert_eq!(g.num_infosets_of(Player::One), 3 * 3 + 3 * 3 * 5 * 3);
        assert!(matches!(build_leduc(1), Err(GameError::TooFewRanks(1))));
    }

    #[test]
    fn leduc_tie_is_zero() {
        let g = build_leduc(3).unwrap();
        // every showdown between equal ranks where the board pairs neither
        // player must be a push; find one via the infoset keys
        let mut pushes = 0;
        for n in 0..g.num_nodes() {
            if let Node::Terminal { payoff, .. } = g.node(n) {
                if *payoff == 0.0 {
                    pushes += 1;
                }
            }
        }
        // deals with equal ranks: 3 ranks x 2 orders; board is one of the
        // other 4 cards; 5 x 5 showdown lines
        assert_eq!(pushes, 6 * 4 * 5 * 5);
    }

    #[test]
    fn builder_rejects_inconsistent_infosets() {
        let mut b = GameBuilder::new();
        let t1 = b.terminal(1.0, 1.0);
        let t2 = b.terminal(0.0, 1.0);
        b.decision(Player::One, "a", &["x", "y"], vec![t1, t2]).unwrap();
        assert!(b.decision(Player::Two, "a", &["x", "y"], vec![t1, t2]).is_err());
        assert!(b.decision(Player::One, "a", &["x"], vec![t1]).is_err());
        assert!(b.decision(Player::One, "b", &["x"], vec![t1, t2]).is_err());
    }

    #[test]
    fn chance_sums_checked() {
        let mut b = GameBuilder::new();
        let t1 = b.terminal(1.0, 0.5);
        let t2 = b.terminal(0.0, 0.4);
        let root = b.chance(vec![(0.5, t1), (0.4, t2)]);
        assert!(matches!(b.finish(root), Err(GameError::ChanceSum { .. })));

        let mut b = GameBuilder::new();
        let t1 = b.terminal(1.0, 0.5);
        let t2 = b.terminal(0.0, 0.25);
        let root = b.chance(vec![(0.5, t1), (0.5, t2)]);
        assert!(matches!(b.finish(root), Err(GameError::ChanceReach { .. })));
    }

    #[test]
    fn perfect_recall_holds_for_poker() {
        assert!(validate_perfect_recall(&build_kuhn()).is_ok());
        assert!(validate_perfect_recall(&build_leduc(3).unwrap()).is_ok());
    }

    /// Player 1 moves twice; the second decision merges the nodes after
    /// each first action into one infoset, forgetting the first move.
    #[test]
    fn forgetful_player_is_reported() {
        let mut b = GameBuilder::new();
        let leaves: Vec<_> = (0..4).map(|i| b.terminal(i as f64, 1.0)).collect();
        let l = b.decision(Player::One, "second", &["a", "b"], vec![leaves[0], leaves[1]]).unwrap();
        let r = b.decision(Player::One, "second", &["a", "b"], vec![leaves[2], leaves[3]]).unwrap();
        let root = b.decision(Player::One, "first", &["L", "R"], vec![l, r]).unwrap();
        let g = b.finish(root).unwrap();
        assert_eq!(
            validate_perfect_recall(&g).unwrap_err(),
            GameError::ImperfectRecall {
                key: "second".into()
            }
        );
        assert!(sequence_form(&g).is_err());
    }

    #[test]
    fn kuhn_sequence_form_shape() {
        let sf = sequence_form(&build_kuhn()).unwrap();
        let p = &sf.problem;
        assert_eq!(p.tx().num_sequences(), 13);
        assert_eq!(p.ty().num_sequences(), 13);
        assert_eq!(p.matrix().nnz(), 30);
        assert!((p.matrix_norm() - 1.0 / 3.0).abs() < 1e-15);
        for t in [p.tx(), p.ty()] {
            let actions: usize = t.infosets().iter().map(|i| i.num_actions()).sum();
            assert_eq!(t.num_sequences(), 1 + actions);
        }
    }

    #[test]
    fn one_sided_game_gives_a_column() {
        let mut b = GameBuilder::new();
        let leaves: Vec<_> = [3.0, -1.0, 2.0].iter().map(|&u| b.terminal(u, 0.5)).collect();
        let more: Vec<_> = [1.0, 5.0, 0.0].iter().map(|&u| b.terminal(u, 0.5)).collect();
        let d1 = b.decision(Player::One, "only", &["a", "b", "c"], leaves).unwrap();
        let d2 = b.decision(Player::One, "only", &["a", "b", "c"], more).unwrap();
        let root = b.chance(vec![(0.5, d1), (0.5, d2)]);
        let g = b.finish(root).unwrap();
        let sf = sequence_form(&g).unwrap();
        let m = sf.problem.matrix();
        assert_eq!((m.rows(), m.cols()), (4, 1));
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(2, 0), 2.0);
        assert_eq!(m.get(3, 0), 1.0);
    }
}
