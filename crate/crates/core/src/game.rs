//! Strategy profiles and player utilities.
//!
//! A player's utility is the population average of each node's relative
//! opinion toward that player after `T` steps of the dynamics. It can be
//! computed three ways:
//!
//! * [`Game::utility`] simulates the dynamics from the seeded initial state;
//! * [`Game::utility_closed_form`] expands the final opinions over the
//!   diffusion centralities `c^u_v` of every source, so no simulation is
//!   needed once the centralities are cached;
//! * [`Game::consensus_utility`] takes the `T → ∞` limit, where every node
//!   ends at the same opinion weighted by the consensus weights `c^u`.
//!
//! Utilities always sum to one across players.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::ops::Index;
use std::sync::OnceLock;

use crate::dynamics::{
    check_alpha, check_epsilon, diffusion_centralities, eigenvector_weights, evolve, initialize,
    BatchMode, CentralityTable, ConsensusWeights, InfluenceMatrix, DEFAULT_ALPHA,
    DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL, DEFAULT_EPSILON,
};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Margin a payoff must clear, relative to `max(1, |old|)`, to count as a
/// strict improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

pub fn improves(new: f64, old: f64) -> bool {
    new - old > IMPROVEMENT_TOL * old.abs().max(1.0)
}

/// One seed set per player, each stored sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyProfile {
    strategies: Vec<Vec<usize>>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<Vec<usize>>) -> Result<StrategyProfile> {
        let strategies = strategies
            .into_iter()
            .enumerate()
            .map(|(player, s)| canonical(player, s))
            .collect::<Result<_>>()?;
        Ok(StrategyProfile { strategies })
    }

    /// `players` empty seed sets; a starting point for building responses.
    pub fn empty(players: usize) -> StrategyProfile {
        StrategyProfile {
            strategies: vec![Vec::new(); players],
        }
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, i: usize) -> &[usize] {
        &self.strategies[i]
    }

    pub fn strategies(&self) -> &[Vec<usize>] {
        &self.strategies
    }

    /// Copy of the profile with player `i`'s seed set replaced.
    pub fn with_strategy(&self, i: usize, strategy: Vec<usize>) -> Result<StrategyProfile> {
        if i >= self.players() {
            return Err(Error::InvalidStrategy {
                player: i,
                reason: format!("profile has only {} players", self.players()),
            });
        }
        let mut strategies = self.strategies.clone();
        strategies[i] = canonical(i, strategy)?;
        Ok(StrategyProfile { strategies })
    }

    pub fn check_nodes(&self, node_count: usize) -> Result<()> {
        for (player, s) in self.strategies.iter().enumerate() {
            if let Some(&v) = s.iter().find(|&&v| v >= node_count) {
                return Err(Error::InvalidStrategy {
                    player,
                    reason: format!("node {v} out of range for {node_count} nodes"),
                });
            }
        }
        Ok(())
    }

    /// `M_v(s)` for every node `v`: the players seeding it, ascending.
    pub fn seeders(&self, node_count: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); node_count];
        for (i, s) in self.strategies.iter().enumerate() {
            for &v in s {
                out[v].push(i);
            }
        }
        out
    }

    /// Reads `player <i> seeds <id> <id> ...` lines (0-based player and node
    /// ids, `#` comments). Players without a line get an empty seed set;
    /// `min_players` pads the profile when trailing players are absent.
    pub fn load<R: BufRead>(source: R, min_players: usize) -> Result<StrategyProfile> {
        let mut lines: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if fields.len() < 3 || fields[0] != "player" || fields[2] != "seeds" {
                return Err(bad(format!(
                    "expected `player <i> seeds <ids...>`, found `{trimmed}`"
                )));
            }
            let player: usize = fields[1]
                .parse()
                .map_err(|_| bad(format!("invalid player index `{}`", fields[1])))?;
            let seeds = fields[3..]
                .iter()
                .map(|f| f.parse().map_err(|_| bad(format!("invalid node id `{f}`"))))
                .collect::<Result<Vec<usize>>>()?;
            if lines.insert(player, seeds).is_some() {
                return Err(bad(format!("player {player} listed twice")));
            }
        }
        let players = lines
            .keys()
            .next_back()
            .map_or(0, |&p| p + 1)
            .max(min_players);
        let mut strategies = vec![Vec::new(); players];
        for (p, s) in lines {
            strategies[p] = s;
        }
        StrategyProfile::new(strategies)
    }

    pub fn parse(text: &str) -> Result<StrategyProfile> {
        Self::load(text.as_bytes(), 0)
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.strategies.iter().enumerate() {
            write!(f, "player {i} seeds")?;
            for v in s {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn canonical(player: usize, mut s: Vec<usize>) -> Result<Vec<usize>> {
    s.sort_unstable();
    if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidStrategy {
            player,
            reason: format!("node {} listed twice", w[0]),
        });
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector {
    pub payoffs: Vec<f64>,
}

impl PayoffVector {
    pub fn sum(&self) -> f64 {
        self.payoffs.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }
}

impl Index<usize> for PayoffVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.payoffs[i]
    }
}

/// The game parameters: graph, per-player budgets, `alpha`, horizon `T`
/// and the unseeded opinion `epsilon`. The player count is the number of
/// budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub graph: Graph,
    pub budgets: Vec<usize>,
    pub alpha: f64,
    pub horizon: usize,
    pub epsilon: f64,
}

impl GameConfig {
    pub fn new(graph: Graph, budgets: Vec<usize>, horizon: usize) -> GameConfig {
        GameConfig {
            graph,
            budgets,
            alpha: DEFAULT_ALPHA,
            horizon,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn players(&self) -> usize {
        self.budgets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.players() < 2 {
            return Err(Error::InvalidParameter(format!(
                "the game needs at least 2 players, got {}",
                self.players()
            )));
        }
        if let Some(i) = self.budgets.iter().position(|&b| b == 0) {
            return Err(Error::InvalidParameter(format!(
                "budget of player {i} must be positive"
            )));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        check_alpha(self.alpha)?;
        check_epsilon(self.epsilon, self.players())?;
        self.graph.ensure_valid()
    }
}

/// How final opinions are turned into payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PayoffModel {
    /// Opinions after exactly `T` steps.
    #[default]
    Transient,
    /// The consensus reached as `T → ∞`.
    Consensus,
}

/// A validated game with `Γ` built and the horizon-`T` diffusion
/// centralities and consensus weights cached on first use.
#[derive(Debug)]
pub struct Game {
    config: GameConfig,
    gamma: InfluenceMatrix,
    workers: usize,
    centralities: OnceLock<CentralityTable>,
    consensus: OnceLock<Result<ConsensusWeights>>,
}

impl Game {
    pub fn new(config: GameConfig) -> Result<Game> {
        config.validate()?;
        let gamma = InfluenceMatrix::new(&config.graph, config.alpha)?;
        Ok(Game {
            config,
            gamma,
            workers: 1,
            centralities: OnceLock::new(),
            consensus: OnceLock::new(),
        })
    }

    /// Worker threads for centrality batches and exact enumeration.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn gamma(&self) -> &InfluenceMatrix {
        &self.gamma
    }

    pub fn players(&self) -> usize {
        self.config.players()
    }

    pub fn node_count(&self) -> usize {
        self.config.graph.node_count()
    }

    pub fn budget(&self, i: usize) -> usize {
        self.config.budgets[i]
    }

    pub fn centralities(&self) -> &CentralityTable {
        self.centralities.get_or_init(|| {
            diffusion_centralities(
                &self.gamma,
                self.config.horizon,
                BatchMode::Iterative,
                self.workers,
            )
        })
    }

    pub fn consensus_weights(&self) -> Result<&ConsensusWeights> {
        self.consensus
            .get_or_init(|| {
                eigenvector_weights(&self.gamma, DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// A profile is playable when it has one non-empty seed set per player,
    /// within budget, over valid node ids.
    pub fn check_profile(&self, s: &StrategyProfile) -> Result<()> {
        if s.players() != self.players() {
            return Err(Error::DimensionMismatch {
                expected: self.players(),
                found: s.players(),
            });
        }
        for i in 0..self.players() {
            self.check_strategy(i, s.strategy(i))?;
        }
        s.check_nodes(self.node_count())
    }

    /// Checks every seed set except player `i`'s, which may be anything.
    pub fn check_opponents(&self, i: usize, s: &StrategyProfile) -> Result<()> {
        if i >= self.players() {
            return Err(Error::InvalidParameter(format!(
                "player {i} out of range for {} players",
                self.players()
            )));
        }
        if s.players() != self.players() {
            return Err(Error::DimensionMismatch {
                expected: self.players(),
                found: s.players(),
            });
        }
        for j in (0..self.players()).filter(|&j| j != i) {
            self.check_strategy(j, s.strategy(j))?;
        }
        s.check_nodes(self.node_count())
    }

    fn check_strategy(&self, i: usize, s: &[usize]) -> Result<()> {
        if s.is_empty() {
            return Err(Error::InvalidStrategy {
                player: i,
                reason: "seed set is empty".into(),
            });
        }
        if s.len() > self.budget(i) {
            return Err(Error::InvalidStrategy {
                player: i,
                reason: format!("{} seeds exceed budget {}", s.len(), self.budget(i)),
            });
        }
        Ok(())
    }

    /// Payoffs by simulating `T` steps from the seeded initial opinions.
    pub fn utility(&self, s: &StrategyProfile) -> Result<PayoffVector> {
        self.check_profile(s)?;
        let x0 = initialize(&self.config.graph, s, self.config.epsilon)?;
        let xt = evolve(&x0, &self.gamma, self.config.horizon)?;
        let n = self.node_count();
        let mut payoffs = vec![0.0; self.players()];
        for v in 0..n {
            let row = xt.node(v);
            let total: f64 = row.iter().sum();
            for (p, x) in payoffs.iter_mut().zip(row) {
                *p += x / total;
            }
        }
        payoffs.iter_mut().for_each(|p| *p /= n as f64);
        Ok(PayoffVector { payoffs })
    }

    /// Payoffs in the consensus limit: `x_i = Σ_v c^v x^v_i(0)` and
    /// `π_i = x_i / Σ_j x_j`.
    pub fn consensus_utility(&self, s: &StrategyProfile) -> Result<PayoffVector> {
        self.check_profile(s)?;
        let weights = self.consensus_weights()?;
        let x0 = initialize(&self.config.graph, s, self.config.epsilon)?;
        let x = weights.consensus_opinion(&x0);
        let total: f64 = x.iter().sum();
        Ok(PayoffVector {
            payoffs: x.iter().map(|xi| xi / total).collect(),
        })
    }

    /// Payoffs from the cached diffusion centralities:
    /// `f^i_v = Σ_{u∈s_i} c^u_v / m_u(s) + ε Σ_{u seeded by nobody} c^u_v`,
    /// `π_i = (1/n) Σ_v f^i_v / Σ_j f^j_v`.
    pub fn utility_closed_form(&self, s: &StrategyProfile) -> Result<PayoffVector> {
        self.check_profile(s)?;
        let table = self.centralities();
        let n = self.node_count();
        let m = self.players();
        let eps = self.config.epsilon;
        let seeders = s.seeders(n);

        let mut unseeded = vec![0.0; n];
        for u in (0..n).filter(|&u| seeders[u].is_empty()) {
            for (acc, c) in unseeded.iter_mut().zip(table.source(u)) {
                *acc += c;
            }
        }
        let mut f = vec![vec![0.0; n]; m];
        for (i, fi) in f.iter_mut().enumerate() {
            for &u in s.strategy(i) {
                let share = 1.0 / seeders[u].len() as f64;
                for (acc, c) in fi.iter_mut().zip(table.source(u)) {
                    *acc += c * share;
                }
            }
            for (acc, e) in fi.iter_mut().zip(&unseeded) {
                *acc += eps * e;
            }
        }
        let mut payoffs = vec![0.0; m];
        for v in 0..n {
            let total: f64 = f.iter().map(|fi| fi[v]).sum();
            for (p, fi) in payoffs.iter_mut().zip(&f) {
                *p += fi[v] / total;
            }
        }
        payoffs.iter_mut().for_each(|p| *p /= n as f64);
        Ok(PayoffVector { payoffs })
    }

    /// Closed-form payoffs for `Transient`, consensus payoffs otherwise.
    pub fn payoffs(&self, model: PayoffModel, s: &StrategyProfile) -> Result<PayoffVector> {
        match model {
            PayoffModel::Transient => self.utility_closed_form(s),
            PayoffModel::Consensus => self.consensus_utility(s),
        }
    }

    /// `π_i(partial ∪ {v}, s_{-i}) − π_i(partial, s_{-i})` under the
    /// closed-form utility. Player `i`'s entry in `opponents` is ignored.
    pub fn marginal_gain(
        &self,
        i: usize,
        partial: &[usize],
        v: usize,
        opponents: &StrategyProfile,
    ) -> Result<f64> {
        if partial.contains(&v) {
            return Err(Error::InvalidStrategy {
                player: i,
                reason: format!("node {v} already in the partial seed set"),
            });
        }
        if partial.len() >= self.budget(i) {
            return Err(Error::InvalidStrategy {
                player: i,
                reason: "partial seed set already fills the budget".into(),
            });
        }
        let mut eval = ResponseEvaluator::new(self, PayoffModel::Transient, i, opponents)?;
        for &u in partial {
            eval.check_node(u)?;
            eval.insert(u);
        }
        eval.check_node(v)?;
        Ok(eval.value_with(v) - eval.value())
    }
}

/// Incremental evaluation of one player's payoff as their seed set grows,
/// with every other player's seeds held fixed.
///
/// Each source `u` contributes `s(u, v)` (its influence on target `v`) to the
/// payoff terms. With `k_u` opponents seeding `u`, adding `u` to the player's
/// set raises their own term by `s(u,v)/(k_u+1)`, minus the `ε s(u,v)` they
/// held while `u` was unseeded, and raises the all-player total by
/// `(1 − mε) s(u,v)` only if `u` was previously unseeded. Each query is
/// therefore `O(targets)`.
#[derive(Debug, Clone)]
pub struct ResponseEvaluator<'a> {
    shares: &'a [f64],
    targets: usize,
    epsilon: f64,
    players: usize,
    opponent_count: Vec<usize>,
    chosen: Vec<bool>,
    own: Vec<f64>,
    total: Vec<f64>,
}

impl<'a> ResponseEvaluator<'a> {
    pub fn new(
        game: &'a Game,
        model: PayoffModel,
        player: usize,
        opponents: &StrategyProfile,
    ) -> Result<ResponseEvaluator<'a>> {
        game.check_opponents(player, opponents)?;
        Self::new_partial(game, model, player, opponents)
    }

    /// Like [`ResponseEvaluator::new`] but lets opponents hold empty seed
    /// sets; only node ids and the player count are checked.
    pub fn new_partial(
        game: &'a Game,
        model: PayoffModel,
        player: usize,
        opponents: &StrategyProfile,
    ) -> Result<ResponseEvaluator<'a>> {
        if opponents.players() != game.players() || player >= game.players() {
            return Err(Error::DimensionMismatch {
                expected: game.players(),
                found: opponents.players(),
            });
        }
        opponents.check_nodes(game.node_count())?;
        let (shares, targets): (&[f64], usize) = match model {
            PayoffModel::Transient => {
                let table = game.centralities();
                (table.as_slice(), table.node_count())
            }
            PayoffModel::Consensus => (&game.consensus_weights()?.weights, 1),
        };
        Ok(Self::from_shares(
            shares,
            targets,
            game.players(),
            game.config().epsilon,
            player,
            opponents,
        ))
    }

    fn from_shares(
        shares: &'a [f64],
        targets: usize,
        players: usize,
        epsilon: f64,
        player: usize,
        opponents: &StrategyProfile,
    ) -> ResponseEvaluator<'a> {
        let n = shares.len() / targets;
        let mut opponent_count = vec![0; n];
        for (j, s) in opponents.strategies().iter().enumerate() {
            if j != player {
                for &u in s {
                    opponent_count[u] += 1;
                }
            }
        }
        let mut own = vec![0.0; targets];
        let mut total = vec![0.0; targets];
        for u in 0..n {
            let row = &shares[u * targets..(u + 1) * targets];
            if opponent_count[u] == 0 {
                for ((o, t), s) in own.iter_mut().zip(total.iter_mut()).zip(row) {
                    *o += epsilon * s;
                    *t += players as f64 * epsilon * s;
                }
            } else {
                for (t, s) in total.iter_mut().zip(row) {
                    *t += s;
                }
            }
        }
        ResponseEvaluator {
            shares,
            targets,
            epsilon,
            players,
            opponent_count,
            chosen: vec![false; n],
            own,
            total,
        }
    }

    pub fn node_count(&self) -> usize {
        self.chosen.len()
    }

    fn check_node(&self, u: usize) -> Result<()> {
        if u >= self.node_count() {
            Err(Error::NodeOutOfRange {
                node: u,
                node_count: self.node_count(),
            })
        } else {
            Ok(())
        }
    }

    pub fn is_chosen(&self, u: usize) -> bool {
        self.chosen[u]
    }

    /// Payoff of the current seed set.
    pub fn value(&self) -> f64 {
        let sum: f64 = self.own.iter().zip(&self.total).map(|(o, t)| o / t).sum();
        sum / self.targets as f64
    }

    fn deltas(&self, u: usize) -> (f64, f64) {
        let k = self.opponent_count[u];
        if k == 0 {
            (1.0 - self.epsilon, 1.0 - self.players as f64 * self.epsilon)
        } else {
            (1.0 / (k + 1) as f64, 0.0)
        }
    }

    /// Payoff after adding `u` to the current set, without mutating.
    pub fn value_with(&self, u: usize) -> f64 {
        debug_assert!(!self.chosen[u]);
        let (own_scale, total_scale) = self.deltas(u);
        let row = &self.shares[u * self.targets..(u + 1) * self.targets];
        let sum: f64 = self
            .own
            .iter()
            .zip(&self.total)
            .zip(row)
            .map(|((o, t), s)| (o + own_scale * s) / (t + total_scale * s))
            .sum();
        sum / self.targets as f64
    }

    pub fn insert(&mut self, u: usize) {
        debug_assert!(!self.chosen[u]);
        let (own_scale, total_scale) = self.deltas(u);
        let row = &self.shares[u * self.targets..(u + 1) * self.targets];
        for ((o, t), s) in self.own.iter_mut().zip(self.total.iter_mut()).zip(row) {
            *o += own_scale * s;
            *t += total_scale * s;
        }
        self.chosen[u] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_graph;

    fn profile(sets: &[&[usize]]) -> StrategyProfile {
        StrategyProfile::new(sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    fn two_cycle_game(horizon: usize) -> Game {
        Game::new(GameConfig::new(
            Graph::cycle(2).unwrap(),
            vec![1, 1],
            horizon,
        ))
        .unwrap()
    }

    #[test]
    fn profile_canonicalises_and_rejects_duplicates() {
        let s = profile(&[&[3, 1], &[2]]);
        assert_eq!(s.strategy(0), &[1, 3]);
        assert!(matches!(
            StrategyProfile::new(vec![vec![1, 1]]).unwrap_err(),
            Error::InvalidStrategy { player: 0, .. }
        ));
    }

    #[test]
    fn profile_text_round_trip() {
        let s = profile(&[&[0, 4], &[2], &[7, 1]]);
        let text = s.to_string();
        assert_eq!(
            text,
            "player 0 seeds 0 4\nplayer 1 seeds 2\nplayer 2 seeds 1 7\n"
        );
        assert_eq!(StrategyProfile::parse(&text).unwrap(), s);
    }

    #[test]
    fn profile_parse_missing_players_and_errors() {
        let s = StrategyProfile::parse("# opponents\nplayer 1 seeds 3\n").unwrap();
        assert_eq!(s.players(), 2);
        assert!(s.strategy(0).is_empty());
        let s = StrategyProfile::load("player 0 seeds 1\n".as_bytes(), 3).unwrap();
        assert_eq!(s.players(), 3);
        assert!(matches!(
            StrategyProfile::parse("player 0 seeds 1\nplayer 0 seeds 2\n").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
        assert!(matches!(
            StrategyProfile::parse("player x seeds 1\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            StrategyProfile::parse("player 0 nodes 1\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn config_validation() {
        let g = Graph::cycle(4).unwrap();
        assert!(Game::new(GameConfig::new(g.clone(), vec![1], 1)).is_err());
        assert!(Game::new(GameConfig::new(g.clone(), vec![1, 0], 1)).is_err());
        assert!(Game::new(GameConfig::new(g.clone(), vec![1, 1], 0)).is_err());
        assert!(Game::new(GameConfig::new(g.clone(), vec![1, 1], 1).with_alpha(1.5)).is_err());
        assert!(Game::new(GameConfig::new(g.clone(), vec![1, 1], 1).with_epsilon(0.25)).is_err());
        assert!(Game::new(GameConfig::new(g, vec![5, 5], 1)).is_ok());
    }

    #[test]
    fn empty_and_over_budget_strategies_are_rejected() {
        let game = two_cycle_game(3);
        assert!(matches!(
            game.utility(&profile(&[&[0], &[]])).unwrap_err(),
            Error::InvalidStrategy { player: 1, .. }
        ));
        assert!(matches!(
            game.utility(&profile(&[&[0, 1], &[1]])).unwrap_err(),
            Error::InvalidStrategy { player: 0, .. }
        ));
        assert!(game.utility(&profile(&[&[0]])).is_err());
    }

    #[test]
    fn symmetric_profiles_split_evenly() {
        for t in [1, 2, 5] {
            let game = two_cycle_game(t);
            for s in [profile(&[&[0], &[1]]), profile(&[&[1], &[1]])] {
                for p in [
                    game.utility(&s).unwrap(),
                    game.utility_closed_form(&s).unwrap(),
                    game.consensus_utility(&s).unwrap(),
                ] {
                    assert!((p[0] - 0.5).abs() < 1e-15, "{p:?}");
                    assert!((p[1] - 0.5).abs() < 1e-15, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_simulation() {
        let g = random_graph(12, 3, 17).unwrap();
        let game = Game::new(GameConfig::new(g, vec![3, 2, 2], 4)).unwrap();
        let s = profile(&[&[0, 5, 9], &[5, 2], &[11, 0]]);
        let a = game.utility(&s).unwrap();
        let b = game.utility_closed_form(&s).unwrap();
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
        assert!((a.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_prefers_the_heaviest_node() {
        let g = random_graph(10, 2, 8).unwrap();
        let game = Game::new(GameConfig::new(g, vec![1, 1], 1)).unwrap();
        let ranking = game.consensus_weights().unwrap().ranking();
        let best = ranking[0];
        for &other in &ranking[1..] {
            let p = game
                .consensus_utility(&profile(&[&[best], &[other]]))
                .unwrap();
            assert!(p[0] > p[1]);
        }
    }

    #[test]
    fn evaluator_matches_closed_form() {
        let g = random_graph(11, 3, 23).unwrap();
        let game = Game::new(GameConfig::new(g, vec![3, 2], 3)).unwrap();
        let opp = profile(&[&[], &[4, 6]]);
        let mut eval = ResponseEvaluator::new(&game, PayoffModel::Transient, 0, &opp).unwrap();
        let mut chosen = Vec::new();
        for u in [6, 1, 9] {
            let predicted = eval.value_with(u);
            eval.insert(u);
            chosen.push(u);
            let s = opp.with_strategy(0, chosen.clone()).unwrap();
            let direct = game.utility_closed_form(&s).unwrap()[0];
            assert!((predicted - direct).abs() < 1e-14);
            assert!((eval.value() - direct).abs() < 1e-14);
        }

        let mut eval = ResponseEvaluator::new(&game, PayoffModel::Consensus, 0, &opp).unwrap();
        eval.insert(4);
        eval.insert(2);
        let s = opp.with_strategy(0, vec![2, 4]).unwrap();
        assert!((eval.value() - game.consensus_utility(&s).unwrap()[0]).abs() < 1e-14);
    }

    #[test]
    fn marginal_gain_is_a_payoff_difference() {
        let g = random_graph(9, 2, 31).unwrap();
        let game = Game::new(GameConfig::new(g, vec![3, 1], 2)).unwrap();
        let opp = profile(&[&[], &[3]]);
        let gain = game.marginal_gain(0, &[1, 5], 3, &opp).unwrap();
        let with = game
            .utility_closed_form(&opp.with_strategy(0, vec![1, 3, 5]).unwrap())
            .unwrap()[0];
        let without = game
            .utility_closed_form(&opp.with_strategy(0, vec![1, 5]).unwrap())
            .unwrap()[0];
        assert!((gain - (with - without)).abs() < 1e-14);
        assert!(gain >= 0.0);

        assert!(game.marginal_gain(0, &[1, 5], 5, &opp).is_err());
        assert!(game.marginal_gain(1, &[2], 4, &opp).is_err());
        assert!(game.marginal_gain(0, &[], 40, &opp).is_err());
    }

    #[test]
    fn improvement_threshold() {
        assert!(!improves(0.5 + 1e-13, 0.5));
        assert!(improves(0.5 + 1e-11, 0.5));
        assert!(!improves(0.5, 0.5));
    }
}
