//! Best responses and pure Nash equilibria.
//!
//! Finding an exact best response is NP-hard, so [`exact_best_response`]
//! enumerates every full-budget seed set and refuses instances above a
//! configurable cap. Because the utility is monotone and submodular in a
//! player's own seed set, [`greedy_best_response`] reaches at least a
//! `1 − 1/e` fraction of the optimum with `O(n·b)` evaluations.
//!
//! Enumeration only visits seed sets of exactly `min(b_i, n)` nodes: with a
//! monotone utility some maximiser always has full size.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{improves, Game, PayoffModel, ResponseEvaluator, StrategyProfile};

pub const DEFAULT_ENUMERATION_CAP: u128 = 5_000_000;
pub const DEFAULT_PROFILE_CAP: u128 = 10_000_000;

/// The `1 − 1/e` greedy approximation factor.
pub const GREEDY_GUARANTEE: f64 = 1.0 - 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub model: PayoffModel,
    /// Largest number of seed sets a single exact best response may visit.
    pub enumeration_cap: u128,
    /// Largest number of profiles [`exhaustive_nash_check`] may visit.
    pub profile_cap: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            model: PayoffModel::Transient,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            profile_cap: DEFAULT_PROFILE_CAP,
        }
    }
}

impl SolverOptions {
    pub fn consensus() -> Self {
        SolverOptions {
            model: PayoffModel::Consensus,
            ..Self::default()
        }
    }

    pub fn with_model(mut self, model: PayoffModel) -> Self {
        self.model = model;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub strategy: Vec<usize>,
    pub payoff: f64,
    /// Utility evaluations performed.
    pub evaluations: u64,
    /// Gain of each greedy pick, in pick order. Empty for exact search.
    pub marginal_gains: Vec<f64>,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

fn response_size(game: &Game, i: usize) -> usize {
    game.budget(i).min(game.node_count())
}

/// Best payoff found so far, keeping the earliest candidate unless a later
/// one clears the improvement threshold.
#[derive(Debug, Clone)]
struct Incumbent {
    value: f64,
    set: Vec<usize>,
}

fn consider(best: &mut Option<Incumbent>, value: f64, set: &[usize]) {
    let replace = match best {
        None => true,
        Some(b) => improves(value, b.value),
    };
    if replace {
        *best = Some(Incumbent {
            value,
            set: set.to_vec(),
        });
    }
}

fn search(
    eval: &ResponseEvaluator<'_>,
    start: usize,
    remaining: usize,
    current: &mut Vec<usize>,
    best: &mut Option<Incumbent>,
) {
    let n = eval.node_count();
    if remaining == 1 {
        for u in start..n {
            current.push(u);
            consider(best, eval.value_with(u), current);
            current.pop();
        }
        return;
    }
    for u in start..=n - remaining {
        let mut next = eval.clone();
        next.insert(u);
        current.push(u);
        search(&next, u + 1, remaining - 1, current, best);
        current.pop();
    }
}

/// Exhaustive search over size-`k` sets; returns the lexicographically
/// first maximiser and its evaluator value. Splits work by first element
/// across the game's workers and reduces in that order.
fn enumerate_best(
    game: &Game,
    eval: &ResponseEvaluator<'_>,
    k: usize,
    cap: u128,
) -> Result<(Vec<usize>, f64, u64)> {
    let n = eval.node_count();
    let required = binomial(n, k);
    if required > cap {
        return Err(Error::EnumerationCap { required, cap });
    }
    let branch = |first: usize| {
        let mut best = None;
        let mut current = vec![first];
        if k == 1 {
            consider(&mut best, eval.value_with(first), &current);
        } else {
            let mut next = eval.clone();
            next.insert(first);
            search(&next, first + 1, k - 1, &mut current, &mut best);
        }
        best
    };
    let firsts = 0..=n - k;
    let partial: Vec<Option<Incumbent>> = if game.workers() > 1 {
        crate::run_with_workers(game.workers(), || {
            firsts.into_par_iter().map(branch).collect()
        })
    } else {
        firsts.map(branch).collect()
    };
    let mut best = None;
    for cand in partial.into_iter().flatten() {
        consider(&mut best, cand.value, &cand.set);
    }
    let best = best.expect("at least one candidate set");
    Ok((best.set, best.value, required as u64))
}

/// Exact best response of player `i` by enumerating all `C(n, b_i)` seed
/// sets. Player `i`'s entry in `opponents` is ignored. Ties go to the
/// lexicographically smallest set.
pub fn exact_best_response(
    game: &Game,
    i: usize,
    opponents: &StrategyProfile,
    opts: &SolverOptions,
) -> Result<BestResponse> {
    let eval = ResponseEvaluator::new(game, opts.model, i, opponents)?;
    let (strategy, _, evaluations) =
        enumerate_best(game, &eval, response_size(game, i), opts.enumeration_cap)?;
    let profile = opponents.with_strategy(i, strategy.clone())?;
    let payoff = game.payoffs(opts.model, &profile)?[i];
    Ok(BestResponse {
        strategy,
        payoff,
        evaluations,
        marginal_gains: Vec::new(),
    })
}

fn greedy_picks(eval: &mut ResponseEvaluator<'_>, k: usize) -> (Vec<usize>, Vec<f64>, u64) {
    let n = eval.node_count();
    let mut picks = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    let mut evaluations = 0;
    for _ in 0..k {
        let base = eval.value();
        let mut best: Option<(usize, f64)> = None;
        for u in (0..n).filter(|&u| !eval.is_chosen(u)) {
            evaluations += 1;
            let value = eval.value_with(u);
            match best {
                Some((_, b)) if !improves(value, b) => {}
                _ => best = Some((u, value)),
            }
        }
        let (u, value) = best.expect("budget clipped to node count");
        eval.insert(u);
        picks.push(u);
        gains.push(value - base);
    }
    picks.sort_unstable();
    (picks, gains, evaluations)
}

/// Greedy best response: starting from no seeds, repeatedly add the node
/// with the largest marginal gain (lowest id on ties) until the budget is
/// spent.
pub fn greedy_best_response(
    game: &Game,
    i: usize,
    opponents: &StrategyProfile,
    opts: &SolverOptions,
) -> Result<BestResponse> {
    let mut eval = ResponseEvaluator::new(game, opts.model, i, opponents)?;
    let (strategy, marginal_gains, evaluations) = greedy_picks(&mut eval, response_size(game, i));
    let profile = opponents.with_strategy(i, strategy.clone())?;
    let payoff = game.payoffs(opts.model, &profile)?[i];
    Ok(BestResponse {
        strategy,
        payoff,
        evaluations,
        marginal_gains,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlayerOrder {
    #[default]
    Ascending,
    /// A fresh random permutation of the players each round.
    Shuffled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Equilibrium,
    CycleDetected,
    MaxRoundsExhausted,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Equilibrium => "equilibrium",
            OutcomeKind::CycleDetected => "cycle_detected",
            OutcomeKind::MaxRoundsExhausted => "max_rounds_exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub player: usize,
    pub old: Vec<usize>,
    pub new: Vec<usize>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashOutcome {
    pub kind: OutcomeKind,
    pub profile: StrategyProfile,
    pub trace: Vec<TraceStep>,
    /// Rounds started, including a partial final round.
    pub rounds: usize,
    /// True when responses were exact, so an `Equilibrium` verdict means no
    /// deviation of any size improves any player.
    pub certified: bool,
}

/// Round-robin best-response dynamics from `initial`.
///
/// A player moves only if their best response beats their current payoff by
/// more than the improvement threshold. The run stops with
/// [`OutcomeKind::Equilibrium`] once `m` consecutive players decline to
/// move, and with [`OutcomeKind::CycleDetected`] when a profile recurs with
/// the same player next to move (the dynamics are deterministic, so they
/// would repeat forever). With [`PlayerOrder::Shuffled`] a recurring
/// profile alone triggers the cycle verdict.
pub fn best_response_dynamics(
    game: &Game,
    initial: &StrategyProfile,
    max_rounds: usize,
    response: ResponseKind,
    order: PlayerOrder,
    opts: &SolverOptions,
) -> Result<NashOutcome> {
    game.check_profile(initial)?;
    let m = game.players();
    let mut profile = initial.clone();
    let mut trace = Vec::new();
    let mut quiet = 0;
    let mut rng = match order {
        PlayerOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        PlayerOrder::Ascending => None,
    };
    let state_key = |p: &StrategyProfile, next: usize| match order {
        PlayerOrder::Ascending => (p.clone(), next),
        PlayerOrder::Shuffled(_) => (p.clone(), 0),
    };
    let mut visited = HashSet::new();
    visited.insert(state_key(&profile, 0));

    let finish = |kind, profile, trace, rounds| NashOutcome {
        kind,
        profile,
        trace,
        rounds,
        certified: response == ResponseKind::Exact,
    };

    for round in 0..max_rounds {
        let mut players: Vec<usize> = (0..m).collect();
        if let Some(rng) = rng.as_mut() {
            players.shuffle(rng);
        }
        for (pos, &i) in players.iter().enumerate() {
            let current = game.payoffs(opts.model, &profile)?[i];
            let br = match response {
                ResponseKind::Exact => exact_best_response(game, i, &profile, opts)?,
                ResponseKind::Greedy => greedy_best_response(game, i, &profile, opts)?,
            };
            if improves(br.payoff, current) {
                trace.push(TraceStep {
                    player: i,
                    old: profile.strategy(i).to_vec(),
                    new: br.strategy.clone(),
                    delta: br.payoff - current,
                });
                profile = profile.with_strategy(i, br.strategy)?;
                quiet = 0;
                let next = players.get(pos + 1).copied().unwrap_or(0);
                if !visited.insert(state_key(&profile, next)) {
                    return Ok(finish(
                        OutcomeKind::CycleDetected,
                        profile,
                        trace,
                        round + 1,
                    ));
                }
            } else {
                quiet += 1;
                if quiet >= m {
                    return Ok(finish(OutcomeKind::Equilibrium, profile, trace, round + 1));
                }
            }
        }
    }
    Ok(finish(
        OutcomeKind::MaxRoundsExhausted,
        profile,
        trace,
        max_rounds,
    ))
}

/// All size-`k` subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        let Some(pos) = (0..k).rev().find(|&p| current[p] < n - k + p) else {
            return out;
        };
        current[pos] += 1;
        for q in pos + 1..k {
            current[q] = current[q - 1] + 1;
        }
    }
}

/// Number of profiles [`exhaustive_nash_check`] would visit.
pub fn profile_count(game: &Game) -> u128 {
    (0..game.players())
        .map(|i| binomial(game.node_count(), response_size(game, i)))
        .fold(1u128, |acc, c| acc.saturating_mul(c))
}

/// True when no player can improve on `profile` by any unilateral
/// deviation. Each player's best deviation value is memoised in `cache`
/// keyed by the opposing seed sets.
fn is_equilibrium(
    game: &Game,
    profile: &StrategyProfile,
    opts: &SolverOptions,
    cache: &mut HashMap<(usize, StrategyProfile), f64>,
) -> Result<bool> {
    let payoffs = game.payoffs(opts.model, profile)?;
    for i in 0..game.players() {
        let key = (i, profile.with_strategy(i, Vec::new())?);
        let best = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = exact_best_response(game, i, profile, opts)?.payoff;
                cache.insert(key, v);
                v
            }
        };
        if improves(best, payoffs[i]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every pure Nash equilibrium over full-budget profiles, in lexicographic
/// profile order. Deviations range over all `C(n, b_i)` sets of each player.
pub fn exhaustive_nash_check(game: &Game, opts: &SolverOptions) -> Result<Vec<StrategyProfile>> {
    let required = profile_count(game);
    if required > opts.profile_cap {
        return Err(Error::EnumerationCap {
            required,
            cap: opts.profile_cap,
        });
    }
    let n = game.node_count();
    let choices: Vec<Vec<Vec<usize>>> = (0..game.players())
        .map(|i| combinations(n, response_size(game, i)))
        .collect();
    let mut index = vec![0usize; game.players()];
    let mut cache = HashMap::new();
    let mut equilibria = Vec::new();
    loop {
        let profile = StrategyProfile::new(
            index
                .iter()
                .zip(&choices)
                .map(|(&k, c)| c[k].clone())
                .collect(),
        )?;
        if is_equilibrium(game, &profile, opts, &mut cache)? {
            equilibria.push(profile);
        }
        // odometer, last player fastest
        let Some(p) = (0..index.len())
            .rev()
            .find(|&p| index[p] + 1 < choices[p].len())
        else {
            return Ok(equilibria);
        };
        index[p] += 1;
        index[p + 1..].iter_mut().for_each(|q| *q = 0);
    }
}

/// Whether `profile` is an equilibrium, checking every deviation of every
/// player exactly.
pub fn verify_equilibrium(
    game: &Game,
    profile: &StrategyProfile,
    opts: &SolverOptions,
) -> Result<bool> {
    game.check_profile(profile)?;
    is_equilibrium(game, profile, opts, &mut HashMap::new())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEquilibrium {
    pub profile: StrategyProfile,
    pub payoffs: Vec<f64>,
    /// Whether every player's deviations were checked exhaustively.
    pub verified: bool,
}

/// Builds an equilibrium of the consensus-limit game.
///
/// Players are taken in order of non-increasing budget (ties by index).
/// The first takes the nodes with the largest consensus weights (ties by
/// id); each later player takes an exact best response to the players
/// placed before it, with not-yet-placed players holding no seeds. When
/// every player's deviation space fits the enumeration cap, the profile is
/// checked exhaustively and a failed check is an error.
pub fn consensus_equilibrium(game: &Game, opts: &SolverOptions) -> Result<ConsensusEquilibrium> {
    let opts = opts.with_model(PayoffModel::Consensus);
    let m = game.players();
    let n = game.node_count();
    let ranking = game.consensus_weights()?.ranking();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(game.budget(i)));

    let mut profile = StrategyProfile::empty(m);
    let leader = order[0];
    profile = profile.with_strategy(leader, ranking[..response_size(game, leader)].to_vec())?;
    for &i in &order[1..] {
        let eval = ResponseEvaluator::new_partial(game, PayoffModel::Consensus, i, &profile)?;
        let (strategy, _, _) =
            enumerate_best(game, &eval, response_size(game, i), opts.enumeration_cap)?;
        profile = profile.with_strategy(i, strategy)?;
    }

    let payoffs = game.consensus_utility(&profile)?.payoffs;
    let checkable = (0..m).all(|i| binomial(n, response_size(game, i)) <= opts.enumeration_cap);
    if checkable && !verify_equilibrium(game, &profile, &opts)? {
        return Err(Error::VerificationFailed(format!(
            "constructed profile is not an equilibrium:\n{profile}"
        )));
    }
    Ok(ConsensusEquilibrium {
        profile,
        payoffs,
        verified: checkable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameConfig;
    use crate::graph::{build_counterexample, random_graph, Graph};

    fn profile(sets: &[&[usize]]) -> StrategyProfile {
        StrategyProfile::new(sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(15, 1), 15);
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(4, 2)[0], vec![0, 1]);
        assert_eq!(combinations(4, 2)[5], vec![2, 3]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn two_cycle_best_response_avoids_sharing() {
        let game = Game::new(GameConfig::new(Graph::cycle(2).unwrap(), vec![1, 1], 1)).unwrap();
        let opp = profile(&[&[], &[1]]);
        let opts = SolverOptions::default();
        // Enumerated by hand: both options give exactly 1/2 (the shared
        // profile has identical opinion columns, the disjoint one is
        // symmetric under swapping the nodes), so the tie goes to {0}.
        let shared = game.utility(&profile(&[&[1], &[1]])).unwrap()[0];
        let apart = game.utility(&profile(&[&[0], &[1]])).unwrap()[0];
        assert_eq!(shared, 0.5);
        assert!((apart - 0.5).abs() < 1e-15);
        let br = exact_best_response(&game, 0, &opp, &opts).unwrap();
        assert_eq!(br.evaluations, 2);
        assert_eq!(br.strategy, vec![0]);
    }

    #[test]
    fn full_budget_overlap_splits_evenly() {
        let g = Graph::complete(4).unwrap();
        let game = Game::new(GameConfig::new(g, vec![4, 4], 2)).unwrap();
        let opp = profile(&[&[], &[0, 1, 2, 3]]);
        let br = exact_best_response(&game, 0, &opp, &SolverOptions::default()).unwrap();
        assert_eq!(br.strategy, vec![0, 1, 2, 3]);
        assert!((br.payoff - 0.5).abs() < 1e-15);
        assert_eq!(br.evaluations, 1);
    }

    #[test]
    fn greedy_single_pick_equals_exact() {
        let g = random_graph(13, 3, 44).unwrap();
        let game = Game::new(GameConfig::new(g, vec![1, 3], 3)).unwrap();
        let opp = profile(&[&[], &[2, 7, 8]]);
        let opts = SolverOptions::default();
        let e = exact_best_response(&game, 0, &opp, &opts).unwrap();
        let g = greedy_best_response(&game, 0, &opp, &opts).unwrap();
        assert_eq!(e.strategy, g.strategy);
        assert_eq!(e.payoff, g.payoff);
    }

    #[test]
    fn greedy_evaluation_count() {
        let g = random_graph(10, 2, 3).unwrap();
        let game = Game::new(GameConfig::new(g, vec![3, 1], 2)).unwrap();
        let opp = profile(&[&[], &[4]]);
        let br = greedy_best_response(&game, 0, &opp, &SolverOptions::default()).unwrap();
        assert_eq!(br.evaluations, 10 + 9 + 8);
        assert_eq!(br.strategy.len(), 3);
        assert_eq!(br.marginal_gains.len(), 3);
    }

    #[test]
    fn exact_respects_cap() {
        let g = random_graph(20, 2, 3).unwrap();
        let game = Game::new(GameConfig::new(g, vec![5, 1], 2)).unwrap();
        let opts = SolverOptions {
            enumeration_cap: 1000,
            ..SolverOptions::default()
        };
        let err = exact_best_response(&game, 0, &profile(&[&[], &[0]]), &opts).unwrap_err();
        assert_eq!(
            err,
            Error::EnumerationCap {
                required: 15504,
                cap: 1000
            }
        );
    }

    #[test]
    fn parallel_exact_matches_sequential() {
        let g = random_graph(14, 3, 12).unwrap();
        let cfg = GameConfig::new(g, vec![3, 2], 3);
        let seq = Game::new(cfg.clone()).unwrap();
        let par = Game::new(cfg).unwrap().with_workers(4);
        let opp = profile(&[&[], &[1, 9]]);
        let opts = SolverOptions::default();
        assert_eq!(
            exact_best_response(&seq, 0, &opp, &opts).unwrap(),
            exact_best_response(&par, 0, &opp, &opts).unwrap()
        );
    }

    #[test]
    fn counterexample_has_no_equilibrium() {
        let g = build_counterexample(2, 1).unwrap();
        let game = Game::new(
            GameConfig::new(g, vec![1, 1], 1)
                .with_alpha(0.5)
                .with_epsilon(1e-6),
        )
        .unwrap();
        let opts = SolverOptions::default();
        assert_eq!(profile_count(&game), 225);
        assert!(exhaustive_nash_check(&game, &opts).unwrap().is_empty());
        let out = best_response_dynamics(
            &game,
            &profile(&[&[0], &[1]]),
            100,
            ResponseKind::Exact,
            PlayerOrder::Ascending,
            &opts,
        )
        .unwrap();
        assert_eq!(out.kind, OutcomeKind::CycleDetected);
    }

    #[test]
    fn dynamics_from_equilibrium_is_quiet() {
        let g = random_graph(8, 2, 6).unwrap();
        let game = Game::new(GameConfig::new(g, vec![1, 1], 1)).unwrap();
        let opts = SolverOptions::consensus();
        let eq = consensus_equilibrium(&game, &opts).unwrap();
        assert!(eq.verified);
        let out = best_response_dynamics(
            &game,
            &eq.profile,
            10,
            ResponseKind::Exact,
            PlayerOrder::Ascending,
            &opts,
        )
        .unwrap();
        assert_eq!(out.kind, OutcomeKind::Equilibrium);
        assert_eq!(out.profile, eq.profile);
        assert!(out.trace.is_empty());
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn shuffled_order_is_reproducible() {
        let g = random_graph(9, 3, 2).unwrap();
        let game = Game::new(GameConfig::new(g, vec![2, 1, 1], 2)).unwrap();
        let start = profile(&[&[0, 1], &[0], &[1]]);
        let run = |seed| {
            best_response_dynamics(
                &game,
                &start,
                20,
                ResponseKind::Greedy,
                PlayerOrder::Shuffled(seed),
                &SolverOptions::default(),
            )
            .unwrap()
        };
        assert_eq!(run(5), run(5));
    }
}
