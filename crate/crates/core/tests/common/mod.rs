//! Test-only oracles, independent of the closed-form and incremental
//! evaluation paths in the library.
#![allow(dead_code, clippy::needless_range_loop)]

use nig::{random_graph, Game, GameConfig, Graph, StrategyProfile};
use rand::seq::SliceRandom;
use rand::Rng;

/// Solves `(Γᵀ − I) c = 0` with `Σ c = 1` by Gaussian elimination with
/// partial pivoting on the dense matrix.
pub fn stationary_by_linear_solve(gamma_dense: &[f64], n: usize) -> Vec<f64> {
    // row r of the system: Σ_v (γ[v][r] − [v = r]) c_v = 0, last row replaced by Σ c = 1
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, row) in a.iter_mut().enumerate().take(n - 1) {
        for v in 0..n {
            row[v] = gamma_dense[v * n + r] - if v == r { 1.0 } else { 0.0 };
        }
    }
    for v in 0..n {
        a[n - 1][v] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for k in col..=n {
            a[col][k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    (0..n).map(|r| a[r][n]).collect()
}

/// Maximum of player `i`'s simulated utility over every non-empty seed set
/// of at most `b_i` nodes (all sizes, not only full budget).
pub fn brute_force_best_value(game: &Game, i: usize, opponents: &StrategyProfile) -> f64 {
    let n = game.node_count();
    let b = game.budget(i);
    let mut best = f64::NEG_INFINITY;
    for mask in 1u64..(1u64 << n) {
        if mask.count_ones() as usize > b {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let s = opponents.with_strategy(i, set).unwrap();
        best = best.max(game.utility(&s).unwrap()[i]);
    }
    best
}

pub fn random_subset<R: Rng>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    nodes.truncate(size);
    nodes.sort_unstable();
    nodes
}

pub fn random_connected_graph<R: Rng>(rng: &mut R, min_n: usize, max_n: usize) -> Graph {
    let n = rng.gen_range(min_n..=max_n);
    let degree = rng.gen_range(1..=(n - 1).min(4));
    random_graph(n, degree, rng.gen()).unwrap()
}

/// A random game with a random playable profile.
pub struct Instance {
    pub game: Game,
    pub profile: StrategyProfile,
}

pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_n: usize,
    players: usize,
    max_horizon: usize,
    max_budget: usize,
) -> Instance {
    let g = random_connected_graph(rng, 2, max_n);
    let n = g.node_count();
    let budgets: Vec<usize> = (0..players)
        .map(|_| rng.gen_range(1..=max_budget.min(n)))
        .collect();
    let strategies = budgets
        .iter()
        .map(|&b| {
            let size = rng.gen_range(1..=b);
            random_subset(rng, n, size)
        })
        .collect();
    let eps_exp: f64 = rng.gen_range(-8.0..-2.0);
    let cfg = GameConfig::new(g, budgets, rng.gen_range(1..=max_horizon))
        .with_alpha(rng.gen_range(0.1..0.9))
        .with_epsilon(10f64.powf(eps_exp));
    Instance {
        game: Game::new(cfg).unwrap(),
        profile: StrategyProfile::new(strategies).unwrap(),
    }
}
