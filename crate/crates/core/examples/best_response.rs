//! Exact and greedy best responses to a fixed opponent.

use nig::{
    exact_best_response, greedy_best_response, random_graph, Game, GameConfig, SolverOptions,
    StrategyProfile,
};

fn main() -> nig::Result<()> {
    let g = random_graph(15, 3, 11)?;
    let game = Game::new(GameConfig::new(g, vec![3, 3], 4))?;
    let opponents = StrategyProfile::new(vec![vec![], vec![1, 6, 9]])?;
    let opts = SolverOptions::default();

    let exact = exact_best_response(&game, 0, &opponents, &opts)?;
    let greedy = greedy_best_response(&game, 0, &opponents, &opts)?;
    println!(
        "exact  {:?} payoff {:.6} ({} evaluations)",
        exact.strategy, exact.payoff, exact.evaluations
    );
    println!(
        "greedy {:?} payoff {:.6} ({} evaluations)",
        greedy.strategy, greedy.payoff, greedy.evaluations
    );
    println!("marginal gains: {:.6?}", greedy.marginal_gains);
    println!("ratio: {:.6}", greedy.payoff / exact.payoff);
    Ok(())
}
