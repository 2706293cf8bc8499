//! The petal graph with two players and one seed each has no pure
//! equilibrium at T = 1; best-response dynamics cycle forever.

use nig::solver::profile_count;
use nig::{
    best_response_dynamics, build_counterexample, exhaustive_nash_check, Game, GameConfig,
    PlayerOrder, ResponseKind, SolverOptions, StrategyProfile,
};

fn main() -> nig::Result<()> {
    let g = build_counterexample(2, 1)?;
    let game = Game::new(GameConfig::new(g, vec![1, 1], 1).with_alpha(0.5))?;
    let opts = SolverOptions::default();

    let eqs = exhaustive_nash_check(&game, &opts)?;
    println!(
        "{} profiles checked, {} equilibria",
        profile_count(&game),
        eqs.len()
    );

    let start = StrategyProfile::new(vec![vec![0], vec![0]])?;
    let out = best_response_dynamics(
        &game,
        &start,
        100,
        ResponseKind::Exact,
        PlayerOrder::Ascending,
        &opts,
    )?;
    println!(
        "dynamics: {} after {} rounds",
        out.kind.as_str(),
        out.rounds
    );
    for step in &out.trace {
        println!(
            "  player {} {:?} -> {:?} (+{:.3e})",
            step.player, step.old, step.new, step.delta
        );
    }
    Ok(())
}
