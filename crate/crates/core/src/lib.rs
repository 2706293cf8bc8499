//! The network influence game: players seed opinions into a weighted
//! digraph, DeGroot-style averaging spreads them for `T` steps, and each
//! player is paid the population's average relative opinion toward them.
//!
//! * [`graph`]: weighted digraphs, the edge-list format, generators.
//! * [`dynamics`]: the propagator `Γ`, opinion evolution, diffusion
//!   centrality and consensus weights.
//! * [`game`]: strategy profiles and the three utility evaluations.
//! * [`solver`]: exact and greedy best responses, best-response dynamics,
//!   exhaustive equilibrium search, the consensus-regime construction.
//! * [`cli`] and [`report`]: the command layer behind the `nig` binary.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod graph;
pub mod report;
pub mod solver;

pub use dynamics::{
    consensus_reached, diffusion_centralities, diffusion_centrality, eigenvector_weights, evolve,
    influence_matrix, initialize, step, BatchMode, CentralityTable, ConsensusWeights,
    InfluenceMatrix, InfluenceVector, OpinionState,
};
pub use error::{Error, Result};
pub use game::{Game, GameConfig, PayoffModel, PayoffVector, StrategyProfile};
pub use graph::{
    build_counterexample, load_graph, parse_graph, random_graph, Graph, ValidationReport,
};
pub use solver::{
    best_response_dynamics, consensus_equilibrium, exact_best_response, exhaustive_nash_check,
    greedy_best_response, BestResponse, NashOutcome, OutcomeKind, PlayerOrder, ResponseKind,
    SolverOptions,
};

/// Environment variable read by the CLI for the default worker count.
pub const WORKERS_ENV: &str = "NIG_WORKERS";

pub(crate) fn run_with_workers<T, F>(workers: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
