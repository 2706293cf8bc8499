//! Command layer for the `nig` binary. Each subcommand builds a
//! [`RunReport`]; the binary only parses arguments and prints.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::dynamics::{
    consensus_reached, diffusion_centralities, eigenvector_weights, evolve, initialize, trajectory,
    BatchMode, InfluenceMatrix, DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL,
};
use crate::error::Error;
use crate::game::{Game, GameConfig, PayoffModel, StrategyProfile};
use crate::graph::{build_counterexample, load_graph, random_graph, Graph};
use crate::report::{format_sig, RunReport};
use crate::solver::{
    best_response_dynamics, consensus_equilibrium, exact_best_response, exhaustive_nash_check,
    greedy_best_response, PlayerOrder, ResponseKind, SolverOptions, DEFAULT_ENUMERATION_CAP,
    DEFAULT_PROFILE_CAP,
};
use crate::WORKERS_ENV;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: Error },
    #[error(transparent)]
    Run(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "nig",
    version,
    about = "Competitive opinion seeding on weighted digraphs"
)]
pub struct Cli {
    /// Emit the line-delimited report schema instead of the readable summary.
    #[arg(long, global = true)]
    pub structured: bool,

    /// Worker threads for centrality batches and exact enumeration.
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 1)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the dynamics for a strategy profile and report payoffs.
    Simulate(SimulateArgs),
    /// Diffusion-centrality table at a horizon, or consensus weights.
    Centrality(CentralityArgs),
    /// Best response of one player to fixed opponents.
    BestResponse(BestResponseArgs),
    /// Search for pure Nash equilibria.
    Nash(NashArgs),
    /// Write a generated graph in edge-list format.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge-list file.
    #[arg(long)]
    pub graph: PathBuf,

    /// Rescale each node's incoming weights to sum to one on load.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = crate::dynamics::DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Number of dynamics steps T.
    #[arg(long, short = 'T')]
    pub horizon: usize,

    #[arg(long, default_value_t = crate::dynamics::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Strategy-profile file (`player <i> seeds <ids...>` per line).
    #[arg(long)]
    pub strategies: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Also print the final opinion matrix and the consensus verdict.
    #[arg(long)]
    pub opinions: bool,

    /// Print one opinion snapshot per time step, T+1 rows.
    #[arg(long)]
    pub trace: bool,

    /// Spread tolerance for the consensus verdict.
    #[arg(long, default_value_t = 1e-8)]
    pub consensus_tol: f64,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    #[arg(long, default_value_t = crate::dynamics::DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Horizon T for the diffusion-centrality table.
    #[arg(
        long,
        short = 'T',
        required_unless_present = "eigen",
        conflicts_with = "eigen"
    )]
    pub horizon: Option<usize>,

    /// Report consensus weights instead.
    #[arg(long)]
    pub eigen: bool,

    /// Form Γ^T by repeated squaring instead of T products per source.
    #[arg(long)]
    pub squaring: bool,

    #[arg(long, default_value_t = DEFAULT_EIGEN_TOL)]
    pub tol: f64,

    #[arg(long, default_value_t = DEFAULT_EIGEN_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct BestResponseArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Responding player (0-based).
    #[arg(long)]
    pub player: usize,

    /// Opposing seed sets; the responding player's line, if any, is ignored.
    #[arg(long)]
    pub opponents: PathBuf,

    /// Seed budget of the responding player.
    #[arg(long)]
    pub budget: usize,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Exhaustive search.
    #[arg(long)]
    pub exact: bool,

    /// Greedy search (the default when neither flag is given).
    #[arg(long)]
    pub greedy: bool,

    /// Use consensus-limit payoffs.
    #[arg(long)]
    pub consensus: bool,

    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,
}

#[derive(Debug, Args)]
pub struct NashArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Comma-separated budgets, one per player.
    #[arg(long, value_delimiter = ',', required = true)]
    pub budgets: Vec<usize>,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Best-response dynamics.
    #[arg(long, conflicts_with_all = ["exhaustive", "construct"])]
    pub dynamics: bool,

    /// Enumerate every profile.
    #[arg(long, conflicts_with = "construct")]
    pub exhaustive: bool,

    /// Build the consensus-regime equilibrium constructively.
    #[arg(long)]
    pub construct: bool,

    /// Use consensus-limit payoffs.
    #[arg(long)]
    pub consensus: bool,

    /// Starting profile for --dynamics; defaults to every player seeding
    /// the lowest node ids.
    #[arg(long)]
    pub initial: Option<PathBuf>,

    #[arg(long, default_value_t = 100)]
    pub max_rounds: usize,

    /// Greedy responses in --dynamics.
    #[arg(long)]
    pub greedy: bool,

    /// Random player order per round, seeded.
    #[arg(long)]
    pub shuffle: Option<u64>,

    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,

    #[arg(long, default_value_t = DEFAULT_PROFILE_CAP)]
    pub profile_cap: u128,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Counterexample graph for M players with budget B.
    #[arg(long, num_args = 2, value_names = ["M", "B"], conflicts_with = "random")]
    pub counterexample: Option<Vec<usize>>,

    /// Random strongly connected graph: N nodes, out-degree D, seed SEED.
    #[arg(long, num_args = 3, value_names = ["N", "D", "SEED"])]
    pub random: Option<Vec<u64>>,

    /// Output file; the edge list goes to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a command produced: a report, or raw edge-list text.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Report(RunReport),
    EdgeList(String),
}

impl Output {
    pub fn render(&self, structured: bool) -> String {
        match self {
            Output::Report(r) if structured => r.render_structured(),
            Output::Report(r) => r.render_text(),
            Output::EdgeList(text) => text.clone(),
        }
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let start = Instant::now();
    let mut out = match &cli.command {
        Command::Simulate(a) => Output::Report(cmd_simulate(a)?),
        Command::Centrality(a) => Output::Report(cmd_centrality(a, cli.workers)?),
        Command::BestResponse(a) => Output::Report(cmd_best_response(a, cli.workers)?),
        Command::Nash(a) => Output::Report(cmd_nash(a, cli.workers)?),
        Command::Generate(a) => cmd_generate(a)?,
    };
    if let Output::Report(r) = &mut out {
        r.param("workers", cli.workers);
        r.timing_ms = start.elapsed().as_millis();
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn read_graph(args: &GraphArgs) -> Result<Graph, CliError> {
    load_graph(open(&args.graph)?, args.normalize).map_err(|source| CliError::Input {
        path: args.graph.clone(),
        source,
    })
}

fn read_profile(path: &Path, min_players: usize) -> Result<StrategyProfile, CliError> {
    StrategyProfile::load(open(path)?, min_players).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn echo_graph(r: &mut RunReport, args: &GraphArgs, g: &Graph) {
    r.param("graph", args.graph.display())
        .param("normalize", args.normalize)
        .param("nodes", g.node_count());
}

fn echo_model(r: &mut RunReport, m: &ModelArgs) {
    r.param("alpha", m.alpha)
        .param("horizon", m.horizon)
        .param("epsilon", m.epsilon);
}

fn echo_profile(r: &mut RunReport, name: &str, s: &StrategyProfile) {
    for (i, seeds) in s.strategies().iter().enumerate() {
        r.result(name, std::iter::once(i).chain(seeds.iter().copied()));
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<RunReport, CliError> {
    let g = read_graph(&a.graph)?;
    let profile = read_profile(&a.strategies, 0)?;
    let budgets: Vec<usize> = profile.strategies().iter().map(Vec::len).collect();
    let cfg = GameConfig::new(g.clone(), budgets, a.model.horizon)
        .with_alpha(a.model.alpha)
        .with_epsilon(a.model.epsilon);
    let game = Game::new(cfg)?;
    let payoffs = game.utility(&profile)?;

    let mut r = RunReport::new("simulate");
    echo_graph(&mut r, &a.graph, &g);
    echo_model(&mut r, &a.model);
    r.param("strategies", a.strategies.display())
        .param("players", profile.players())
        .param("consensus_tol", a.consensus_tol);
    echo_profile(&mut r, "profile", &profile);
    r.reals("payoffs", &payoffs.payoffs);
    r.result("payoff_sum", [format_sig(payoffs.sum())]);

    if a.opinions || a.trace {
        let x0 = initialize(&g, &profile, a.model.epsilon)?;
        if a.trace {
            for state in trajectory(&x0, game.gamma(), a.model.horizon)? {
                r.result(
                    "snapshot",
                    std::iter::once(state.time().to_string())
                        .chain(state.as_slice().iter().map(|&x| format_sig(x))),
                );
            }
        }
        if a.opinions {
            let xt = evolve(&x0, game.gamma(), a.model.horizon)?;
            for v in 0..g.node_count() {
                r.result(
                    "opinion",
                    std::iter::once(v.to_string()).chain(xt.node(v).iter().map(|&x| format_sig(x))),
                );
            }
            r.result(
                "consensus_reached",
                [consensus_reached(&xt, a.consensus_tol)],
            );
        }
    }
    Ok(r)
}

pub fn cmd_centrality(a: &CentralityArgs, workers: usize) -> Result<RunReport, CliError> {
    let g = read_graph(&a.graph)?;
    let gamma = InfluenceMatrix::new(&g, a.alpha)?;
    let mut r = RunReport::new("centrality");
    echo_graph(&mut r, &a.graph, &g);
    r.param("alpha", a.alpha);
    if a.eigen {
        r.param("mode", "eigen")
            .param("tol", a.tol)
            .param("max_iter", a.max_iter);
        let c = eigenvector_weights(&gamma, a.tol, a.max_iter)?;
        r.reals("weights", &c.weights);
        r.result("weight_sum", [format_sig(c.weights.iter().sum())]);
        r.result("iterations", [c.iterations]);
        r.result("residual", [format_sig(c.residual)]);
    } else {
        let t = a.horizon.expect("clap enforces --horizon without --eigen");
        let mode = if a.squaring {
            BatchMode::Squaring
        } else {
            BatchMode::Iterative
        };
        r.param("mode", "diffusion")
            .param("horizon", t)
            .param("squaring", a.squaring);
        let table = diffusion_centralities(&gamma, t, mode, workers);
        for v in 0..g.node_count() {
            r.result(
                "influence",
                std::iter::once(v.to_string())
                    .chain(table.source(v).iter().map(|&x| format_sig(x))),
            );
        }
        let sums: Vec<f64> = (0..g.node_count()).map(|u| table.source_sum(u)).collect();
        r.reals("source_sums", &sums);
    }
    Ok(r)
}

pub fn cmd_best_response(a: &BestResponseArgs, workers: usize) -> Result<RunReport, CliError> {
    let g = read_graph(&a.graph)?;
    let opponents = read_profile(&a.opponents, a.player + 1)?;
    let opponents = opponents.with_strategy(a.player, Vec::new())?;
    let budgets: Vec<usize> = opponents
        .strategies()
        .iter()
        .enumerate()
        .map(|(j, s)| if j == a.player { a.budget } else { s.len() })
        .collect();
    let cfg = GameConfig::new(g.clone(), budgets, a.model.horizon)
        .with_alpha(a.model.alpha)
        .with_epsilon(a.model.epsilon);
    let game = Game::new(cfg)?.with_workers(workers);
    let model = if a.consensus {
        PayoffModel::Consensus
    } else {
        PayoffModel::Transient
    };
    let opts = SolverOptions {
        model,
        enumeration_cap: a.cap,
        ..SolverOptions::default()
    };
    let (run_exact, run_greedy) = (a.exact, a.greedy || !a.exact);

    let mut r = RunReport::new("best-response");
    echo_graph(&mut r, &a.graph, &g);
    echo_model(&mut r, &a.model);
    r.param("opponents", a.opponents.display())
        .param("player", a.player)
        .param("budget", a.budget)
        .param(
            "payoffs",
            if a.consensus {
                "consensus"
            } else {
                "transient"
            },
        )
        .param("exact", run_exact)
        .param("greedy", run_greedy)
        .param("cap", a.cap);
    echo_profile(&mut r, "opponent", &opponents);

    let greedy = if run_greedy {
        let br = greedy_best_response(&game, a.player, &opponents, &opts)?;
        r.result("greedy_strategy", &br.strategy);
        r.result("greedy_payoff", [format_sig(br.payoff)]);
        r.result("greedy_evaluations", [br.evaluations]);
        Some(br)
    } else {
        None
    };
    if run_exact {
        let br = exact_best_response(&game, a.player, &opponents, &opts).map_err(|e| match e {
            Error::EnumerationCap { required, cap } => CliError::Usage(format!(
                "exact search needs {required} evaluations, above the cap of {cap}; \
                 raise --cap or use --greedy"
            )),
            other => CliError::Run(other),
        })?;
        r.result("exact_strategy", &br.strategy);
        r.result("exact_payoff", [format_sig(br.payoff)]);
        r.result("exact_evaluations", [br.evaluations]);
        if let Some(g) = &greedy {
            r.result("ratio", [format_sig(g.payoff / br.payoff)]);
        }
    }
    Ok(r)
}

pub fn cmd_nash(a: &NashArgs, workers: usize) -> Result<RunReport, CliError> {
    let g = read_graph(&a.graph)?;
    let cfg = GameConfig::new(g.clone(), a.budgets.clone(), a.model.horizon)
        .with_alpha(a.model.alpha)
        .with_epsilon(a.model.epsilon);
    let game = Game::new(cfg)?.with_workers(workers);
    let model = if a.consensus {
        PayoffModel::Consensus
    } else {
        PayoffModel::Transient
    };
    let opts = SolverOptions {
        model,
        enumeration_cap: a.cap,
        profile_cap: a.profile_cap,
    };
    let mode = if a.exhaustive {
        "exhaustive"
    } else if a.construct {
        "construct"
    } else {
        "dynamics"
    };

    let mut r = RunReport::new("nash");
    echo_graph(&mut r, &a.graph, &g);
    echo_model(&mut r, &a.model);
    r.param(
        "budgets",
        a.budgets
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    )
    .param("mode", mode)
    .param(
        "payoffs",
        if a.consensus {
            "consensus"
        } else {
            "transient"
        },
    )
    .param("cap", a.cap)
    .param("profile_cap", a.profile_cap);

    match mode {
        "exhaustive" => {
            let eqs = exhaustive_nash_check(&game, &opts)?;
            r.result("equilibria", [eqs.len()]);
            for (k, s) in eqs.iter().enumerate() {
                for (i, seeds) in s.strategies().iter().enumerate() {
                    r.result(
                        "equilibrium",
                        [k, i].into_iter().chain(seeds.iter().copied()),
                    );
                }
            }
        }
        "construct" => {
            let eq = consensus_equilibrium(&game, &opts)?;
            echo_profile(&mut r, "profile", &eq.profile);
            r.reals("payoffs", &eq.payoffs);
            r.result("verified", [eq.verified]);
        }
        _ => {
            let initial = match &a.initial {
                Some(path) => read_profile(path, game.players())?,
                None => StrategyProfile::new(
                    a.budgets
                        .iter()
                        .map(|&b| (0..b.min(g.node_count())).collect())
                        .collect(),
                )?,
            };
            let response = if a.greedy {
                ResponseKind::Greedy
            } else {
                ResponseKind::Exact
            };
            let order = a
                .shuffle
                .map_or(PlayerOrder::Ascending, PlayerOrder::Shuffled);
            r.param("max_rounds", a.max_rounds)
                .param("response", if a.greedy { "greedy" } else { "exact" })
                .param(
                    "order",
                    a.shuffle
                        .map_or("ascending".to_string(), |s| format!("shuffled:{s}")),
                );
            echo_profile(&mut r, "initial", &initial);
            let out =
                best_response_dynamics(&game, &initial, a.max_rounds, response, order, &opts)?;
            r.result("kind", [out.kind.as_str()]);
            r.result("rounds", [out.rounds]);
            r.result("certified", [out.certified]);
            echo_profile(&mut r, "profile", &out.profile);
            r.reals("payoffs", &game.payoffs(model, &out.profile)?.payoffs);
            r.result("trace_length", [out.trace.len()]);
            for step in &out.trace {
                let mut tokens = vec![step.player.to_string(), "old".into()];
                tokens.extend(step.old.iter().map(usize::to_string));
                tokens.push("new".into());
                tokens.extend(step.new.iter().map(usize::to_string));
                tokens.push("delta".into());
                tokens.push(format_sig(step.delta));
                r.result("trace", tokens);
            }
        }
    }
    Ok(r)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<Output, CliError> {
    let (g, kind, params): (Graph, &str, Vec<(&str, u64)>) = match (&a.counterexample, &a.random) {
        (Some(cb), None) => (
            build_counterexample(cb[0], cb[1])?,
            "counterexample",
            vec![("players", cb[0] as u64), ("budget", cb[1] as u64)],
        ),
        (None, Some(r)) => (
            random_graph(r[0] as usize, r[1] as usize, r[2])?,
            "random",
            vec![("nodes", r[0]), ("out_degree", r[1]), ("seed", r[2])],
        ),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --counterexample M B or --random N D SEED".into(),
            ))
        }
    };
    let text = g.to_edge_list();
    let Some(path) = &a.out else {
        return Ok(Output::EdgeList(text));
    };
    std::fs::write(path, &text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut r = RunReport::new("generate");
    r.param("kind", kind);
    for (k, v) in params {
        r.param(k, v);
    }
    r.param("out", path.display());
    r.result("nodes", [g.node_count()]);
    r.result("edges", [g.edges().len()]);
    r.result("valid", [g.validate().is_valid()]);
    Ok(Output::Report(r))
}
