//! Consensus opinion dynamics.
//!
//! Every node holds one opinion per player. At each step a node keeps a
//! `1 - alpha` share of its own opinion and takes an `alpha` share from its
//! in-neighbours, weighted by the edge weights. In matrix form each player's
//! opinion column evolves as `x(t) = Γ x(t-1)` with
//! `Γ = (1 - alpha) I + alpha Aᵀ`.
//!
//! Evolution is always done by repeated matrix-vector products; explicit
//! matrix powers are only formed on request in
//! [`diffusion_centralities`] with [`BatchMode::Squaring`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::StrategyProfile;
use crate::graph::Graph;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 1_000_000;

/// Node count above which [`InfluenceMatrix::new`] switches to sparse rows.
pub const SPARSE_THRESHOLD: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Row-major `n × n`.
    Dense(Vec<f64>),
    /// Compressed rows: row `v` spans `cols[row_ptr[v]..row_ptr[v + 1]]`.
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// The row-stochastic propagator `Γ`, with `γ[v][u] = (1-α)[v = u] + α w(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    n: usize,
    alpha: f64,
    repr: Repr,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Builds `Γ` for a validated graph, choosing dense storage up to
/// [`SPARSE_THRESHOLD`] nodes and sparse rows above it.
pub fn influence_matrix(g: &Graph, alpha: f64) -> Result<InfluenceMatrix> {
    InfluenceMatrix::new(g, alpha)
}

impl InfluenceMatrix {
    pub fn new(g: &Graph, alpha: f64) -> Result<InfluenceMatrix> {
        let storage = if g.node_count() > SPARSE_THRESHOLD {
            Storage::Sparse
        } else {
            Storage::Dense
        };
        Self::with_storage(g, alpha, storage)
    }

    pub fn with_storage(g: &Graph, alpha: f64, storage: Storage) -> Result<InfluenceMatrix> {
        check_alpha(alpha)?;
        g.ensure_valid()?;
        let n = g.node_count();
        let repr = match storage {
            Storage::Dense => {
                let mut entries = vec![0.0; n * n];
                for v in 0..n {
                    entries[v * n + v] = 1.0 - alpha;
                    for &(u, w) in g.incoming(v) {
                        entries[v * n + u] += alpha * w;
                    }
                }
                Repr::Dense(entries)
            }
            Storage::Sparse => {
                let mut row_ptr = Vec::with_capacity(n + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                row_ptr.push(0);
                for v in 0..n {
                    let mut row: Vec<(usize, f64)> =
                        g.incoming(v).iter().map(|&(u, w)| (u, alpha * w)).collect();
                    row.push((v, 1.0 - alpha));
                    row.sort_by_key(|&(u, _)| u);
                    for (u, val) in row {
                        cols.push(u);
                        vals.push(val);
                    }
                    row_ptr.push(cols.len());
                }
                Repr::Sparse {
                    row_ptr,
                    cols,
                    vals,
                }
            }
        };
        Ok(InfluenceMatrix { n, alpha, repr })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn storage(&self) -> Storage {
        match self.repr {
            Repr::Dense(_) => Storage::Dense,
            Repr::Sparse { .. } => Storage::Sparse,
        }
    }

    /// `γ[v][u]`: the weight node `v` places on node `u`'s previous opinion.
    pub fn entry(&self, v: usize, u: usize) -> f64 {
        match &self.repr {
            Repr::Dense(e) => e[v * self.n + u],
            Repr::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                let span = row_ptr[v]..row_ptr[v + 1];
                match cols[span.clone()].binary_search(&u) {
                    Ok(k) => vals[span.start + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn row_sum(&self, v: usize) -> f64 {
        match &self.repr {
            Repr::Dense(e) => e[v * self.n..(v + 1) * self.n].iter().sum(),
            Repr::Sparse { row_ptr, vals, .. } => vals[row_ptr[v]..row_ptr[v + 1]].iter().sum(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for v in 0..n {
            for u in 0..n {
                out[v * n + u] = self.entry(v, u);
            }
        }
        out
    }

    /// `out = Γ x` for a row-major `n × width` block `x`.
    pub fn apply_block(&self, x: &[f64], width: usize, out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n * width);
        debug_assert_eq!(out.len(), n * width);
        out.iter_mut().for_each(|o| *o = 0.0);
        match &self.repr {
            Repr::Dense(e) => {
                for v in 0..n {
                    let dst = &mut out[v * width..(v + 1) * width];
                    for u in 0..n {
                        let g = e[v * n + u];
                        if g != 0.0 {
                            let src = &x[u * width..(u + 1) * width];
                            for (o, s) in dst.iter_mut().zip(src) {
                                *o += g * s;
                            }
                        }
                    }
                }
            }
            Repr::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                for v in 0..n {
                    let dst = &mut out[v * width..(v + 1) * width];
                    for k in row_ptr[v]..row_ptr[v + 1] {
                        let (u, g) = (cols[k], vals[k]);
                        let src = &x[u * width..(u + 1) * width];
                        for (o, s) in dst.iter_mut().zip(src) {
                            *o += g * s;
                        }
                    }
                }
            }
        }
    }

    /// `out = c Γ`, i.e. `out[u] = Σ_v c[v] γ[v][u]`.
    pub fn apply_left(&self, c: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|o| *o = 0.0);
        match &self.repr {
            Repr::Dense(e) => {
                for v in 0..n {
                    let cv = c[v];
                    for (o, g) in out.iter_mut().zip(&e[v * n..(v + 1) * n]) {
                        *o += cv * g;
                    }
                }
            }
            Repr::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                for v in 0..n {
                    for k in row_ptr[v]..row_ptr[v + 1] {
                        out[cols[k]] += c[v] * vals[k];
                    }
                }
            }
        }
    }

    /// Dense `Γ^t` by repeated squaring.
    pub fn power(&self, t: usize) -> Vec<f64> {
        let n = self.n;
        let mut result = vec![0.0; n * n];
        for i in 0..n {
            result[i * n + i] = 1.0;
        }
        let mut base = self.to_dense();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                result = dense_mul(&result, &base, n);
            }
            e >>= 1;
            if e > 0 {
                base = dense_mul(&base, &base, n);
            }
        }
        result
    }
}

fn dense_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Opinions of every node toward every player at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState {
    t: usize,
    players: usize,
    /// Row-major `n × m`: entry `(v, i)` is node `v`'s opinion toward player `i`.
    opinions: Vec<f64>,
}

impl OpinionState {
    pub fn from_rows(t: usize, rows: &[Vec<f64>]) -> Result<OpinionState> {
        let players = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != players) {
            return Err(Error::DimensionMismatch {
                expected: players,
                found: bad.len(),
            });
        }
        Ok(OpinionState {
            t,
            players,
            opinions: rows.concat(),
        })
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn node_count(&self) -> usize {
        self.opinions.len().checked_div(self.players).unwrap_or(0)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn opinion(&self, v: usize, i: usize) -> f64 {
        self.opinions[v * self.players + i]
    }

    /// Opinion vector `x^v` of node `v`.
    pub fn node(&self, v: usize) -> &[f64] {
        &self.opinions[v * self.players..(v + 1) * self.players]
    }

    /// Opinion column `x_i` toward player `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.node_count()).map(|v| self.opinion(v, i)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.opinions
    }
}

/// Time-zero opinions for a strategy profile: a node seeded by a set of
/// players splits unit opinion equally among them, an unseeded node holds
/// `epsilon` toward every player.
pub fn initialize(g: &Graph, s: &StrategyProfile, epsilon: f64) -> Result<OpinionState> {
    let n = g.node_count();
    let m = s.players();
    check_epsilon(epsilon, m)?;
    s.check_nodes(n)?;
    let seeders = s.seeders(n);
    let mut opinions = vec![0.0; n * m];
    for (v, owners) in seeders.iter().enumerate() {
        let row = &mut opinions[v * m..(v + 1) * m];
        if owners.is_empty() {
            row.iter_mut().for_each(|x| *x = epsilon);
        } else {
            let share = 1.0 / owners.len() as f64;
            for &i in owners {
                row[i] = share;
            }
        }
    }
    Ok(OpinionState {
        t: 0,
        players: m,
        opinions,
    })
}

pub fn check_epsilon(epsilon: f64, players: usize) -> Result<()> {
    let bound = 1.0 / (2.0 * players as f64);
    if epsilon > 0.0 && epsilon < bound {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange { epsilon, bound })
    }
}

pub fn step(state: &OpinionState, gamma: &InfluenceMatrix) -> Result<OpinionState> {
    if state.node_count() != gamma.node_count() {
        return Err(Error::DimensionMismatch {
            expected: gamma.node_count(),
            found: state.node_count(),
        });
    }
    let mut next = vec![0.0; state.opinions.len()];
    gamma.apply_block(&state.opinions, state.players, &mut next);
    Ok(OpinionState {
        t: state.t + 1,
        players: state.players,
        opinions: next,
    })
}

pub fn evolve(
    state: &OpinionState,
    gamma: &InfluenceMatrix,
    t_steps: usize,
) -> Result<OpinionState> {
    let mut current = state.clone();
    for _ in 0..t_steps {
        current = step(&current, gamma)?;
    }
    Ok(current)
}

/// All states from `state` through `t_steps` further steps, inclusive.
pub fn trajectory(
    state: &OpinionState,
    gamma: &InfluenceMatrix,
    t_steps: usize,
) -> Result<Vec<OpinionState>> {
    let mut out = Vec::with_capacity(t_steps + 1);
    out.push(state.clone());
    for _ in 0..t_steps {
        let next = step(out.last().expect("non-empty"), gamma)?;
        out.push(next);
    }
    Ok(out)
}

/// `c^v = Γ^T δ[v]`: entry `u` is the share of node `u`'s time-`T` opinion
/// that comes from node `v`'s initial opinion.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector {
    pub source: usize,
    pub weights: Vec<f64>,
}

pub fn diffusion_centrality(
    gamma: &InfluenceMatrix,
    t_steps: usize,
    v: usize,
) -> Result<InfluenceVector> {
    let n = gamma.node_count();
    if v >= n {
        return Err(Error::NodeOutOfRange {
            node: v,
            node_count: n,
        });
    }
    let mut x = vec![0.0; n];
    x[v] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..t_steps {
        gamma.apply_block(&x, 1, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    Ok(InfluenceVector {
        source: v,
        weights: x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    /// `T` matrix-vector products per source.
    #[default]
    Iterative,
    /// One dense `Γ^T` by repeated squaring, then read off its columns.
    Squaring,
}

/// Diffusion centralities of every source at a fixed horizon, stored
/// row-major by source: `get(v, u) = c^v_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    n: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl CentralityTable {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.data[source * self.n + target]
    }

    /// Row-major by source.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn source(&self, v: usize) -> &[f64] {
        &self.data[v * self.n..(v + 1) * self.n]
    }

    /// `Σ_v c^v_u` for target `u`; one for a stochastic `Γ`.
    pub fn source_sum(&self, target: usize) -> f64 {
        (0..self.n).map(|v| self.get(v, target)).sum()
    }
}

/// Computes [`diffusion_centrality`] for every source. With `workers > 1`
/// the iterative mode fans sources out over a thread pool; the output does
/// not depend on the worker count.
pub fn diffusion_centralities(
    gamma: &InfluenceMatrix,
    t_steps: usize,
    mode: BatchMode,
    workers: usize,
) -> CentralityTable {
    let n = gamma.node_count();
    let data = match mode {
        BatchMode::Squaring => {
            let p = gamma.power(t_steps);
            let mut data = vec![0.0; n * n];
            for v in 0..n {
                for u in 0..n {
                    data[v * n + u] = p[u * n + v];
                }
            }
            data
        }
        BatchMode::Iterative => {
            let one = |v: usize| {
                diffusion_centrality(gamma, t_steps, v)
                    .expect("source in range")
                    .weights
            };
            let rows: Vec<Vec<f64>> = if workers > 1 {
                crate::run_with_workers(workers, || (0..n).into_par_iter().map(one).collect())
            } else {
                (0..n).map(one).collect()
            };
            rows.concat()
        }
    };
    CentralityTable {
        n,
        horizon: t_steps,
        data,
    }
}

/// The left eigenvector `c` of `Γ` for eigenvalue one, normalised to sum
/// to one: `c^v` is node `v`'s share of the eventual consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// `‖cΓ − c‖∞` at the returned vector.
    pub residual: f64,
}

impl ConsensusWeights {
    /// `Σ_v c^v x^v_i` for each player `i`. Conserved by the dynamics.
    pub fn consensus_opinion(&self, state: &OpinionState) -> Vec<f64> {
        (0..state.players())
            .map(|i| {
                self.weights
                    .iter()
                    .enumerate()
                    .map(|(v, c)| c * state.opinion(v, i))
                    .sum()
            })
            .collect()
    }

    /// Node ids sorted by descending weight, ties by ascending id.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.weights.len()).collect();
        order.sort_by(|&a, &b| {
            self.weights[b]
                .partial_cmp(&self.weights[a])
                .expect("finite weights")
                .then(a.cmp(&b))
        });
        order
    }
}

/// Power iteration `c ← cΓ` from the uniform vector, renormalised each step,
/// until successive iterates differ by less than `tol` in max-norm.
pub fn eigenvector_weights(
    gamma: &InfluenceMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<ConsensusWeights> {
    let n = gamma.node_count();
    let mut c = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for iter in 1..=max_iter {
        gamma.apply_left(&c, &mut next);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        change = max_abs_diff(&c, &next);
        std::mem::swap(&mut c, &mut next);
        if change < tol {
            gamma.apply_left(&c, &mut next);
            let residual = max_abs_diff(&c, &next);
            return Ok(ConsensusWeights {
                weights: c,
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        change,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// True when every player's opinion spread `max_v x^v_i − min_v x^v_i` is
/// below `tol`.
pub fn consensus_reached(state: &OpinionState, tol: f64) -> bool {
    (0..state.players()).all(|i| {
        let (lo, hi) = (0..state.node_count())
            .map(|v| state.opinion(v, i))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            });
        hi - lo < tol
    })
}
