#![allow(clippy::needless_range_loop)]

mod common;

use common::{brute_force_best_value, random_instance, stationary_by_linear_solve};
use nig::dynamics::{diffusion_centrality, evolve, initialize, DEFAULT_EIGEN_MAX_ITER};
use nig::solver::{profile_count, verify_equilibrium, GREEDY_GUARANTEE};
use nig::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(
    seed: u64,
    max_n: usize,
    players: usize,
    max_t: usize,
    max_b: usize,
) -> common::Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, max_n, players, max_t, max_b)
}

fn opponents_only(s: &StrategyProfile, i: usize) -> StrategyProfile {
    s.with_strategy(i, Vec::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn payoffs_sum_to_one(seed in any::<u64>(), m in 2usize..=3) {
        let inst = instance(seed, 20, m, 8, 3);
        let p = inst.game.utility(&inst.profile).unwrap();
        prop_assert!((p.sum() - 1.0).abs() < 1e-9);
        prop_assert!(p.payoffs.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn closed_form_matches_simulation(seed in any::<u64>(), m in 2usize..=3) {
        let inst = instance(seed, 20, m, 8, 3);
        let sim = inst.game.utility(&inst.profile).unwrap();
        let closed = inst.game.utility_closed_form(&inst.profile).unwrap();
        for i in 0..m {
            prop_assert!((sim[i] - closed[i]).abs() < 1e-10, "{} vs {}", sim[i], closed[i]);
        }
    }

    #[test]
    fn relabeling_players_permutes_payoffs(seed in any::<u64>()) {
        let inst = instance(seed, 15, 3, 6, 3);
        let cfg = inst.game.config();
        let perm = [2usize, 0, 1];
        let budgets: Vec<usize> = perm.iter().map(|&j| cfg.budgets[j]).collect();
        let permuted = StrategyProfile::new(
            perm.iter().map(|&j| inst.profile.strategy(j).to_vec()).collect(),
        ).unwrap();
        let game2 = Game::new(
            GameConfig::new(cfg.graph.clone(), budgets, cfg.horizon)
                .with_alpha(cfg.alpha)
                .with_epsilon(cfg.epsilon),
        ).unwrap();
        let a = inst.game.utility(&inst.profile).unwrap();
        let b = game2.utility(&permuted).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            prop_assert!((b[k] - a[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn opinions_stay_in_unit_box(seed in any::<u64>()) {
        let inst = instance(seed, 20, 3, 10, 3);
        let cfg = inst.game.config();
        let x0 = initialize(&cfg.graph, &inst.profile, cfg.epsilon).unwrap();
        let xt = evolve(&x0, inst.game.gamma(), cfg.horizon).unwrap();
        prop_assert!(xt.as_slice().iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn consensus_weighted_mass_is_conserved(seed in any::<u64>(), t in 0usize..30) {
        let inst = instance(seed, 15, 2, 1, 3);
        let w = inst.game.consensus_weights().unwrap();
        let cfg = inst.game.config();
        let x0 = initialize(&cfg.graph, &inst.profile, cfg.epsilon).unwrap();
        let xt = evolve(&x0, inst.game.gamma(), t).unwrap();
        let a = w.consensus_opinion(&x0);
        let b = w.consensus_opinion(&xt);
        for i in 0..2 {
            prop_assert!((a[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn centrality_reproduces_evolution(seed in any::<u64>(), t in 0usize..12) {
        let inst = instance(seed, 15, 2, 1, 3);
        let cfg = inst.game.config();
        let n = inst.game.node_count();
        let x0 = initialize(&cfg.graph, &inst.profile, cfg.epsilon).unwrap();
        let xt = evolve(&x0, inst.game.gamma(), t).unwrap();
        let cs: Vec<Vec<f64>> = (0..n)
            .map(|v| diffusion_centrality(inst.game.gamma(), t, v).unwrap().weights)
            .collect();
        for u in 0..n {
            for i in 0..2 {
                let via: f64 = (0..n).map(|v| cs[v][u] * x0.opinion(v, i)).sum();
                prop_assert!((via - xt.opinion(u, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn utility_is_monotone_and_submodular(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12, 2, 6, 3);
        let n = inst.game.node_count();
        let mut cfg = inst.game.config().clone();
        cfg.budgets[0] = n;
        let game = Game::new(cfg).unwrap();
        let opp = opponents_only(&inst.profile, 0);
        let size = rng.gen_range(0..n);
        let y = common::random_subset(&mut rng, n, size);
        let x: Vec<usize> = y.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        for v in (0..n).filter(|v| !y.contains(v)) {
            let gx = game.marginal_gain(0, &x, v, &opp).unwrap();
            let gy = game.marginal_gain(0, &y, v, &opp).unwrap();
            prop_assert!(gx >= -1e-12);
            prop_assert!(gx >= gy - 1e-12, "gain {} at X < {} at Y", gx, gy);
        }
    }

    #[test]
    fn greedy_gains_do_not_increase(seed in any::<u64>()) {
        let inst = instance(seed, 16, 2, 6, 4);
        let opts = SolverOptions::default();
        let br = greedy_best_response(&inst.game, 0, &opponents_only(&inst.profile, 0), &opts).unwrap();
        for w in br.marginal_gains.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn greedy_sits_between_guarantee_and_exact(seed in any::<u64>()) {
        let inst = instance(seed, 14, 2, 6, 3);
        let opts = SolverOptions::default();
        let opp = opponents_only(&inst.profile, 1);
        let exact = exact_best_response(&inst.game, 1, &opp, &opts).unwrap();
        let greedy = greedy_best_response(&inst.game, 1, &opp, &opts).unwrap();
        prop_assert!(greedy.payoff <= exact.payoff + 1e-12);
        prop_assert!(greedy.payoff >= GREEDY_GUARANTEE * exact.payoff - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_response_matches_brute_force_over_all_sizes(seed in any::<u64>()) {
        let inst = instance(seed, 10, 2, 5, 3);
        let opts = SolverOptions::default();
        let opp = opponents_only(&inst.profile, 0);
        let exact = exact_best_response(&inst.game, 0, &opp, &opts).unwrap();
        let oracle = brute_force_best_value(&inst.game, 0, &opp);
        prop_assert!((exact.payoff - oracle).abs() < 1e-10, "{} vs {}", exact.payoff, oracle);
    }

    #[test]
    fn certified_equilibria_are_in_the_exhaustive_set(seed in any::<u64>()) {
        let inst = instance(seed, 8, 2, 4, 2);
        let opts = SolverOptions::default();
        prop_assume!(profile_count(&inst.game) <= 50_000);
        let all = exhaustive_nash_check(&inst.game, &opts).unwrap();
        let start = StrategyProfile::new(
            (0..2).map(|i| (0..inst.game.budget(i)).collect()).collect(),
        ).unwrap();
        let out = best_response_dynamics(
            &inst.game, &start, 200, ResponseKind::Exact, PlayerOrder::Ascending, &opts,
        ).unwrap();
        if out.kind == OutcomeKind::Equilibrium {
            prop_assert!(out.certified);
            prop_assert!(all.contains(&out.profile));
            prop_assert!(verify_equilibrium(&inst.game, &out.profile, &opts).unwrap());
        }
        for s in &all {
            prop_assert!(verify_equilibrium(&inst.game, s, &opts).unwrap());
        }
    }
}

#[test]
fn power_iteration_matches_linear_solve_on_counterexample() {
    let g = build_counterexample(2, 1).unwrap();
    let gamma = influence_matrix(&g, 0.5).unwrap();
    let n = g.node_count();
    let w = eigenvector_weights(&gamma, 1e-13, DEFAULT_EIGEN_MAX_ITER).unwrap();
    let oracle = stationary_by_linear_solve(&gamma.to_dense(), n);
    for v in 0..n {
        assert!(
            (w.weights[v] - oracle[v]).abs() < 1e-9,
            "node {v}: {} vs {}",
            w.weights[v],
            oracle[v]
        );
    }
}

#[test]
fn power_iteration_matches_linear_solve_on_random_graphs() {
    for seed in 0..20 {
        let g = random_graph(10 + seed as usize, 3, seed).unwrap();
        let gamma = influence_matrix(&g, 0.4).unwrap();
        let w = eigenvector_weights(&gamma, 1e-13, DEFAULT_EIGEN_MAX_ITER).unwrap();
        let oracle = stationary_by_linear_solve(&gamma.to_dense(), g.node_count());
        for (a, b) in w.weights.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

/// Consensus payoffs from first principles: each seeded node splits unit
/// opinion among its seeders, unseeded nodes hold `eps` toward everyone,
/// and the consensus is the `c`-weighted average.
fn consensus_payoffs_by_hand(c: &[f64], sets: &[Vec<usize>], eps: f64) -> Vec<f64> {
    let m = sets.len();
    let mut x = vec![0.0; m];
    for (v, &cv) in c.iter().enumerate() {
        let seeders: Vec<usize> = (0..m).filter(|&i| sets[i].contains(&v)).collect();
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += cv
                * if seeders.is_empty() {
                    eps
                } else if seeders.contains(&i) {
                    1.0 / seeders.len() as f64
                } else {
                    0.0
                };
        }
    }
    let total: f64 = x.iter().sum();
    x.iter().map(|xi| xi / total).collect()
}

fn pure_equilibria_by_hand(c: &[f64], budgets: &[usize], eps: f64) -> usize {
    let n = c.len();
    let sets = |b: usize| -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == b)
            .map(|m| (0..n).filter(|&v| m >> v & 1 == 1).collect())
            .collect()
    };
    let (s0, s1) = (sets(budgets[0]), sets(budgets[1]));
    let mut count = 0;
    for a in &s0 {
        for b in &s1 {
            let base = consensus_payoffs_by_hand(c, &[a.clone(), b.clone()], eps);
            let stable0 = s0.iter().all(|d| {
                consensus_payoffs_by_hand(c, &[d.clone(), b.clone()], eps)[0] <= base[0] + 1e-12
            });
            let stable1 = s1.iter().all(|d| {
                consensus_payoffs_by_hand(c, &[a.clone(), d.clone()], eps)[1] <= base[1] + 1e-12
            });
            count += usize::from(stable0 && stable1);
        }
    }
    count
}

#[test]
fn unequal_budgets_on_uniform_weights_admit_no_equilibrium() {
    // Directed 3-cycle: Γ is doubly stochastic, so every consensus weight is 1/3.
    // With budgets (2,1) the larger player always gains by moving onto the
    // smaller player's node, and the smaller player then prefers a free node.
    let c = [1.0 / 3.0; 3];
    let eps = 1e-6;
    assert_eq!(pure_equilibria_by_hand(&c, &[2, 1], eps), 0);
    assert!(pure_equilibria_by_hand(&c, &[1, 1], eps) > 0);

    let opts = SolverOptions::consensus();
    let unequal = Game::new(GameConfig::new(Graph::cycle(3).unwrap(), vec![2, 1], 1)).unwrap();
    assert!(exhaustive_nash_check(&unequal, &opts).unwrap().is_empty());
    assert!(matches!(
        nig::solver::consensus_equilibrium(&unequal, &opts),
        Err(Error::VerificationFailed(_))
    ));

    let equal = Game::new(GameConfig::new(Graph::cycle(3).unwrap(), vec![1, 1], 1)).unwrap();
    let eqs = exhaustive_nash_check(&equal, &opts).unwrap();
    assert_eq!(eqs.len(), pure_equilibria_by_hand(&c, &[1, 1], eps));
    let built = nig::solver::consensus_equilibrium(&equal, &opts).unwrap();
    assert!(eqs.contains(&built.profile));
}

#[test]
fn equal_budgets_construction_matches_hand_enumeration() {
    for seed in 0..30u64 {
        let g = random_graph(4 + (seed % 5) as usize, 2, seed).unwrap();
        let b = 1 + (seed % 2) as usize;
        let game = Game::new(GameConfig::new(g, vec![b, b], 1)).unwrap();
        let w = game.consensus_weights().unwrap().weights.clone();
        let opts = SolverOptions::consensus();
        let eqs = exhaustive_nash_check(&game, &opts).unwrap();
        assert_eq!(
            eqs.len(),
            pure_equilibria_by_hand(&w, &[b, b], game.config().epsilon)
        );
        let built = nig::solver::consensus_equilibrium(&game, &opts).unwrap();
        assert!(eqs.contains(&built.profile), "seed {seed}");
    }
}
