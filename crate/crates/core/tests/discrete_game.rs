use asymgame::discrete::{
    best_response_p1, best_response_p2, check_dual_reformulation, convexity_probe, exact_partition_value,
    one_stage_value, payoff_mc, profile_payoff, resolve_controls, simulate, IntervalRule, McConfig,
    RandomNadStrategy, RandomSource, Rule, StrategyProfile, TypeAveraging,
};
use asymgame::matrix_game::{pure_minimax, solve, MatrixGame};
use asymgame::model::{payoff, ControlSet, GameSpec, MixedStrategy, Payoff, SimplexGrid, TimePartition};
use asymgame::numerics::NumericsConfig;
use proptest::prelude::*;

/// 1D game with constant velocities `c[u][v]` and smooth payoffs
/// `g_ij(x) = a_ij sin(b_ij x + c_ij) + d_ij x`.
fn random_instance(seed: u64, ni: usize, nj: usize, nu: usize, nv: usize) -> GameSpec<f64> {
    let mut r = seed;
    let mut next = move || {
        r = r.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((r >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let vel: Vec<Vec<f64>> = (0..nu).map(|_| (0..nv).map(|_| next()).collect()).collect();
    let payoffs: Vec<Vec<Payoff<f64>>> = (0..ni)
        .map(|_| {
            (0..nj)
                .map(|_| {
                    let (a, b, c, d) = (next(), 2.0 + next(), next(), 0.5 * next());
                    payoff(move |x: &[f64]| a * (b * x[0] + c).sin() + d * x[0])
                })
                .collect()
        })
        .collect();
    let u = ControlSet::from_points((0..nu).map(|k| vec![k as f64]).collect()).unwrap();
    let v = ControlSet::from_points((0..nv).map(|k| vec![k as f64]).collect()).unwrap();
    GameSpec::from_fns(1, 1.0, u, v, move |_, u, v, o| o[0] = vel[u[0] as usize][v[0] as usize], payoffs).unwrap()
}

fn n() -> NumericsConfig<f64> {
    NumericsConfig::default()
}

/// Terminal payoffs `m[i][j][u][v]` of the one-stage game from `(0, x)`.
fn one_stage_table(spec: &GameSpec<f64>, x: f64) -> Vec<Vec<Vec<Vec<f64>>>> {
    let part = TimePartition::new(vec![0.0, spec.horizon()]).unwrap();
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    (0..spec.types_p())
        .map(|i| {
            (0..spec.types_q())
                .map(|j| {
                    (0..nu)
                        .map(|u| {
                            (0..nv)
                                .map(|v| {
                                    let s = asymgame::discrete::terminal_state(spec, &part, 0, &[x], &[u], &[v], &n())
                                        .unwrap();
                                    spec.payoff(i, j, &s)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Grid search over player 1's behavior `(a_1, a_2)` at step 1/200 for
/// `|U| = 2`, `I = 2`; player 2's best reply is exact and separable in `j`.
fn behavior_grid_search(m: &[Vec<Vec<Vec<f64>>>], p: &[f64], q: &[f64]) -> f64 {
    let res = 200;
    let nv = m[0][0][0].len();
    let mut best = f64::INFINITY;
    for k1 in 0..=res {
        for k2 in 0..=res {
            let a = [k1 as f64 / res as f64, k2 as f64 / res as f64];
            let mut total = 0.0;
            for (j, &qj) in q.iter().enumerate() {
                let reply = (0..nv)
                    .map(|v| {
                        (0..2)
                            .map(|i| p[i] * ((1.0 - a[i]) * m[i][j][0][v] + a[i] * m[i][j][1][v]))
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                total += qj * reply;
            }
            best = best.min(total);
        }
    }
    best
}

#[test]
fn one_stage_value_matches_behavior_grid_search() {
    for seed in 0..5 {
        for nj in [1, 2] {
            let spec = random_instance(seed, 2, nj, 2, 2);
            let (p, q) = ([0.35, 0.65], if nj == 1 { vec![1.0] } else { vec![0.6, 0.4] });
            let exact = one_stage_value(&spec, 0.0, &[0.2], &p, &q, &n()).unwrap();
            let grid = behavior_grid_search(&one_stage_table(&spec, 0.2), &p, &q);
            assert!((exact.value - grid).abs() <= 1e-2, "seed {seed}: {} vs {grid}", exact.value);
            assert!(exact.value <= grid + 1e-9);
        }
    }
}

#[test]
fn single_type_is_the_plain_matrix_game() {
    let spec = random_instance(11, 1, 1, 3, 2);
    let m = one_stage_table(&spec, -0.4);
    let game = MatrixGame::from_rows(m[0][0].clone()).unwrap();
    let want = solve(&game, 1e-9).unwrap().value;
    let got = one_stage_value(&spec, 0.0, &[-0.4], &[1.0], &[1.0], &n()).unwrap();
    assert!((got.value - want).abs() <= 1e-12);
    let (infsup, supinf) = pure_minimax(&game);
    assert!(supinf - 1e-12 <= got.value && got.value <= infsup + 1e-12);
}

#[test]
fn zero_dynamics_give_the_bilinear_payoff() {
    let c = ControlSet::scalars(&[-1.0, 1.0]).unwrap();
    let g = |a: f64| payoff(move |x: &[f64]| a * x[0] + a * a);
    let spec =
        GameSpec::from_fns(1, 1.0, c.clone(), c, |_, _, _, o| o[0] = 0.0, vec![vec![g(1.0), g(-2.0)], vec![g(0.5), g(3.0)]])
            .unwrap();
    let (x, p, q) = ([0.7], [0.2, 0.8], [0.45, 0.55]);
    let want = spec.bilinear_payoff(&x, &p, &q);
    let part = TimePartition::uniform(1.0, 2).unwrap();
    let v = exact_partition_value(&spec, &part, 0, &x, &p, &q, &n()).unwrap();
    assert!((v.value - want).abs() <= 1e-12);

    let mix = MixedStrategy::new(vec![0.3, 0.7]).unwrap();
    let s = RandomNadStrategy::constant(2, 2, mix).unwrap();
    let profile = StrategyProfile::new(vec![s.clone(), s.clone()], vec![s.clone(), s]);
    let exact = McConfig { n_samples: 7, seed: 5, types: TypeAveraging::Exact };
    let est = payoff_mc(&spec, &profile, &part, 0, &x, &p, &q, &exact, &n()).unwrap();
    assert!((est.mean - want).abs() <= 1e-12 && est.stderr <= 1e-12);
    let sampled = McConfig { n_samples: 4000, seed: 5, types: TypeAveraging::Sample };
    let est = payoff_mc(&spec, &profile, &part, 0, &x, &p, &q, &sampled, &n()).unwrap();
    assert!((est.mean - want).abs() <= 3.0 * est.stderr && est.stderr > 0.0);
}

#[test]
fn optimal_profiles_guarantee_the_value() {
    for (seed, steps) in [(1, 1), (2, 1), (3, 2)] {
        let spec = random_instance(seed, 2, 2, 2, 2);
        let part = TimePartition::uniform(1.0, steps).unwrap();
        let (x, p, q) = ([0.1], [0.55, 0.45], [0.3, 0.7]);
        let v = exact_partition_value(&spec, &part, 0, &x, &p, &q, &n()).unwrap();
        let profile = v.behavior_profile().unwrap();
        let played = profile_payoff(&spec, &profile, &part, 0, &x, &p, &q, &n()).unwrap();
        assert!((played - v.value).abs() <= 1e-9, "{played} vs {}", v.value);
        let vs_alpha = best_response_p2(&spec, &part, 0, &x, &p, &q, &profile.alpha, &n()).unwrap();
        let vs_beta = best_response_p1(&spec, &part, 0, &x, &p, &q, &profile.beta, &n()).unwrap();
        assert!(vs_alpha.value <= v.value + 1e-9, "{} > {}", vs_alpha.value, v.value);
        assert!(vs_beta.value >= v.value - 1e-9, "{} < {}", vs_beta.value, v.value);
    }
}

#[test]
fn replayed_optimal_profile_matches_the_exact_value() {
    let spec = random_instance(4, 2, 1, 2, 2);
    let part = TimePartition::new(vec![0.0, 1.0]).unwrap();
    let (x, p, q) = ([0.3], [0.5, 0.5], [1.0]);
    let v = one_stage_value(&spec, 0.0, &x, &p, &q, &n()).unwrap();
    let profile = v.behavior_profile().unwrap();
    let cfg = McConfig { n_samples: 20_000, seed: 9, types: TypeAveraging::Sample };
    let est = payoff_mc(&spec, &profile, &part, 0, &x, &p, &q, &cfg, &n()).unwrap();
    assert!((est.mean - v.value).abs() <= 3.0 * est.stderr, "{est:?} vs {}", v.value);
    let g_max = 1.0 + 0.5 * 2.0;
    let episodes = simulate(&spec, &profile, &part, 0, &x, &p, &q, &cfg, &n()).unwrap();
    assert!(episodes.iter().all(|e| e.payoff.abs() <= g_max));
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let spec = random_instance(6, 2, 2, 2, 2);
    let part = TimePartition::uniform(1.0, 2).unwrap();
    let profile = exact_partition_value(&spec, &part, 0, &[0.0], &[0.5, 0.5], &[0.5, 0.5], &n())
        .unwrap()
        .behavior_profile()
        .unwrap();
    let cfg = McConfig { n_samples: 3000, seed: 17, types: TypeAveraging::Sample };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            payoff_mc(&spec, &profile, &part, 0, &[0.0], &[0.5, 0.5], &[0.5, 0.5], &cfg, &n()).unwrap()
        })
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

fn splitting_instance() -> GameSpec<f64> {
    let c = ControlSet::scalars(&[-1.0, 1.0]).unwrap();
    GameSpec::from_fns(
        1,
        1.0,
        ControlSet::single(),
        c,
        |_, _, v, o| o[0] = v[0],
        vec![vec![payoff(|x: &[f64]| x[0])], vec![payoff(|x: &[f64]| -x[0])]],
    )
    .unwrap()
}

#[test]
fn splitting_instance_is_strictly_convex_in_p() {
    let spec = splitting_instance();
    let part = TimePartition::new(vec![0.0, 1.0]).unwrap();
    let (pg, qg) = (SimplexGrid::new(2, 8).unwrap(), SimplexGrid::new(1, 1).unwrap());
    let probe = convexity_probe(&spec, &part, 0, &[0.25], &[0.5, 0.5], &[1.0], &pg, &qg, &n()).unwrap();
    assert!(probe.p_violation <= 1e-12);
    assert!(probe.p_max_second_difference > 0.25, "{probe:?}");
    // (p1 - p2) x + |p1 - p2| T.
    for (k, &val) in probe.p_values.iter().enumerate() {
        let p = pg.point::<f64>(k);
        assert!((val - ((p[0] - p[1]) * 0.25 + (p[0] - p[1]).abs())).abs() <= 1e-9);
    }
}

#[test]
fn mirror_instance_is_concave_in_q() {
    let spec = splitting_instance().reflected();
    let part = TimePartition::new(vec![0.0, 1.0]).unwrap();
    let (pg, qg) = (SimplexGrid::new(1, 1).unwrap(), SimplexGrid::new(2, 8).unwrap());
    let probe = convexity_probe(&spec, &part, 0, &[0.25], &[1.0], &[0.5, 0.5], &pg, &qg, &n()).unwrap();
    assert!(probe.q_violation <= 1e-12);
    let min_second = qg
        .line_triples()
        .iter()
        .map(|&(a, m, b)| probe.q_values[a] + probe.q_values[b] - 2.0 * probe.q_values[m])
        .fold(0.0, f64::min);
    assert!(min_second < -0.25);
}

#[test]
fn two_stage_values_are_convex_concave() {
    let spec = random_instance(8, 2, 2, 2, 2);
    let part = TimePartition::uniform(1.0, 2).unwrap();
    let g = SimplexGrid::new(2, 6).unwrap();
    let probe = convexity_probe(&spec, &part, 0, &[0.4], &[0.5, 0.5], &[0.5, 0.5], &g, &g, &n()).unwrap();
    assert!(probe.p_violation <= 1e-8 && probe.q_violation <= 1e-8, "{probe:?}");
}

#[test]
fn dual_reformulation_gaps() {
    let k = 40;
    let numerics = n();
    let single = random_instance(12, 1, 2, 2, 2);
    let r = check_dual_reformulation(&single, 0.0, &[0.1], &[0.3], &[0.5, 0.5], &SimplexGrid::new(1, k).unwrap(), &numerics)
        .unwrap();
    assert!(r.gap <= 1e-9, "{r:?}");

    let c = ControlSet::scalars(&[-1.0, 1.0]).unwrap();
    let lin = |a: f64| payoff(move |x: &[f64]| a * x[0]);
    let still = GameSpec::from_fns(1, 1.0, c.clone(), c, |_, _, _, o| o[0] = 0.0, vec![vec![lin(1.0), lin(2.0)], vec![lin(-1.0), lin(0.5)]])
        .unwrap();
    let (x, p_hat, q) = ([0.8], [0.4, -0.2], [0.25, 0.75]);
    let r = check_dual_reformulation(&still, 0.0, &x, &p_hat, &q, &SimplexGrid::new(2, k).unwrap(), &numerics).unwrap();
    let closed = (0..2)
        .map(|i| p_hat[i] - (0..2).map(|j| q[j] * still.payoff(i, j, &x)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(r.gap <= 1e-12 && (r.reformulated - closed).abs() <= 1e-12, "{r:?}");

    for seed in 0..3 {
        let spec = random_instance(20 + seed, 2, 2, 2, 2);
        let grid = SimplexGrid::new(2, k).unwrap();
        let r = check_dual_reformulation(&spec, 0.0, &[0.0], &[0.2, -0.1], &[0.4, 0.6], &grid, &numerics).unwrap();
        assert!(r.gap <= 2.0 / k as f64 + 1e-6, "{r:?}");
        assert!(r.conjugate <= r.reformulated + 1e-9);
    }
}

#[test]
fn brute_force_cap_is_enforced() {
    let spec = random_instance(0, 3, 1, 5, 2);
    let capped = NumericsConfig { brute_force_cap: 100, ..n() };
    let err = one_stage_value(&spec, 0.0, &[0.0], &[0.2, 0.3, 0.5], &[1.0], &capped).unwrap_err();
    assert_eq!(err, asymgame::Error::TooLarge { count: 125, cap: 100 });
}

fn echo(controls: usize, n: usize) -> RandomNadStrategy {
    let intervals = (0..n)
        .map(|l| IntervalRule {
            default: MixedStrategy::uniform(controls),
            rules: if l == 0 {
                vec![]
            } else {
                (0..controls.pow(l as u32))
                    .map(|code| {
                        let prefix: Vec<usize> = (0..l).map(|k| code / controls.pow(k as u32) % controls).collect();
                        let last = prefix[l - 1];
                        Rule { own: None, opp: Some(prefix), mix: MixedStrategy::pure(controls, last) }
                    })
                    .collect()
            },
        })
        .collect();
    RandomNadStrategy::new(controls, intervals).unwrap()
}

fn random_table(controls: usize, n: usize, seed: u64) -> RandomNadStrategy {
    let mut r = seed.wrapping_add(1);
    let mut next = move || {
        r ^= r << 13;
        r ^= r >> 7;
        r ^= r << 17;
        (r % 1000) as f64 + 1.0
    };
    let mut mix = |_| MixedStrategy::from_unnormalized((0..controls).map(|_| next()).collect()).unwrap();
    let intervals = (0..n)
        .map(|l| {
            let rules = (0..controls.pow(l as u32))
                .flat_map(|oc| (0..controls.pow(l as u32)).map(move |wc| (oc, wc)))
                .map(|(oc, wc)| {
                    let dec = |c: usize| (0..l).map(|k| c / controls.pow(k as u32) % controls).collect::<Vec<_>>();
                    (dec(wc), dec(oc))
                })
                .collect::<Vec<_>>();
            IntervalRule {
                default: mix(0),
                rules: rules.into_iter().map(|(own, opp)| Rule { own: Some(own), opp: Some(opp), mix: mix(0) }).collect(),
            }
        })
        .collect();
    RandomNadStrategy::new(controls, intervals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn fixpoint_is_unique_and_causal(sa in 0u64..1000, sb in 0u64..1000, seed in 0u64..1000, l in 0usize..3) {
        let part = TimePartition::uniform(1.0, 3).unwrap();
        let (alpha, beta) = (random_table(2, 3, sa), random_table(2, 3, sb));
        let omega = RandomSource::new(seed, 0);
        let (u, v) = resolve_controls(&alpha, &beta, &omega, &part).unwrap();
        // A second pass reproduces the pair: each strategy's reply to the other's path.
        for k in 0..3 {
            prop_assert_eq!(alpha.choose(k, &u[..k], &v[..k], omega.zeta(1, k)), u[k]);
            prop_assert_eq!(beta.choose(k, &v[..k], &u[..k], omega.zeta(2, k)), v[k]);
        }
        // Changing the opponent's control on interval l leaves own choices up to l unchanged.
        let mut w = v.clone();
        w[l] = 1 - w[l];
        for k in 0..=l {
            prop_assert_eq!(alpha.choose(k, &u[..k], &w[..k], omega.zeta(1, k)), u[k]);
        }
    }
}

#[test]
fn echo_strategy_lags_and_constants_stay_constant() {
    let part = TimePartition::uniform(1.0, 4).unwrap();
    let beta = RandomNadStrategy::open_loop(3, &[2, 0, 1, 1]).unwrap();
    let (u, v) = resolve_controls(&echo(3, 4), &beta, &RandomSource::new(2, 0), &part).unwrap();
    assert_eq!(&u[1..], &v[..3]);
    let c = RandomNadStrategy::constant(3, 4, MixedStrategy::pure(3, 1)).unwrap();
    let (u, v) = resolve_controls(&c, &c, &RandomSource::new(0, 0), &part).unwrap();
    assert_eq!((u, v), (vec![1; 4], vec![1; 4]));
}
