use asymgame::fenchel::DualBox;
use asymgame::hamiltonian::NodeHamiltonian;
use asymgame::hji::*;
use asymgame::model::*;
use asymgame::numerics::NumericsConfig;
use asymgame::Error;

fn pm1() -> ControlSet<f64> {
    ControlSet::scalars(&[-1.0, 1.0]).unwrap()
}

fn eikonal() -> GameSpec<f64> {
    GameSpec::from_fns(1, 1.0, pm1(), ControlSet::single(), |_, u, _, o| o[0] = u[0], vec![vec![payoff(|x: &[f64]| x[0].abs())]])
        .unwrap()
}

fn grids_1d(spec: &GameSpec<f64>, half_width: f64, dx: f64, k: usize, radius: f64, dual_nodes: usize) -> PdeGrids<f64> {
    let n = (2.0 * half_width / dx).round() as usize + 1;
    let state = StateGrid::new(vec![-half_width], vec![half_width], vec![n]).unwrap();
    let f_max = spec.f_max(&state).unwrap();
    let bound = cfl_bound(&state, 1.05 * f_max);
    let steps = if bound.is_finite() { (spec.horizon() / bound).ceil() as usize } else { 4 };
    let time = TimePartition::uniform(spec.horizon(), steps).unwrap();
    PdeGrids::new(
        state,
        time,
        SimplexGrid::new(spec.types_p(), k).unwrap(),
        SimplexGrid::new(spec.types_q(), k).unwrap(),
        DualBox::new(spec.types_p(), radius, dual_nodes).unwrap(),
        DualBox::new(spec.types_q(), radius, dual_nodes).unwrap(),
    )
    .unwrap()
}

fn both_routes(spec: &GameSpec<f64>, grids: &PdeGrids<f64>) -> (ValueField<f64>, ValueField<f64>) {
    let nm = NumericsConfig::default();
    let v = recover_primal(&solve_dual_v(spec, grids, &nm).unwrap(), grids, &nm).unwrap();
    let w = recover_primal(&solve_dual_w(spec, grids, &nm).unwrap(), grids, &nm).unwrap();
    (v.field, w.field)
}

fn eikonal_error(dx: f64) -> (f64, f64, f64) {
    let spec = eikonal();
    let grids = grids_1d(&spec, 3.0, dx, 1, 2.0, 3);
    let (v, w) = both_routes(&spec, &grids);
    let mut err: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for (k, &t) in grids.time.knots().iter().enumerate() {
        let mask = certified_mask(&grids, 1.0, k);
        for x in 0..grids.state.len() {
            if mask[x] {
                let exact = (grids.state.point(x)[0].abs() - (1.0 - t)).max(0.0);
                err = err.max((v.at(k, x, 0, 0) - exact).abs());
                gap = gap.max((v.at(k, x, 0, 0) - w.at(k, x, 0, 0)).abs());
            }
        }
    }
    (err, grids.time.mesh(), gap)
}

#[test]
fn eikonal_matches_characteristics() {
    let (e1, dt1, gap) = eikonal_error(0.04);
    assert!(e1 <= 3.0 * (0.04 + dt1), "error {e1}");
    assert!(gap <= 1e-12);
    let (e2, dt2, _) = eikonal_error(0.02);
    assert!(e2 <= 3.0 * (0.02 + dt2));
    // Diffusive smoothing of the moving kink limits the order to about 1/2.
    let order = (e1 / e2).log2();
    assert!(order >= 0.5, "order {order}");
}

#[test]
fn zero_dynamics_freeze_the_dual_field() {
    let c = ControlSet::single();
    let spec = GameSpec::from_fns(
        1,
        1.0,
        c.clone(),
        c,
        |_, _, _, o| o[0] = 0.0,
        vec![vec![payoff(|x: &[f64]| x[0]), payoff(|x: &[f64]| 0.5 - x[0])], vec![payoff(|x: &[f64]| -x[0] * x[0]), payoff(|_: &[f64]| 0.25)]],
    )
    .unwrap();
    let grids = grids_1d(&spec, 1.0, 0.25, 4, 2.0, 9);
    let nm = NumericsConfig::default();
    let d = solve_dual_v(&spec, &grids, &nm).unwrap();
    let (nt, nx, na, nb) = d.shape();
    for a in 0..na {
        for b in 0..nb {
            for x in 0..nx {
                let last = d.at(nt - 1, x, a, b);
                let exact = dual_terminal(&spec, &grids.state.point(x), &grids.dual_p.point(a), &grids.q_grid.point(b));
                assert_eq!(last, exact);
                for k in 0..nt {
                    assert_eq!(d.at(k, x, a, b), last);
                }
            }
        }
    }
    // Recovered values equal the bilinear payoff up to the dual-box spacing.
    let (v, w) = both_routes(&spec, &grids);
    let h = grids.dual_p.spacing();
    for k in 0..nt {
        for x in 0..nx {
            for p in 0..grids.p_grid.len() {
                for q in 0..grids.q_grid.len() {
                    let pt = grids.state.point(x);
                    let want = spec.bilinear_payoff(&pt, &grids.p_grid.point(p), &grids.q_grid.point(q));
                    assert!((v.at(k, x, p, q) - want).abs() <= h + 1e-12);
                    assert!((w.at(k, x, p, q) - want).abs() <= h + 1e-12);
                }
            }
        }
    }
    let samples: Vec<SubDppSample> = (0..nx).map(|x| SubDppSample { knot: 0, node: x, dual: 3, belief: 1 }).collect();
    assert_eq!(check_subdpp(&d, &spec, &grids, &samples, &nm).unwrap().max_violation, 0.0);
}

#[test]
fn cancelling_controls_keep_the_payoff() {
    let spec = GameSpec::from_fns(1, 0.5, pm1(), pm1(), |_, u, v, o| o[0] = u[0] + v[0], vec![vec![payoff(|x: &[f64]| x[0].sin())]])
        .unwrap();
    let grids = grids_1d(&spec, 2.0, 0.05, 1, 2.0, 3);
    let (v, _) = both_routes(&spec, &grids);
    let h = NodeHamiltonian::new(&spec, &grids.state, &NumericsConfig::default()).unwrap();
    for node in 0..grids.state.len() {
        assert!(h.h_star(node, &[0.7]).unwrap().abs() < 1e-12);
        assert!(h.h_star(node, &[-0.3]).unwrap().abs() < 1e-12);
    }
    // Only artificial viscosity acts; it is O(dx) on smooth data.
    for x in 0..grids.state.len() {
        let want = grids.state.point(x)[0].sin();
        assert!((v.at(0, x, 0, 0) - want).abs() < 0.05);
    }
}

#[test]
fn terminal_slice_recovers_the_bilinear_form() {
    let spec = GameSpec::from_fns(
        1,
        0.3,
        pm1(),
        pm1(),
        |_, u, v, o| o[0] = u[0] * v[0],
        vec![vec![payoff(|x: &[f64]| x[0])], vec![payoff(|x: &[f64]| -0.5 * x[0])]],
    )
    .unwrap();
    // Payoffs are multiples of 1/4 at the nodes; the dual spacing is 1/4.
    let grids = grids_1d(&spec, 1.0, 0.5, 4, 2.0, 17);
    let (v, _) = both_routes(&spec, &grids);
    let nt = grids.time.knots().len();
    for x in 0..grids.state.len() {
        for p in 0..grids.p_grid.len() {
            let want = spec.bilinear_payoff(&grids.state.point(x), &grids.p_grid.point(p), &[1.0]);
            assert!((v.at(nt - 1, x, p, 0) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn degenerate_beliefs_reduce_to_single_type_runs() {
    let g1 = payoff(|x: &[f64]| (x[0] - 0.5).abs());
    let g2 = payoff(|x: &[f64]| -x[0]);
    let dynamics = |_: &[f64], u: &[f64], v: &[f64], o: &mut [f64]| o[0] = u[0] + 0.5 * v[0];
    let two = GameSpec::from_fns(1, 0.5, pm1(), pm1(), dynamics, vec![vec![g1.clone()], vec![g2.clone()]]).unwrap();
    let grids = grids_1d(&two, 2.5, 0.05, 4, 4.0, 17);
    let (v, _) = both_routes(&two, &grids);
    let mask = certified_mask(&grids, 1.5, 0);
    for (g, vertex) in [(g1, 0usize), (g2, 1usize)] {
        let one = GameSpec::from_fns(1, 0.5, pm1(), pm1(), dynamics, vec![vec![g]]).unwrap();
        let g_one = grids_1d(&one, 2.5, 0.05, 1, 4.0, 3);
        let (v1, _) = both_routes(&one, &g_one);
        let p = grids.p_grid.vertex(vertex);
        for x in 0..grids.state.len() {
            if mask[x] {
                assert!((v.at(0, x, p, 0) - v1.at(0, x, 0, 0)).abs() < 1e-9);
            }
        }
    }
    assert!(v.convexity_violation_p(&grids.p_grid) <= 1e-8);
}

#[test]
fn reflected_game_maps_the_w_route_onto_the_v_route() {
    let spec = GameSpec::from_fns(
        1,
        0.4,
        pm1(),
        ControlSet::scalars(&[-1.0, 0.0, 1.0]).unwrap(),
        |x, u, v, o| o[0] = u[0] * v[0] + 0.3 * v[0] - 0.2 * x[0],
        vec![vec![payoff(|x: &[f64]| x[0]), payoff(|x: &[f64]| x[0].abs() - 0.5)]],
    )
    .unwrap();
    let grids = grids_1d(&spec, 2.0, 0.1, 4, 2.5, 11);
    let refl = spec.reflected();
    let rgrids = PdeGrids::new(
        grids.state.clone(),
        grids.time.clone(),
        (*grids.q_grid).clone(),
        (*grids.p_grid).clone(),
        grids.dual_q.clone(),
        grids.dual_p.clone(),
    )
    .unwrap();
    let nm = NumericsConfig::default();
    let w = solve_dual_w(&spec, &grids, &nm).unwrap();
    let v = solve_dual_v(&refl, &rgrids, &nm).unwrap();
    let (nt, nx, na, nb) = w.shape();
    let n = grids.dual_q.nodes_per_axis();
    for a in 0..na {
        let idx = grids.dual_q.axis_indices(a);
        let mirrored = idx.iter().fold(0, |acc, &i| acc * n + (n - 1 - i));
        for b in 0..nb {
            for k in 0..nt {
                for x in 0..nx {
                    assert!((w.at(k, x, a, b) + v.at(k, x, mirrored, b)).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn scheme_is_monotone() {
    let spec = GameSpec::from_fns(
        2,
        1.0,
        ControlSet::from_points(vec![vec![1.0, 0.0], vec![0.0, -1.0], vec![-0.5, 0.5]]).unwrap(),
        pm1(),
        |x, u, v, o| {
            o[0] = u[0] * v[0] + 0.3 * x[1];
            o[1] = u[1] - 0.2 * v[0];
        },
        vec![vec![payoff(|_: &[f64]| 0.0)]],
    )
    .unwrap();
    let grid = StateGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![7, 7]).unwrap();
    let nm = NumericsConfig::default();
    let h = NodeHamiltonian::new(&spec, &grid, &nm).unwrap();
    let sigma = viscosity(h.f_max(), &nm);
    let dt = cfl_bound(&grid, sigma);
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..20 {
        let base: Vec<f64> = (0..grid.len()).map(|_| next() * 2.0 - 1.0).collect();
        let mut bumped = base.clone();
        let at = (next() * grid.len() as f64) as usize % grid.len();
        bumped[at] += next() * 0.5;
        let (mut a, mut b) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
        lf_sweep(&h, &grid, sigma, dt, &base, &mut a).unwrap();
        lf_sweep(&h, &grid, sigma, dt, &bumped, &mut b).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(y >= &(x - 1e-12));
        }
    }
}

#[test]
fn comparison_principle_and_time_lipschitz() {
    let dynamics = |_: &[f64], u: &[f64], v: &[f64], o: &mut [f64]| o[0] = u[0] * v[0] + 0.5 * u[0];
    let lower = GameSpec::from_fns(
        1,
        0.5,
        pm1(),
        pm1(),
        dynamics,
        vec![vec![payoff(|x: &[f64]| x[0].abs() - 0.5)], vec![payoff(|x: &[f64]| x[0].sin())]],
    )
    .unwrap();
    let upper = lower
        .with_payoffs(vec![vec![payoff(|x: &[f64]| x[0].abs())], vec![payoff(|x: &[f64]| x[0].sin() + 0.1 * x[0] * x[0])]])
        .unwrap();
    let grids = grids_1d(&lower, 2.0, 0.1, 4, 3.0, 13);
    let (v1, _) = both_routes(&lower, &grids);
    let (v2, _) = both_routes(&upper, &grids);
    for (a, b) in v1.values().iter().zip(v2.values()) {
        assert!(*a <= b + 1e-8);
    }
    let (nt, nx, np, nq) = v1.shape();
    let f_max = 1.5;
    let mut worst_slope: f64 = 0.0;
    for k in 0..nt {
        for x in 0..nx - 1 {
            for p in 0..np {
                let dv = (v1.at(k, x + 1, p, 0) - v1.at(k, x, p, 0)).abs() / 0.1;
                worst_slope = worst_slope.max(dv);
            }
        }
    }
    for k in 0..nt - 1 {
        let dt = grids.time.step(k);
        for x in 0..nx {
            for p in 0..np {
                for q in 0..nq {
                    let dv = (v1.at(k, x, p, q) - v1.at(k + 1, x, p, q)).abs();
                    assert!(dv <= (1.05 * f_max * worst_slope + 1.0) * dt);
                }
            }
        }
    }
}

#[test]
fn subdpp_residual_is_consistent() {
    let spec = eikonal();
    let nm = NumericsConfig::default();
    let mut last = f64::INFINITY;
    for dx in [0.04, 0.02] {
        let grids = grids_1d(&spec, 3.0, dx, 1, 2.0, 3);
        let d = solve_dual_v(&spec, &grids, &nm).unwrap();
        let nt = grids.time.knots().len();
        let samples: Vec<SubDppSample> = (0..200)
            .map(|s| {
                let k = (s * 7) % (nt - 1);
                let mask = certified_mask(&grids, 1.0, k);
                let inside: Vec<usize> = (0..grids.state.len()).filter(|&x| mask[x]).collect();
                SubDppSample { knot: k, node: inside[(s * 13) % inside.len()], dual: s % 3, belief: 0 }
            })
            .collect();
        let r = check_subdpp(&d, &spec, &grids, &samples, &nm).unwrap();
        assert!(r.max_violation <= 5.0 * (dx + grids.time.mesh()), "{}", r.max_violation);
        assert!(r.max_violation < last);
        last = r.max_violation;
    }
}

#[test]
fn cfl_violation_is_rejected() {
    let spec = eikonal();
    let state = StateGrid::new(vec![-1.0], vec![1.0], vec![41]).unwrap();
    let grids = PdeGrids::new(
        state,
        TimePartition::uniform(1.0, 4).unwrap(),
        SimplexGrid::new(1, 1).unwrap(),
        SimplexGrid::new(1, 1).unwrap(),
        DualBox::new(1, 1.0, 3).unwrap(),
        DualBox::new(1, 1.0, 3).unwrap(),
    )
    .unwrap();
    let err = solve_dual_v(&spec, &grids, &NumericsConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Cfl { step: 0, .. }));
}
