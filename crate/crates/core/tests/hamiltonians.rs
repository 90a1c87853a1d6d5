use asymgame::hamiltonian::{eval_h, eval_h_star, eval_inf_sup_dual};
use asymgame::model::{payoff, ControlSet, GameSpec};
use proptest::prelude::*;

fn random_spec(u: Vec<[f64; 2]>, v: Vec<[f64; 2]>) -> GameSpec<f64> {
    let us = ControlSet::from_points(u.iter().map(|p| p.to_vec()).collect()).unwrap();
    let vs = ControlSet::from_points(v.iter().map(|p| p.to_vec()).collect()).unwrap();
    GameSpec::from_fns(
        2,
        1.0,
        us,
        vs,
        |x, u, v, o| {
            o[0] = u[0] * v[1] - v[0] + 0.3 * x[1].sin();
            o[1] = u[1] * v[0] + u[0] * x[0] - v[1] * v[1];
        },
        vec![vec![payoff(|_: &[f64]| 0.0)]],
    )
    .unwrap()
}

fn controls() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(prop::array::uniform2(-1.0..1.0f64), 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn dual_hamiltonian_is_the_transposed_game(u in controls(), v in controls(),
        x in prop::array::uniform2(-1.0..1.0f64), xi in prop::array::uniform2(-3.0..3.0f64)) {
        let spec = random_spec(u, v);
        let star = eval_h_star(&spec, &x, &xi, 1e-9).unwrap().value;
        let neg = [-xi[0], -xi[1]];
        prop_assert_eq!(star, -eval_h(&spec, &x, &neg, 1e-9).unwrap().value);
        prop_assert!((star - eval_inf_sup_dual(&spec, &x, &xi, 1e-9).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn hamiltonian_is_homogeneous_lipschitz_and_sandwiched(u in controls(), v in controls(),
        x in prop::array::uniform2(-1.0..1.0f64), xi in prop::array::uniform2(-3.0..3.0f64),
        eta in prop::array::uniform2(-3.0..3.0f64), lambda in 0.01..20.0f64) {
        let spec = random_spec(u, v);
        let h = eval_h(&spec, &x, &xi, 1e-9).unwrap();
        let scaled = eval_h(&spec, &x, &[lambda * xi[0], lambda * xi[1]], 1e-9).unwrap();
        prop_assert!((scaled.value - lambda * h.value).abs() <= 1e-9 * (1.0 + lambda));
        let f_max = (0..spec.u_controls().len())
            .flat_map(|a| (0..spec.v_controls().len()).map(move |b| (a, b)))
            .map(|(a, b)| spec.f(&x, a, b).iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let other = eval_h(&spec, &x, &eta, 1e-9).unwrap().value;
        let dist = ((xi[0] - eta[0]).powi(2) + (xi[1] - eta[1]).powi(2)).sqrt();
        prop_assert!((h.value - other).abs() <= f_max * dist + 1e-9);
        prop_assert!(h.isaacs_gap >= -1e-12);
        let game = asymgame::hamiltonian::hamiltonian_game(&spec, &x, &xi).unwrap();
        let (infsup, supinf) = asymgame::matrix_game::pure_minimax(&game);
        prop_assert!(supinf - 1e-9 <= h.value && h.value <= infsup + 1e-9);
    }
}

#[test]
fn product_dynamics_have_a_pure_gap_of_two_xi() {
    let pm = ControlSet::scalars(&[-1.0, 1.0]).unwrap();
    let spec = GameSpec::from_fns(1, 1.0, pm.clone(), pm, |_, u, v, o| o[0] = u[0] * v[0], vec![vec![payoff(|_: &[f64]| 0.0)]])
        .unwrap();
    for k in 0..100 {
        let xi = -5.0 + 0.1 * k as f64 + 0.013;
        let e = eval_h(&spec, &[0.0], &[xi], 1e-9).unwrap();
        assert!(e.value.abs() <= 1e-9);
        assert!((e.isaacs_gap - 2.0 * xi.abs()).abs() <= 1e-9);
    }
}
