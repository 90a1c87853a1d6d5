use asymgame::matrix_game::{certificate_gap, pure_minimax, solve, MatrixGame};
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

/// Equal-size support enumeration; the row player minimizes.
fn support_enumeration(a: &[Vec<f64>]) -> Option<f64> {
    let (m, n) = (a.len(), a[0].len());
    for size in 1..=m.min(n) {
        for rows in subsets(m, size) {
            for cols in subsets(n, size) {
                // Unknowns: weights on the support and the value.
                let solve_side = |sup: &[usize], other: &[usize], entry: &dyn Fn(usize, usize) -> f64| {
                    let k = sup.len();
                    let mut mat = DMatrix::<f64>::zeros(k + 1, k + 1);
                    let mut rhs = DVector::<f64>::zeros(k + 1);
                    for (r, &o) in other.iter().enumerate() {
                        for (c, &s) in sup.iter().enumerate() {
                            mat[(r, c)] = entry(s, o);
                        }
                        mat[(r, k)] = -1.0;
                    }
                    for c in 0..k {
                        mat[(k, c)] = 1.0;
                    }
                    rhs[k] = 1.0;
                    mat.lu().solve(&rhs)
                };
                let Some(x) = solve_side(&rows, &cols, &|i, j| a[i][j]) else { continue };
                let Some(y) = solve_side(&cols, &rows, &|j, i| a[i][j]) else { continue };
                let v = x[size];
                if x.iter().take(size).chain(y.iter().take(size)).any(|&w| w < -1e-12) {
                    continue;
                }
                let row_ok = (0..n).all(|j| rows.iter().enumerate().map(|(r, &i)| x[r] * a[i][j]).sum::<f64>() <= v + 1e-9);
                let col_ok = (0..m).all(|i| cols.iter().enumerate().map(|(c, &j)| y[c] * a[i][j]).sum::<f64>() >= v - 1e-9);
                if row_ok && col_ok {
                    return Some(v);
                }
            }
        }
    }
    None
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n)).filter(|b| b.count_ones() as usize == k).map(|b| (0..n).filter(|i| b >> i & 1 == 1).collect()).collect()
}

fn game(rows: &[Vec<f64>]) -> MatrixGame<f64> {
    MatrixGame::from_rows(rows.to_vec()).unwrap()
}

fn matrix(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(-10.0..10.0f64, n), m))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(300) })]

    #[test]
    fn value_is_sandwiched_and_certified(a in matrix(8)) {
        let g = game(&a);
        let s = solve(&g, 1e-9).unwrap();
        let (infsup, supinf) = pure_minimax(&g);
        prop_assert!(supinf - 1e-9 <= s.value && s.value <= infsup + 1e-9);
        prop_assert!(s.certificate_gap.abs() <= 1e-9);
        let payoffs = g.col_payoffs(s.row_mix.weights());
        prop_assert!(payoffs.iter().all(|&c| c <= s.value + 1e-9));
        let payoffs = g.row_payoffs(s.col_mix.weights());
        prop_assert!(payoffs.iter().all(|&r| r >= s.value - 1e-9));
    }

    #[test]
    fn affine_maps_move_only_the_value(a in matrix(6), scale in 0.1..10.0f64, shift in -5.0..5.0f64) {
        let g = game(&a);
        let moved = game(&a.iter().map(|r| r.iter().map(|&v| scale * v + shift).collect()).collect::<Vec<_>>());
        let (s, t) = (solve(&g, 1e-9).unwrap(), solve(&moved, 1e-8).unwrap());
        prop_assert!((t.value - (scale * s.value + shift)).abs() <= 1e-8 * (1.0 + t.value.abs()));
        for (x, y) in s.row_mix.weights().iter().zip(t.row_mix.weights()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for (x, y) in s.col_mix.weights().iter().zip(t.col_mix.weights()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn negated_transpose_negates_the_value(a in matrix(8)) {
        let g = game(&a);
        let v = solve(&g, 1e-9).unwrap().value;
        let w = solve(&g.negated_transpose(), 1e-9).unwrap().value;
        prop_assert!((v + w).abs() <= 1e-9);
    }

    #[test]
    fn small_games_match_support_enumeration(a in (2..=3usize).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-5.0..5.0f64, n), n))) {
        let v = solve(&game(&a), 1e-9).unwrap().value;
        let oracle = support_enumeration(&a).expect("nondegenerate game has an equilibrium support");
        prop_assert!((v - oracle).abs() <= 1e-9, "{v} vs {oracle}");
    }
}

#[test]
fn exact_rational_solve_of_a_mixed_game() {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let g = MatrixGame::from_rows(vec![vec![r(3, 1), r(-1, 2), r(0, 1)], vec![r(-2, 1), r(5, 3), r(1, 1)]]).unwrap();
    let s = solve(&g, r(0, 1)).unwrap();
    assert_eq!(certificate_gap(&g, s.row_mix.weights(), s.col_mix.weights()), r(0, 1));
    let f = MatrixGame::from_rows(vec![vec![3.0, -0.5, 0.0], vec![-2.0, 5.0 / 3.0, 1.0]]).unwrap();
    let approx = solve(&f, 1e-9).unwrap().value;
    let exact = s.value.to_f64().unwrap();
    assert!((approx - exact).abs() < 1e-12);
}

#[test]
fn single_precision_solve_agrees() {
    let g = MatrixGame::<f32>::from_rows(vec![vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap();
    let s = solve(&g, 1e-5).unwrap();
    assert!((s.value - 1.5).abs() < 1e-5);
}
