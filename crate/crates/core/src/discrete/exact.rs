//! Exact values of small partition games by enumeration of pure decision
//! tables, and the diagnostics built on them.
//!
//! A pure table of one type fixes the control on interval `l` as a function
//! of the opponent's controls on intervals `0..l`. Mixing over joint table
//! profiles realizes every random strategy of the finite-table class: the
//! payoff only depends on each type's marginal over tables, and by perfect
//! recall each marginal is equivalent to a behavior strategy reading its own
//! past controls.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discrete::play::{path_distribution, terminal_state};
use crate::discrete::strategy::{IntervalRule, RandomNadStrategy, Rule, StrategyProfile};
use crate::error::{Error, Result};
use crate::fenchel::{convex_conjugate, SimplexFunction};
use crate::matrix_game::{solve, MatrixGame, Saddle};
use crate::model::{GameSpec, MixedStrategy, SimplexGrid, TimePartition};
use crate::numerics::NumericsConfig;

/// Base-`base` little-endian code of a control prefix.
fn prefix_code(prefix: &[usize], base: usize) -> usize {
    prefix.iter().rev().fold(0, |acc, &c| acc * base + c)
}

fn prefix_from_code(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(code % base);
        code /= base;
    }
    out
}

/// A deterministic decision table: `choices[l][code(opp prefix)]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureTable {
    pub choices: Vec<Vec<usize>>,
}

impl PureTable {
    pub fn choose(&self, l: usize, opp: &[usize], opp_controls: usize) -> usize {
        self.choices[l][prefix_code(opp, opp_controls)]
    }

    /// The same rule as a strategy keyed on the opponent prefix.
    pub fn to_strategy(&self, own_controls: usize, opp_controls: usize) -> RandomNadStrategy {
        let intervals = self
            .choices
            .iter()
            .enumerate()
            .map(|(l, row)| {
                if l == 0 {
                    return IntervalRule { default: MixedStrategy::pure(own_controls, row[0]), rules: vec![] };
                }
                let rules = row
                    .iter()
                    .enumerate()
                    .map(|(code, &c)| Rule {
                        own: None,
                        opp: Some(prefix_from_code(code, opp_controls, l)),
                        mix: MixedStrategy::pure(own_controls, c),
                    })
                    .collect();
                IntervalRule { default: MixedStrategy::pure(own_controls, row[0]), rules }
            })
            .collect();
        RandomNadStrategy { controls: own_controls, intervals }
    }
}

/// Number of pure tables of one type, or `None` on overflow.
pub fn table_count(own: usize, opp: usize, intervals: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut keys: usize = 1;
    for _ in 0..intervals {
        total = total.checked_mul(own.checked_pow(u32::try_from(keys).ok()?)?)?;
        keys = keys.checked_mul(opp)?;
    }
    Some(total)
}

/// Every pure table of one type, in lexicographic order of the flattened choices.
pub fn enumerate_tables(own: usize, opp: usize, intervals: usize, cap: usize) -> Result<Vec<PureTable>> {
    let count = table_count(own, opp, intervals).filter(|&c| c <= cap).ok_or(Error::TooLarge {
        count: table_count(own, opp, intervals).unwrap_or(usize::MAX),
        cap,
    })?;
    let widths: Vec<usize> = (0..intervals).map(|l| opp.pow(l as u32)).collect();
    let mut out = Vec::with_capacity(count);
    for mut code in 0..count {
        let choices = widths
            .iter()
            .map(|&w| {
                (0..w)
                    .map(|_| {
                        let c = code % own;
                        code /= own;
                        c
                    })
                    .collect()
            })
            .collect();
        out.push(PureTable { choices });
    }
    Ok(out)
}

fn checked_profiles(per_type: usize, types: usize, cap: usize) -> Result<usize> {
    per_type
        .checked_pow(types as u32)
        .filter(|&c| c <= cap)
        .ok_or(Error::TooLarge { count: per_type.checked_pow(types as u32).unwrap_or(usize::MAX), cap })
}

/// Exact value of the partition game from knot `start`, with optimal mixes.
#[derive(Debug, Clone)]
pub struct ExactValue {
    pub value: f64,
    pub saddle: Saddle<f64>,
    pub tables_p: Vec<PureTable>,
    pub tables_q: Vec<PureTable>,
    /// Player 1's mix over tables, per type.
    pub marginals_p: Vec<Vec<f64>>,
    /// Player 2's mix over tables, per type.
    pub marginals_q: Vec<Vec<f64>>,
    controls: (usize, usize),
}

impl ExactValue {
    /// Behavior strategies equivalent to the optimal table mixes.
    pub fn behavior_profile(&self) -> Result<StrategyProfile> {
        let (nu, nv) = self.controls;
        let alpha = self.marginals_p.iter().map(|w| to_behavior(&self.tables_p, w, nu, nv)).collect::<Result<_>>()?;
        let beta = self.marginals_q.iter().map(|w| to_behavior(&self.tables_q, w, nv, nu)).collect::<Result<_>>()?;
        Ok(StrategyProfile::new(alpha, beta))
    }
}

/// Kuhn conversion of a mix over tables into a behavior strategy.
///
/// On interval `l`, after own prefix `own` and opponent prefix `opp`, the
/// action law is that of the tables consistent with `own` given `opp`.
/// Unreachable histories fall back to the unconditional law of interval `l`.
pub fn to_behavior(tables: &[PureTable], weights: &[f64], own_controls: usize, opp_controls: usize) -> Result<RandomNadStrategy> {
    if tables.len() != weights.len() || tables.is_empty() {
        return Err(Error::InvalidMix("one weight per table required".into()));
    }
    let n = tables[0].choices.len();
    let mut intervals = Vec::with_capacity(n);
    for l in 0..n {
        let mut rules = Vec::new();
        let mut overall = vec![0.0; own_controls];
        for opp_code in 0..opp_controls.pow(l as u32) {
            let opp = prefix_from_code(opp_code, opp_controls, l);
            for own_code in 0..own_controls.pow(l as u32) {
                let own = prefix_from_code(own_code, own_controls, l);
                let mut mass = vec![0.0; own_controls];
                for (t, &w) in tables.iter().zip(weights) {
                    if w > 0.0 && (0..l).all(|k| t.choose(k, &opp[..k], opp_controls) == own[k]) {
                        mass[t.choose(l, &opp, opp_controls)] += w;
                    }
                }
                if l == 0 {
                    overall = mass.clone();
                }
                if l > 0 && mass.iter().sum::<f64>() > 0.0 {
                    rules.push(Rule {
                        own: Some(own),
                        opp: Some(opp.clone()),
                        mix: MixedStrategy::from_unnormalized(mass)?,
                    });
                }
            }
        }
        if l > 0 {
            for (t, &w) in tables.iter().zip(weights) {
                overall[t.choices[l][0]] += w;
            }
        }
        intervals.push(IntervalRule { default: MixedStrategy::from_unnormalized(overall)?, rules });
    }
    RandomNadStrategy::new(own_controls, intervals)
}

/// Terminal states of every pair of pure tables, `states[a][b]`.
fn pairwise_states(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    tables_p: &[PureTable],
    tables_q: &[PureTable],
    numerics: &NumericsConfig<f64>,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    let n = partition.steps() - start;
    tables_p
        .iter()
        .map(|a| {
            tables_q
                .iter()
                .map(|b| {
                    let (mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n));
                    for l in 0..n {
                        let cu = a.choose(l, &v, nv);
                        let cv = b.choose(l, &u, nu);
                        u.push(cu);
                        v.push(cv);
                    }
                    terminal_state(spec, partition, start, x, &u, &v, numerics)
                })
                .collect()
        })
        .collect()
}

/// `V^pi(t_start, x, p, q)` over all pure-table profiles, solved exactly.
///
/// Rows are player 1's profiles `(a_1, ..., a_I)`, indexed with `a_1`
/// fastest; columns are player 2's profiles.
#[allow(clippy::too_many_arguments)]
pub fn exact_partition_value(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    numerics: &NumericsConfig<f64>,
) -> Result<ExactValue> {
    let (ni, nj) = (spec.types_p(), spec.types_q());
    for (len, want) in [(x.len(), spec.dim()), (p.len(), ni), (q.len(), nj)] {
        if len != want {
            return Err(Error::DimensionMismatch { expected: want, got: len });
        }
    }
    if start >= partition.steps() {
        return Err(Error::StrategyMismatch(format!("knot {start} is not before the horizon")));
    }
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    let n = partition.steps() - start;
    let cap = numerics.brute_force_cap;
    let tables_p = enumerate_tables(nu, nv, n, cap)?;
    let tables_q = enumerate_tables(nv, nu, n, cap)?;
    let (tp, tq) = (tables_p.len(), tables_q.len());
    let rows = checked_profiles(tp, ni, cap)?;
    let cols = checked_profiles(tq, nj, cap)?;
    let states = pairwise_states(spec, partition, start, x, &tables_p, &tables_q, numerics)?;
    // g[i][j][a * tq + b] = g_ij(X^{a, b}).
    let g: Vec<Vec<Vec<f64>>> = (0..ni)
        .map(|i| {
            (0..nj)
                .map(|j| states.iter().flat_map(|row| row.iter().map(|s| spec.payoff(i, j, s))).collect())
                .collect()
        })
        .collect();
    let game = MatrixGame::from_fn(rows, cols, |r, c| {
        let a = prefix_from_code(r, tp, ni);
        let b = prefix_from_code(c, tq, nj);
        let mut acc = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            for (j, &qj) in q.iter().enumerate() {
                acc += pi * qj * g[i][j][a[i] * tq + b[j]];
            }
        }
        acc
    })?;
    let saddle = solve(&game, numerics.tol_game)?;
    let marginals = |mix: &[f64], per: usize, types: usize| -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; per]; types];
        for (r, &w) in mix.iter().enumerate() {
            for (t, &a) in prefix_from_code(r, per, types).iter().enumerate() {
                out[t][a] += w;
            }
        }
        out
    };
    Ok(ExactValue {
        value: saddle.value,
        marginals_p: marginals(saddle.row_mix.weights(), tp, ni),
        marginals_q: marginals(saddle.col_mix.weights(), tq, nj),
        saddle,
        tables_p,
        tables_q,
        controls: (nu, nv),
    })
}

/// The one-interval game on `[t, T]`.
pub fn one_stage_partition(spec: &GameSpec<f64>, t: f64) -> Result<TimePartition<f64>> {
    TimePartition::new(vec![0.0, spec.horizon() - t])
}

/// `V^pi(t, x, p, q)` for the single-interval partition of `[t, T]`.
///
/// The game is autonomous, so it is played on `[0, T - t]`.
pub fn one_stage_value(
    spec: &GameSpec<f64>,
    t: f64,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    numerics: &NumericsConfig<f64>,
) -> Result<ExactValue> {
    exact_partition_value(spec, &one_stage_partition(spec, t)?, 0, x, p, q, numerics)
}

/// Best responses over pure tables to a fixed opponent profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// `sum_i p_i` (resp. `sum_j q_j`) of the per-type best values.
    pub value: f64,
    /// Best table index and its value, per type.
    pub per_type: Vec<(usize, f64)>,
}

fn type_values(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    alpha: &RandomNadStrategy,
    beta: &RandomNadStrategy,
    numerics: &NumericsConfig<f64>,
) -> Result<Vec<Vec<f64>>> {
    let paths = path_distribution(alpha, beta)?;
    let mut out = vec![vec![0.0; spec.types_q()]; spec.types_p()];
    for (u, v, w) in paths {
        let s = terminal_state(spec, partition, start, x, &u, &v, numerics)?;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += w * spec.payoff(i, j, &s);
            }
        }
    }
    Ok(out)
}

/// Player 1 minimizes `sum_j q_j E[g_ij]` per type against `beta`.
///
/// The result bounds what `beta` guarantees for player 2.
#[allow(clippy::too_many_arguments)]
pub fn best_response_p1(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    beta: &[RandomNadStrategy],
    numerics: &NumericsConfig<f64>,
) -> Result<BestResponse> {
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    let tables = enumerate_tables(nu, nv, partition.steps() - start, numerics.brute_force_cap)?;
    let mut per_type = vec![(0, f64::INFINITY); spec.types_p()];
    for (k, t) in tables.iter().enumerate() {
        let alpha = t.to_strategy(nu, nv);
        let mut by_type = vec![0.0; spec.types_p()];
        for (j, &qj) in q.iter().enumerate() {
            if qj > 0.0 {
                let vals = type_values(spec, partition, start, x, &alpha, &beta[j], numerics)?;
                for (i, acc) in by_type.iter_mut().enumerate() {
                    *acc += qj * vals[i][j];
                }
            }
        }
        for (best, val) in per_type.iter_mut().zip(by_type) {
            if val < best.1 {
                *best = (k, val);
            }
        }
    }
    let value = per_type.iter().zip(p).map(|(b, &pi)| pi * b.1).sum();
    Ok(BestResponse { value, per_type })
}

/// Player 2 maximizes `sum_i p_i E[g_ij]` per type against `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn best_response_p2(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    alpha: &[RandomNadStrategy],
    numerics: &NumericsConfig<f64>,
) -> Result<BestResponse> {
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    let tables = enumerate_tables(nv, nu, partition.steps() - start, numerics.brute_force_cap)?;
    let mut per_type = vec![(0, f64::NEG_INFINITY); spec.types_q()];
    for (k, t) in tables.iter().enumerate() {
        let beta = t.to_strategy(nv, nu);
        let mut by_type = vec![0.0; spec.types_q()];
        for (i, &pi) in p.iter().enumerate() {
            if pi > 0.0 {
                let vals = type_values(spec, partition, start, x, &alpha[i], &beta, numerics)?;
                for (j, acc) in by_type.iter_mut().enumerate() {
                    *acc += pi * vals[i][j];
                }
            }
        }
        for (best, val) in per_type.iter_mut().zip(by_type) {
            if val > best.1 {
                *best = (k, val);
            }
        }
    }
    let value = per_type.iter().zip(q).map(|(b, &qj)| qj * b.1).sum();
    Ok(BestResponse { value, per_type })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReformulationReport {
    /// Convex conjugate of the one-stage value over the p-grid, at `p_hat`.
    pub conjugate: f64,
    /// `inf_beta sup_(i, u) [p_hat_i - sum_j q_j E g_ij]`, solved exactly.
    pub reformulated: f64,
    pub gap: f64,
}

/// Compares the conjugate of the one-stage value in `p` with its
/// reformulation as a game where player 1 also picks the type.
///
/// The right side is the matrix game with rows the pure profiles
/// `(v_1, ..., v_J)` of player 2 (minimizing) and columns the pairs `(i, u)`,
/// entries `p_hat_i - sum_j q_j g_ij(X^{u, v_j})`.
#[allow(clippy::too_many_arguments)]
pub fn check_dual_reformulation(
    spec: &GameSpec<f64>,
    t: f64,
    x: &[f64],
    p_hat: &[f64],
    q: &[f64],
    p_grid: &SimplexGrid,
    numerics: &NumericsConfig<f64>,
) -> Result<DualReformulationReport> {
    let (ni, nj) = (spec.types_p(), spec.types_q());
    if p_hat.len() != ni || p_grid.dim() != ni {
        return Err(Error::DimensionMismatch { expected: ni, got: p_hat.len().max(p_grid.dim()) });
    }
    let vals = (0..p_grid.len())
        .map(|k| one_stage_value(spec, t, x, &p_grid.point::<f64>(k), q, numerics).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let w = SimplexFunction::new(Arc::new(p_grid.clone()), vals)?;
    let conjugate = convex_conjugate(&w, p_hat)?;

    let partition = one_stage_partition(spec, t)?;
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    let rows = checked_profiles(nv, nj, numerics.brute_force_cap)?;
    let states = (0..nu)
        .map(|u| (0..nv).map(|v| terminal_state(spec, &partition, 0, x, &[u], &[v], numerics)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let game = MatrixGame::from_fn(rows, ni * nu, |r, c| {
        let b = prefix_from_code(r, nv, nj);
        let (i, u) = (c / nu, c % nu);
        p_hat[i] - q.iter().enumerate().map(|(j, &qj)| qj * spec.payoff(i, j, &states[u][b[j]])).sum::<f64>()
    })?;
    let reformulated = solve(&game, numerics.tol_game)?.value;
    Ok(DualReformulationReport { conjugate, reformulated, gap: (conjugate - reformulated).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProbe {
    /// Largest midpoint convexity violation of `p -> V^pi` on the p-grid.
    pub p_violation: f64,
    /// Largest midpoint concavity violation of `q -> V^pi` on the q-grid.
    pub q_violation: f64,
    /// Largest second difference in `p`; positive means strictly convex somewhere.
    pub p_max_second_difference: f64,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
}

/// Exact partition values across the p-grid at fixed `q`, and across the
/// q-grid at fixed `p`, with their discrete convexity defects.
#[allow(clippy::too_many_arguments)]
pub fn convexity_probe(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    p_grid: &SimplexGrid,
    q_grid: &SimplexGrid,
    numerics: &NumericsConfig<f64>,
) -> Result<ConvexityProbe> {
    let value = |pp: &[f64], qq: &[f64]| exact_partition_value(spec, partition, start, x, pp, qq, numerics).map(|e| e.value);
    let p_values = (0..p_grid.len()).map(|k| value(&p_grid.point::<f64>(k), q)).collect::<Result<Vec<_>>>()?;
    let q_values = (0..q_grid.len()).map(|k| value(p, &q_grid.point::<f64>(k))).collect::<Result<Vec<_>>>()?;
    let p_max_second_difference = p_grid
        .line_triples()
        .iter()
        .map(|&(a, m, b)| p_values[a] + p_values[b] - 2.0 * p_values[m])
        .fold(0.0, f64::max);
    let pf = SimplexFunction::new(Arc::new(p_grid.clone()), p_values)?;
    let qf = SimplexFunction::new(Arc::new(q_grid.clone()), q_values)?;
    Ok(ConvexityProbe {
        p_violation: pf.convexity_violation(),
        q_violation: qf.concavity_violation(),
        p_max_second_difference,
        p_values: pf.values().to_vec(),
        q_values: qf.values().to_vec(),
    })
}
