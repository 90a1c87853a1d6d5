//! Scenario-dependent dynamics lifted into a payoff-asymmetric game.
//!
//! Scenario `(i, j)` has its own dynamics `f_ij`, initial state `x_ij` and
//! payoff `g_ij`. The blown-up game lives on `R^{d I J}`: block
//! `b = i J + j` evolves by `f_ij` reading only its own coordinates, and the
//! lifted payoff `G_ij` reads only block `b`. Asymmetry in the dynamics thus
//! becomes asymmetry in the payoffs, which the base pipeline handles.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hamiltonian::eval_h;
use crate::matrix_game::{solve, MatrixGame};
use crate::model::{ControlSet, GameSpec, Payoff, VectorField};
use crate::scalar::{dot, Real};

/// Per-scenario dynamics, initial states and payoffs on a common base space.
#[derive(Clone)]
pub struct ScenarioSpec<S> {
    dim: usize,
    horizon: S,
    u: ControlSet<S>,
    v: ControlSet<S>,
    dynamics: Vec<Vec<VectorField<S>>>,
    initial: Vec<Vec<Vec<S>>>,
    payoffs: Vec<Vec<Payoff<S>>>,
}

impl<S: Real> std::fmt::Debug for ScenarioSpec<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioSpec")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("types", &self.types())
            .field("initial", &self.initial)
            .finish()
    }
}

fn check_table<T>(name: &str, table: &[Vec<T>], i: usize, j: usize) -> Result<()> {
    if table.len() != i || table.iter().any(|row| row.len() != j) {
        return Err(Error::InvalidSpec(format!("{name} table must be {i} x {j}")));
    }
    Ok(())
}

impl<S: Real> ScenarioSpec<S> {
    pub fn new(
        dim: usize,
        horizon: S,
        u: ControlSet<S>,
        v: ControlSet<S>,
        dynamics: Vec<Vec<VectorField<S>>>,
        initial: Vec<Vec<Vec<S>>>,
        payoffs: Vec<Vec<Payoff<S>>>,
    ) -> Result<Self> {
        let ni = payoffs.len();
        let nj = payoffs.first().map_or(0, Vec::len);
        if ni == 0 || nj == 0 {
            return Err(Error::InvalidSpec("scenario table needs I >= 1 and J >= 1".into()));
        }
        check_table("payoff", &payoffs, ni, nj)?;
        check_table("dynamics", &dynamics, ni, nj)?;
        check_table("initial state", &initial, ni, nj)?;
        for x in initial.iter().flatten() {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
            }
        }
        // Validates dim and horizon.
        GameSpec::new(dim, horizon, u.clone(), v.clone(), dynamics[0][0].clone(), payoffs.clone())?;
        Ok(Self { dim, horizon, u, v, dynamics, initial, payoffs })
    }

    /// `(I, J)`.
    pub fn types(&self) -> (usize, usize) {
        (self.payoffs.len(), self.payoffs[0].len())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial(&self, i: usize, j: usize) -> &[S] {
        &self.initial[i][j]
    }

    /// The base game of scenario `(i, j)` alone, with a single type pair.
    pub fn scenario_game(&self, i: usize, j: usize) -> Result<GameSpec<S>> {
        GameSpec::new(
            self.dim,
            self.horizon,
            self.u.clone(),
            self.v.clone(),
            self.dynamics[i][j].clone(),
            vec![vec![self.payoffs[i][j].clone()]],
        )
    }
}

/// The lifted game and the stacked initial state.
#[derive(Debug, Clone)]
pub struct BlownUp<S: Real> {
    pub spec: GameSpec<S>,
    pub x0: Vec<S>,
    pub block_dim: usize,
    pub types: (usize, usize),
}

impl<S: Real> BlownUp<S> {
    /// Coordinates of block `(i, j)` in the stacked state.
    pub fn block(&self, i: usize, j: usize) -> Range<usize> {
        let b = i * self.types.1 + j;
        b * self.block_dim..(b + 1) * self.block_dim
    }
}

/// Lifts `sc` to `R^{d I J}`; rejects lifted dimensions above `dim_cap`.
pub fn blow_up<S: Real>(sc: &ScenarioSpec<S>, dim_cap: usize) -> Result<BlownUp<S>> {
    let (ni, nj) = sc.types();
    let d = sc.dim;
    let dim = d * ni * nj;
    if dim > dim_cap {
        return Err(Error::DimensionBudget { dim, d, i: ni, j: nj, cap: dim_cap });
    }
    let blocks: Vec<VectorField<S>> = sc.dynamics.iter().flatten().cloned().collect();
    let dynamics: VectorField<S> = Arc::new(move |x: &[S], u: &[S], v: &[S], out: &mut [S]| {
        for (b, f) in blocks.iter().enumerate() {
            let r = b * d..(b + 1) * d;
            f(&x[r.clone()], u, v, &mut out[r]);
        }
    });
    let payoffs = (0..ni)
        .map(|i| {
            (0..nj)
                .map(|j| {
                    let g = sc.payoffs[i][j].clone();
                    let r = (i * nj + j) * d..(i * nj + j + 1) * d;
                    Arc::new(move |x: &[S]| g(&x[r.clone()])) as Payoff<S>
                })
                .collect()
        })
        .collect();
    let spec = GameSpec::new(dim, sc.horizon, sc.u.clone(), sc.v.clone(), dynamics, payoffs)?;
    let x0 = sc.initial.iter().flatten().flatten().copied().collect();
    Ok(BlownUp { spec, x0, block_dim: d, types: (ni, nj) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlownHamiltonianReport<S> {
    /// `H` of the lifted game.
    pub lifted: S,
    /// Value of the game with entries `sum_ij f_ij(x_ij, u, v) . xi_ij`.
    pub direct: S,
    /// `sup_nu inf_mu` of the same game.
    pub sup_inf: S,
    pub gap: S,
    pub minimax_gap: S,
    pub passed: bool,
}

/// Evaluates the lifted Hamiltonian through the blown-up spec and directly
/// from the scenario table, and checks the mixed minimax identity.
pub fn blown_hamiltonian_check<S: Real>(
    sc: &ScenarioSpec<S>,
    x_stack: &[S],
    xi_stack: &[S],
    tol_game: S,
) -> Result<BlownHamiltonianReport<S>> {
    let lifted_game = blow_up(sc, usize::MAX)?;
    let lifted = eval_h(&lifted_game.spec, x_stack, xi_stack, tol_game)?.value;
    let (ni, nj) = sc.types();
    let d = sc.dim;
    let mut buf = vec![S::zero(); d];
    let game = MatrixGame::from_fn(sc.u.len(), sc.v.len(), |u, v| {
        let mut acc = S::zero();
        for i in 0..ni {
            for j in 0..nj {
                let r = (i * nj + j) * d..(i * nj + j + 1) * d;
                (sc.dynamics[i][j])(&x_stack[r.clone()], sc.u.point(u), sc.v.point(v), &mut buf);
                acc = acc + dot(&buf, &xi_stack[r]);
            }
        }
        acc
    })?;
    let direct = solve(&game, tol_game)?.value;
    let sup_inf = -solve(&game.negated_transpose(), tol_game)?.value;
    let gap = (lifted - direct).abs();
    let minimax_gap = (direct - sup_inf).abs();
    Ok(BlownHamiltonianReport { lifted, direct, sup_inf, gap, minimax_gap, passed: gap <= tol_game && minimax_gap <= tol_game })
}
