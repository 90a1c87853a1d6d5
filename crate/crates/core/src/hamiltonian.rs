//! Mixed-strategy Hamiltonians as values of finite matrix games.
//!
//! `H(x, xi) = min_mu max_nu sum mu_u nu_v f(x,u,v).xi` with rows indexed by
//! `U` (player 1 minimizes) and `H*(x, xi) = -H(x, -xi)`.

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::matrix_game::{pure_minimax, solve, MatrixGame};
use crate::model::{GameSpec, MixedStrategy, StateGrid};
use crate::numerics::NumericsConfig;
use crate::scalar::{dot, lit, norm2, Real};

/// Value of a Hamiltonian together with the optimal mixes.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianEval<S: Real> {
    pub value: S,
    pub mu: MixedStrategy<S>,
    pub nu: MixedStrategy<S>,
    /// `infsup - supinf` of the pure game; zero iff Isaacs' condition holds at `(x, xi)`.
    pub isaacs_gap: S,
}

/// The `|U| x |V|` game `A_uv = f(x,u,v).xi`.
pub fn hamiltonian_game<S: Real>(spec: &GameSpec<S>, x: &[S], xi: &[S]) -> Result<MatrixGame<S>> {
    check_dims(spec, x, xi)?;
    let mut buf = vec![S::zero(); spec.dim()];
    MatrixGame::from_fn(spec.u_controls().len(), spec.v_controls().len(), |u, v| {
        spec.f_into(x, u, v, &mut buf);
        dot(&buf, xi)
    })
}

fn check_dims<S: Real>(spec: &GameSpec<S>, x: &[S], xi: &[S]) -> Result<()> {
    for len in [x.len(), xi.len()] {
        if len != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: len });
        }
    }
    Ok(())
}

fn eval_game<S: Real>(game: &MatrixGame<S>, tol_game: S) -> Result<HamiltonianEval<S>> {
    let saddle = solve(game, tol_game)?;
    let (infsup, supinf) = pure_minimax(game);
    Ok(HamiltonianEval {
        value: saddle.value,
        mu: saddle.row_mix,
        nu: saddle.col_mix,
        isaacs_gap: infsup - supinf,
    })
}

/// `H(x, xi)`.
pub fn eval_h<S: Real>(spec: &GameSpec<S>, x: &[S], xi: &[S], tol_game: S) -> Result<HamiltonianEval<S>> {
    eval_game(&hamiltonian_game(spec, x, xi)?, tol_game)
}

/// `H*(x, xi) = -H(x, -xi)`; `mu`, `nu` are the optimal mixes of the game at `-xi`.
pub fn eval_h_star<S: Real>(spec: &GameSpec<S>, x: &[S], xi: &[S], tol_game: S) -> Result<HamiltonianEval<S>> {
    let neg: Vec<S> = xi.iter().map(|&a| -a).collect();
    let mut e = eval_h(spec, x, &neg, tol_game)?;
    e.value = -e.value;
    Ok(e)
}

/// `min_nu max_mu` of `f.xi`, solved directly with rows indexed by `V`.
pub fn eval_inf_sup_dual<S: Real>(spec: &GameSpec<S>, x: &[S], xi: &[S], tol_game: S) -> Result<S> {
    Ok(solve(&hamiltonian_game(spec, x, xi)?.transposed(), tol_game)?.value)
}

/// `H*` at the nodes of a state grid, with `f` tabulated once per node.
///
/// For `d = 1` the two directions `xi = +-1` are solved per node and every
/// other gradient follows by positive homogeneity. For `d >= 2` values are
/// memoized on the node and the max-norm-normalized gradient quantized to
/// `QUANTUM`; the stored value is always evaluated at the dequantized key,
/// so results do not depend on which thread filled the entry.
pub struct NodeHamiltonian<S: Real> {
    dim: usize,
    nu: usize,
    nv: usize,
    table: Vec<S>,
    tol_game: S,
    f_max: S,
    axis_pair: Option<Vec<(S, S)>>,
    memo: Option<DashMap<(usize, Vec<i64>), S>>,
}

const QUANTUM: f64 = 1e-12;

impl<S: Real> NodeHamiltonian<S> {
    pub fn new(spec: &GameSpec<S>, grid: &StateGrid<S>, numerics: &NumericsConfig<S>) -> Result<Self> {
        if grid.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: grid.dim() });
        }
        let (d, nu, nv) = (spec.dim(), spec.u_controls().len(), spec.v_controls().len());
        let mut table = vec![S::zero(); grid.len() * nu * nv * d];
        let mut f_max = S::zero();
        for node in 0..grid.len() {
            let x = grid.point(node);
            for u in 0..nu {
                for v in 0..nv {
                    let off = ((node * nu + u) * nv + v) * d;
                    let out = &mut table[off..off + d];
                    spec.f_into(&x, u, v, out);
                    let m = norm2(out);
                    if !m.is_finite() {
                        return Err(Error::InvalidSpec(format!("dynamics not finite at {x:?}")));
                    }
                    f_max = f_max.max(m);
                }
            }
        }
        let mut h = Self { dim: d, nu, nv, table, tol_game: numerics.tol_game, f_max, axis_pair: None, memo: None };
        if d == 1 {
            let mut pairs = Vec::with_capacity(grid.len());
            for node in 0..grid.len() {
                pairs.push((h.direct(node, &[S::one()])?, h.direct(node, &[-S::one()])?));
            }
            h.axis_pair = Some(pairs);
        } else if numerics.memoize {
            h.memo = Some(DashMap::new());
        }
        Ok(h)
    }

    /// `max |f|` over tabulated nodes and control pairs.
    pub fn f_max(&self) -> S {
        self.f_max
    }

    /// `H*(x_node, xi)` solved without any cache.
    pub fn direct(&self, node: usize, xi: &[S]) -> Result<S> {
        let block = &self.table[node * self.nu * self.nv * self.dim..];
        let game = MatrixGame::from_fn(self.nu, self.nv, |u, v| {
            let off = (u * self.nv + v) * self.dim;
            -dot(&block[off..off + self.dim], xi)
        })?;
        Ok(-solve(&game, self.tol_game)?.value)
    }

    /// `H*(x_node, xi)` through the homogeneity table or the memo.
    pub fn h_star(&self, node: usize, xi: &[S]) -> Result<S> {
        if let Some(pairs) = &self.axis_pair {
            let (pos, neg) = pairs[node];
            let a = xi[0];
            return Ok(if a > S::zero() {
                a * pos
            } else if a < S::zero() {
                -a * neg
            } else {
                S::zero()
            });
        }
        let scale = xi.iter().fold(S::zero(), |m, &a| m.max(a.abs()));
        if scale == S::zero() {
            return Ok(S::zero());
        }
        let Some(memo) = &self.memo else {
            return self.direct(node, xi);
        };
        let quantum: S = lit(QUANTUM);
        let key: Vec<i64> = xi
            .iter()
            .map(|&a| (a / scale / quantum).round().to_i64().unwrap_or(0))
            .collect();
        let unit = if let Some(hit) = memo.get(&(node, key.clone())) {
            *hit
        } else {
            let dir: Vec<S> = key.iter().map(|&k| S::from_i64(k).unwrap_or(S::zero()) * quantum).collect();
            let val = self.direct(node, &dir)?;
            memo.insert((node, key), val);
            val
        };
        Ok(scale * unit)
    }
}
