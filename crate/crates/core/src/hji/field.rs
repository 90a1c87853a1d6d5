use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fenchel::{line_violation, DualBox};
use crate::model::{GameSpec, SimplexGrid, StateGrid, TimePartition};
use crate::scalar::Real;

/// Which conjugate route a dual field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    /// `Ṽ(t, x, p_hat, q)`: conjugate in `p`, belief `q` as parameter.
    V,
    /// `W̃(t, x, p, q_hat)`: conjugate in `q`, belief `p` as parameter.
    W,
}

/// Discretization shared by both routes.
#[derive(Debug, Clone)]
pub struct PdeGrids<S> {
    pub state: StateGrid<S>,
    pub time: TimePartition<S>,
    pub p_grid: Arc<SimplexGrid>,
    pub q_grid: Arc<SimplexGrid>,
    pub dual_p: DualBox<S>,
    pub dual_q: DualBox<S>,
}

impl<S: Real> PdeGrids<S> {
    pub fn new(
        state: StateGrid<S>,
        time: TimePartition<S>,
        p_grid: SimplexGrid,
        q_grid: SimplexGrid,
        dual_p: DualBox<S>,
        dual_q: DualBox<S>,
    ) -> Result<Self> {
        if dual_p.dim() != p_grid.dim() || dual_q.dim() != q_grid.dim() {
            return Err(Error::InvalidGrid("dual boxes must match the belief simplex dimensions".into()));
        }
        Ok(Self { state, time, p_grid: Arc::new(p_grid), q_grid: Arc::new(q_grid), dual_p, dual_q })
    }

    /// Belief grids at resolution `k` and default dual boxes sized from `G_max`.
    pub fn with_defaults(spec: &GameSpec<S>, state: StateGrid<S>, time: TimePartition<S>, k: usize) -> Result<Self> {
        let g_max = spec.g_max(&state)?;
        let dual_p = DualBox::default_for(spec.types_p(), g_max, k)?;
        let dual_q = DualBox::default_for(spec.types_q(), g_max, k)?;
        Self::new(
            state,
            time,
            SimplexGrid::new(spec.types_p(), k)?,
            SimplexGrid::new(spec.types_q(), k)?,
            dual_p,
            dual_q,
        )
    }

    pub(crate) fn check_spec(&self, spec: &GameSpec<S>) -> Result<()> {
        if self.state.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: self.state.dim() });
        }
        if self.p_grid.dim() != spec.types_p() {
            return Err(Error::DimensionMismatch { expected: spec.types_p(), got: self.p_grid.dim() });
        }
        if self.q_grid.dim() != spec.types_q() {
            return Err(Error::DimensionMismatch { expected: spec.types_q(), got: self.q_grid.dim() });
        }
        let (t_end, horizon) = (self.time.horizon(), spec.horizon());
        if (t_end - horizon).abs() > S::epsilon() * horizon.max(S::one()) * (S::one() + S::one()) {
            return Err(Error::InvalidGrid(format!("partition ends at {t_end}, horizon is {horizon}")));
        }
        Ok(())
    }

    /// (dual box, belief grid) sizes for a route.
    pub fn columns(&self, route: Route) -> (usize, usize) {
        match route {
            Route::V => (self.dual_p.len(), self.q_grid.len()),
            Route::W => (self.dual_q.len(), self.p_grid.len()),
        }
    }
}

/// Dual values on (time knot, state node, dual node, belief node).
///
/// Stored column-major: each (dual, belief) column holds a full
/// (time x state) history.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField<S> {
    pub route: Route,
    pub(crate) n_time: usize,
    pub(crate) n_state: usize,
    pub(crate) n_dual: usize,
    pub(crate) n_belief: usize,
    pub(crate) values: Vec<S>,
}

impl<S: Real> DualField<S> {
    pub fn new(route: Route, n_time: usize, n_state: usize, n_dual: usize, n_belief: usize, values: Vec<S>) -> Result<Self> {
        let want = n_time * n_state * n_dual * n_belief;
        if values.len() != want {
            return Err(Error::DimensionMismatch { expected: want, got: values.len() });
        }
        Ok(Self { route, n_time, n_state, n_dual, n_belief, values })
    }

    /// (time knots, state nodes, dual nodes, belief nodes).
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n_time, self.n_state, self.n_dual, self.n_belief)
    }

    fn offset(&self, k: usize, x: usize, dual: usize, belief: usize) -> usize {
        ((dual * self.n_belief + belief) * self.n_time + k) * self.n_state + x
    }

    pub fn at(&self, k: usize, x: usize, dual: usize, belief: usize) -> S {
        self.values[self.offset(k, x, dual, belief)]
    }

    /// State slice at knot `k` of one column.
    pub fn slice(&self, k: usize, dual: usize, belief: usize) -> &[S] {
        let o = self.offset(k, 0, dual, belief);
        &self.values[o..o + self.n_state]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

/// Primal values on (time knot, state node, p node, q node).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField<S> {
    pub(crate) n_time: usize,
    pub(crate) n_state: usize,
    pub(crate) n_p: usize,
    pub(crate) n_q: usize,
    pub(crate) values: Vec<S>,
}

impl<S: Real> ValueField<S> {
    pub fn new(n_time: usize, n_state: usize, n_p: usize, n_q: usize, values: Vec<S>) -> Result<Self> {
        let want = n_time * n_state * n_p * n_q;
        if values.len() != want {
            return Err(Error::DimensionMismatch { expected: want, got: values.len() });
        }
        Ok(Self { n_time, n_state, n_p, n_q, values })
    }

    /// (time knots, state nodes, p nodes, q nodes).
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n_time, self.n_state, self.n_p, self.n_q)
    }

    pub(crate) fn offset(&self, k: usize, x: usize, p: usize, q: usize) -> usize {
        ((k * self.n_state + x) * self.n_p + p) * self.n_q + q
    }

    pub fn at(&self, k: usize, x: usize, p: usize, q: usize) -> S {
        self.values[self.offset(k, x, p, q)]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// State slice at knot `k` for fixed beliefs.
    pub fn state_slice(&self, k: usize, p: usize, q: usize) -> Vec<S> {
        (0..self.n_state).map(|x| self.at(k, x, p, q)).collect()
    }

    /// Worst convexity defect in `p` along simplex grid lines, over all (t, x, q).
    pub fn convexity_violation_p(&self, p_grid: &SimplexGrid) -> S {
        let mut worst = S::zero();
        let mut line = vec![S::zero(); self.n_p];
        for k in 0..self.n_time {
            for x in 0..self.n_state {
                for q in 0..self.n_q {
                    for (p, slot) in line.iter_mut().enumerate() {
                        *slot = self.at(k, x, p, q);
                    }
                    worst = worst.max(line_violation(p_grid, &line, S::one()));
                }
            }
        }
        worst
    }

    /// Worst concavity defect in `q` along simplex grid lines, over all (t, x, p).
    pub fn concavity_violation_q(&self, q_grid: &SimplexGrid) -> S {
        let mut worst = S::zero();
        for k in 0..self.n_time {
            for x in 0..self.n_state {
                for p in 0..self.n_p {
                    let o = self.offset(k, x, p, 0);
                    worst = worst.max(line_violation(q_grid, &self.values[o..o + self.n_q], -S::one()));
                }
            }
        }
        worst
    }
}
