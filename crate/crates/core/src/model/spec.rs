use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::grid::StateGrid;
use crate::scalar::{norm2, Real};

/// Vector field `f(x, u, v)`; receives the state, the coordinates of the two
/// controls, and writes the state derivative into the output slice.
pub type VectorField<S> = Arc<dyn Fn(&[S], &[S], &[S], &mut [S]) + Send + Sync>;

/// Terminal payoff `g_ij(x)`.
pub type Payoff<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;

/// A finite control set: labelled points in some coordinate space.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet<S> {
    labels: Vec<String>,
    points: Vec<Vec<S>>,
}

impl<S: Real> ControlSet<S> {
    pub fn new(labels: Vec<String>, points: Vec<Vec<S>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpec("control set must be non-empty".into()));
        }
        if labels.len() != points.len() {
            return Err(Error::InvalidSpec("one label per control point required".into()));
        }
        let width = points[0].len();
        if points.iter().any(|p| p.len() != width) {
            return Err(Error::InvalidSpec("control points must share a coordinate count".into()));
        }
        Ok(Self { labels, points })
    }

    /// Controls labelled by their index.
    pub fn from_points(points: Vec<Vec<S>>) -> Result<Self> {
        let labels = (0..points.len()).map(|k| k.to_string()).collect();
        Self::new(labels, points)
    }

    /// Scalar controls `{c_1, ..., c_n}`.
    pub fn scalars(values: &[S]) -> Result<Self> {
        Self::from_points(values.iter().map(|&v| vec![v]).collect())
    }

    /// One dummy control, for players without influence on the dynamics.
    pub fn single() -> Self {
        Self { labels: vec!["0".into()], points: vec![vec![S::zero()]] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[S] {
        &self.points[k]
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn coords(&self) -> usize {
        self.points[0].len()
    }
}

/// Two-player zero-sum game: controlled dynamics, finite control sets and an
/// `I x J` table of terminal payoffs. Player 1 (controls `U`, types `i`)
/// minimizes, player 2 (controls `V`, types `j`) maximizes.
#[derive(Clone)]
pub struct GameSpec<S> {
    dim: usize,
    horizon: S,
    u: ControlSet<S>,
    v: ControlSet<S>,
    dynamics: VectorField<S>,
    payoffs: Vec<Vec<Payoff<S>>>,
}

impl<S: Real> fmt::Debug for GameSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("u", &self.u)
            .field("v", &self.v)
            .field("types", &(self.types_p(), self.types_q()))
            .finish()
    }
}

impl<S: Real> GameSpec<S> {
    pub fn new(
        dim: usize,
        horizon: S,
        u: ControlSet<S>,
        v: ControlSet<S>,
        dynamics: VectorField<S>,
        payoffs: Vec<Vec<Payoff<S>>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("state dimension must be at least 1".into()));
        }
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidSpec("horizon must be positive and finite".into()));
        }
        if payoffs.is_empty() || payoffs[0].is_empty() {
            return Err(Error::InvalidSpec("payoff table needs I >= 1 and J >= 1".into()));
        }
        let j = payoffs[0].len();
        if payoffs.iter().any(|row| row.len() != j) {
            return Err(Error::InvalidSpec("payoff table rows must all have J entries".into()));
        }
        Ok(Self { dim, horizon, u, v, dynamics, payoffs })
    }

    /// Convenience constructor from closures.
    pub fn from_fns<F>(
        dim: usize,
        horizon: S,
        u: ControlSet<S>,
        v: ControlSet<S>,
        f: F,
        payoffs: Vec<Vec<Payoff<S>>>,
    ) -> Result<Self>
    where
        F: Fn(&[S], &[S], &[S], &mut [S]) + Send + Sync + 'static,
    {
        Self::new(dim, horizon, u, v, Arc::new(f), payoffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn u_controls(&self) -> &ControlSet<S> {
        &self.u
    }

    pub fn v_controls(&self) -> &ControlSet<S> {
        &self.v
    }

    pub fn types_p(&self) -> usize {
        self.payoffs.len()
    }

    pub fn types_q(&self) -> usize {
        self.payoffs[0].len()
    }

    pub fn dynamics(&self) -> &VectorField<S> {
        &self.dynamics
    }

    pub fn payoff_fn(&self, i: usize, j: usize) -> &Payoff<S> {
        &self.payoffs[i][j]
    }

    /// `f(x, u_k, v_l)` written into `out`.
    pub fn f_into(&self, x: &[S], u: usize, v: usize, out: &mut [S]) {
        (self.dynamics)(x, self.u.point(u), self.v.point(v), out)
    }

    pub fn f(&self, x: &[S], u: usize, v: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        self.f_into(x, u, v, &mut out);
        out
    }

    pub fn payoff(&self, i: usize, j: usize, x: &[S]) -> S {
        (self.payoffs[i][j])(x)
    }

    /// `sum_ij p_i q_j g_ij(x)`.
    pub fn bilinear_payoff(&self, x: &[S], p: &[S], q: &[S]) -> S {
        let mut acc = S::zero();
        for (i, &pi) in p.iter().enumerate() {
            for (j, &qj) in q.iter().enumerate() {
                acc = acc + pi * qj * self.payoff(i, j, x);
            }
        }
        acc
    }

    /// Bound on `|f|` by enumeration over the grid nodes and all control pairs.
    pub fn f_max(&self, grid: &StateGrid<S>) -> Result<S> {
        self.check_grid(grid)?;
        let mut buf = vec![S::zero(); self.dim];
        let mut best = S::zero();
        for n in 0..grid.len() {
            let x = grid.point(n);
            for u in 0..self.u.len() {
                for v in 0..self.v.len() {
                    self.f_into(&x, u, v, &mut buf);
                    let m = norm2(&buf);
                    if !m.is_finite() {
                        return Err(Error::InvalidSpec(format!("dynamics not finite at {x:?}")));
                    }
                    best = best.max(m);
                }
            }
        }
        Ok(best)
    }

    /// Bound on `|g_ij|` by enumeration over the grid nodes.
    pub fn g_max(&self, grid: &StateGrid<S>) -> Result<S> {
        self.check_grid(grid)?;
        let mut best = S::zero();
        for n in 0..grid.len() {
            let x = grid.point(n);
            for row in &self.payoffs {
                for g in row {
                    let v = g(&x);
                    if !v.is_finite() {
                        return Err(Error::InvalidSpec(format!("payoff not finite at {x:?}")));
                    }
                    best = best.max(v.abs());
                }
            }
        }
        Ok(best)
    }

    fn check_grid(&self, grid: &StateGrid<S>) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: grid.dim() });
        }
        Ok(())
    }

    /// The game seen from the other side: players swap roles and payoffs
    /// change sign, so the new row player again minimizes.
    pub fn reflected(&self) -> Self {
        let f = self.dynamics.clone();
        let payoffs = (0..self.types_q())
            .map(|j| {
                (0..self.types_p())
                    .map(|i| {
                        let g = self.payoffs[i][j].clone();
                        Arc::new(move |x: &[S]| -g(x)) as Payoff<S>
                    })
                    .collect()
            })
            .collect();
        Self {
            dim: self.dim,
            horizon: self.horizon,
            u: self.v.clone(),
            v: self.u.clone(),
            dynamics: Arc::new(move |x, a, b, out| f(x, b, a, out)),
            payoffs,
        }
    }

    /// Same game with a replaced payoff table.
    pub fn with_payoffs(&self, payoffs: Vec<Vec<Payoff<S>>>) -> Result<Self> {
        Self::new(self.dim, self.horizon, self.u.clone(), self.v.clone(), self.dynamics.clone(), payoffs)
    }
}

/// Wraps a closure as a payoff.
pub fn payoff<S, F>(f: F) -> Payoff<S>
where
    F: Fn(&[S]) -> S + Send + Sync + 'static,
{
    Arc::new(f)
}
