//! Discrete Fenchel conjugation over simplex grids.
//!
//! `w*(p_hat) = max_p <p_hat, p> - w(p)` and `w#(q_hat) = min_q <q_hat, q> - w(q)`
//! with `p`, `q` ranging over [`SimplexGrid`] nodes. Ties go to the lowest
//! node index.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SimplexGrid;
use crate::scalar::{count, dot, lit, Real};

/// A function sampled at the nodes of a simplex grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFunction<S> {
    grid: Arc<SimplexGrid>,
    values: Vec<S>,
}

impl<S: Real> SimplexFunction<S> {
    pub fn new(grid: Arc<SimplexGrid>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("simplex function not finite at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<SimplexGrid>, f: impl Fn(&[S]) -> S) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.point::<S>(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<SimplexGrid> {
        self.grid.clone()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn at(&self, k: usize) -> S {
        self.values[k]
    }

    /// Worst violation of `w(a) + w(c) - 2 w(b) >= 0` along grid lines; zero if convex.
    pub fn convexity_violation(&self) -> S {
        line_violation(&self.grid, &self.values, S::one())
    }

    /// Worst violation of `w(a) + w(c) - 2 w(b) <= 0` along grid lines; zero if concave.
    pub fn concavity_violation(&self) -> S {
        line_violation(&self.grid, &self.values, -S::one())
    }

    /// Largest `|w(n') - w(n)| * K` over grid edges: the spread `max_a p_hat_a - min_a p_hat_a`
    /// a supporting dual vector needs.
    pub fn slope_spread(&self) -> S {
        slope_spread(&self.grid, &self.values)
    }
}

pub(crate) fn line_violation<S: Real>(grid: &SimplexGrid, values: &[S], sign: S) -> S {
    let mut worst = S::zero();
    for (a, b, c) in grid.line_triples() {
        let second = sign * (values[a] + values[c] - values[b] - values[b]);
        worst = worst.max(-second);
    }
    worst
}

pub(crate) fn slope_spread<S: Real>(grid: &SimplexGrid, values: &[S]) -> S {
    let k = count::<S>(grid.resolution());
    grid.edges()
        .into_iter()
        .fold(S::zero(), |m, (a, b)| m.max((values[a] - values[b]).abs() * k))
}

/// Tensor grid on `[-R, R]^dim` for dual variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBox<S> {
    dim: usize,
    radius: S,
    nodes: usize,
}

impl<S: Real> DualBox<S> {
    pub fn new(dim: usize, radius: S, nodes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dual box dimension must be at least 1".into()));
        }
        if !(radius > S::zero()) || !radius.is_finite() {
            return Err(Error::InvalidGrid("dual box radius must be positive".into()));
        }
        if nodes < 2 {
            return Err(Error::InvalidGrid("dual box needs at least 2 nodes per axis".into()));
        }
        if nodes.checked_pow(dim as u32).is_none_or(|n| n > 50_000_000) {
            return Err(Error::InvalidGrid("dual box too large".into()));
        }
        Ok(Self { dim, radius, nodes })
    }

    /// Radius `G_max + 1` and an odd node count of at least `K + 1`, so the
    /// origin (and every diagonal point `c 1`) is a node.
    pub fn default_for(dim: usize, g_max: S, resolution: usize) -> Result<Self> {
        Self::new(dim, g_max + S::one(), 2 * resolution.div_ceil(2) + 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> S {
        (self.radius + self.radius) / count(self.nodes - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_indices(&self, k: usize) -> Vec<usize> {
        let mut rest = k;
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = rest % self.nodes;
            rest /= self.nodes;
        }
        out
    }

    pub fn point(&self, k: usize) -> Vec<S> {
        let h = self.spacing();
        self.axis_indices(k).into_iter().map(|i| -self.radius + h * count(i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<S>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.axis_indices(k).into_iter().any(|i| i == 0 || i + 1 == self.nodes)
    }
}

fn check_dual<S: Real>(grid: &SimplexGrid, v: &[S]) -> Result<()> {
    if v.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: v.len() });
    }
    Ok(())
}

/// `max_p <p_hat, p> - w(p)` over grid nodes.
pub fn convex_conjugate<S: Real>(w: &SimplexFunction<S>, p_hat: &[S]) -> Result<S> {
    check_dual(&w.grid, p_hat)?;
    Ok(conjugate_max(&node_points(&w.grid), &w.values, p_hat).0)
}

/// `min_q <q_hat, q> - w(q)` over grid nodes.
pub fn concave_conjugate<S: Real>(w: &SimplexFunction<S>, q_hat: &[S]) -> Result<S> {
    check_dual(&w.grid, q_hat)?;
    let neg: Vec<S> = w.values.iter().map(|&v| -v).collect();
    let minus_hat: Vec<S> = q_hat.iter().map(|&v| -v).collect();
    Ok(-conjugate_max(&node_points(&w.grid), &neg, &minus_hat).0)
}

/// Coordinates of every simplex node.
pub fn node_points<S: Real>(grid: &SimplexGrid) -> Vec<Vec<S>> {
    (0..grid.len()).map(|k| grid.point(k)).collect()
}

/// Maximum and lowest maximizing node of `<y, p> - values(p)`.
pub(crate) fn conjugate_max<S: Real>(points: &[Vec<S>], values: &[S], y: &[S]) -> (S, usize) {
    let mut best = S::neg_infinity();
    let mut arg = 0;
    for (k, &w) in values.iter().enumerate() {
        let v = dot(y, &points[k]) - w;
        if v > best {
            best = v;
            arg = k;
        }
    }
    (best, arg)
}

/// `w*` at every node of the dual box.
pub fn conjugate_on_box<S: Real>(w: &SimplexFunction<S>, dual: &DualBox<S>) -> Result<Vec<S>> {
    if dual.dim() != w.grid.dim() {
        return Err(Error::DimensionMismatch { expected: w.grid.dim(), got: dual.dim() });
    }
    let points = node_points(&w.grid);
    Ok((0..dual.len())
        .into_par_iter()
        .map(|k| conjugate_max(&points, &w.values, &dual.point(k)).0)
        .collect())
}

fn check_box<S: Real>(w: &SimplexFunction<S>, dual: &DualBox<S>) -> Result<()> {
    let spread = w.slope_spread();
    let limit = dual.radius() + dual.radius();
    if spread > limit {
        return Err(Error::DualBoxUnderscoped { spread: spread.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    Ok(())
}

/// `p -> max_{p_hat in box} <p_hat, p> - w*(p_hat)`: the convex envelope of
/// `w` up to dual-grid resolution; never above `w`, and idempotent.
pub fn biconjugate_p<S: Real>(w: &SimplexFunction<S>, dual: &DualBox<S>) -> Result<SimplexFunction<S>> {
    check_box(w, dual)?;
    let star = conjugate_on_box(w, dual)?;
    let duals = dual.points();
    // Rounding slack of the two nested max-plus passes; values within it of
    // `w` are returned as `w` so the operation is idempotent in floating point.
    let slack = lit::<S>(64.0) * S::epsilon();
    let values = (0..w.grid.len())
        .into_par_iter()
        .map(|k| {
            let p = w.grid.point::<S>(k);
            let best = duals
                .iter()
                .zip(&star)
                .fold(S::neg_infinity(), |m, (y, &s)| m.max(dot(y, &p) - s));
            let wk = w.values[k];
            if best >= wk - slack * (S::one() + wk.abs() + dual.radius()) {
                wk
            } else {
                best
            }
        })
        .collect();
    SimplexFunction::new(w.grid.clone(), values)
}

/// Concave counterpart of [`biconjugate_p`]: the concave envelope of `w`.
pub fn biconjugate_q<S: Real>(w: &SimplexFunction<S>, dual: &DualBox<S>) -> Result<SimplexFunction<S>> {
    let neg = SimplexFunction::new(w.grid.clone(), w.values.iter().map(|&v| -v).collect())?;
    let env = biconjugate_p(&neg, dual)?;
    SimplexFunction::new(w.grid.clone(), env.values.iter().map(|&v| -v).collect())
}

/// Largest convex minorant of `w` on the grid nodes.
///
/// Exact lower hull for simplices of dimension at most 2. In higher
/// dimensions, the largest minorant convex along every lattice line (which
/// can exceed the convex hull), reached by iterated line hulls; a dual-box
/// biconjugate is the fallback if the iteration has not settled within its
/// pass budget.
pub fn convex_envelope<S: Real>(w: &SimplexFunction<S>) -> Result<SimplexFunction<S>> {
    let mut values = w.values.clone();
    convex_envelope_in_place(&w.grid, &mut values, lit(1e-12))?;
    SimplexFunction::new(w.grid.clone(), values)
}

/// Smallest concave majorant of `w` on the grid nodes; see [`convex_envelope`].
pub fn concave_envelope<S: Real>(w: &SimplexFunction<S>) -> Result<SimplexFunction<S>> {
    let mut values: Vec<S> = w.values.iter().map(|&v| -v).collect();
    convex_envelope_in_place(&w.grid, &mut values, lit(1e-12))?;
    SimplexFunction::new(w.grid.clone(), values.into_iter().map(|v| -v).collect())
}

pub(crate) fn convex_envelope_in_place<S: Real>(grid: &SimplexGrid, values: &mut [S], tol: S) -> Result<()> {
    match grid.dim() {
        1 => Ok(()),
        2 => {
            let k = grid.resolution();
            let order: Vec<usize> = (0..=k).map(|a| grid.index_of(&[a, k - a]).expect("lattice node")).collect();
            let mut line: Vec<S> = order.iter().map(|&n| values[n]).collect();
            lower_hull_1d(&mut line);
            for (n, v) in order.into_iter().zip(line) {
                values[n] = v;
            }
            Ok(())
        }
        _ => {
            // Iterated hulls along lattice lines decrease monotonically to the
            // largest minorant convex along every line. Each pass is an infimum
            // over convex combinations, so concavity in other arguments survives.
            let mut line: Vec<S> = Vec::new();
            for _ in 0..ENVELOPE_PASSES {
                let mut moved = S::zero();
                for nodes in grid.lines() {
                    line.clear();
                    line.extend(nodes.iter().map(|&n| values[n]));
                    lower_hull_1d(&mut line);
                    for (&n, &v) in nodes.iter().zip(&line) {
                        moved = moved.max(values[n] - v);
                        values[n] = v;
                    }
                }
                if moved == S::zero() {
                    return Ok(());
                }
            }
            if line_violation(grid, values, S::one()) <= tol {
                return Ok(());
            }
            let spread = slope_spread(grid, values);
            let radius = spread / lit(2.0) + S::one();
            let dual = DualBox::new(grid.dim(), radius, 4 * grid.resolution() + 1)?;
            let w = SimplexFunction::new(Arc::new(grid.clone()), values.to_vec())?;
            let env = biconjugate_p(&w, &dual)?;
            values.copy_from_slice(env.values());
            Ok(())
        }
    }
}

const ENVELOPE_PASSES: usize = 200;

/// Lower convex hull of `(k, y_k)` evaluated back at every `k`; hull vertices keep their values.
pub(crate) fn lower_hull_1d<S: Real>(y: &mut [S]) {
    let n = y.len();
    if n < 3 {
        return;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // b is dropped when it lies on or above the chord from a to k.
            let lhs = (y[b] - y[a]) * count(k - a);
            let rhs = (y[k] - y[a]) * count(b - a);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    for pair in hull.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ya, yb) = (y[a], y[b]);
        let span = count::<S>(b - a);
        for k in a + 1..b {
            let v = (ya * count(b - k) + yb * count(k - a)) / span;
            y[k] = v.min(y[k]);
        }
    }
}
