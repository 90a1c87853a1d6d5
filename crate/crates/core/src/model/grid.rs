use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::{count, Real};

/// Uniform tensor grid on a box in state space.
///
/// Nodes are stored in row-major order with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid<S> {
    lo: Vec<S>,
    hi: Vec<S>,
    nodes: Vec<usize>,
    spacing: Vec<S>,
    strides: Vec<usize>,
}

impl<S: Real> StateGrid<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>, nodes: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || hi.len() != d || nodes.len() != d {
            return Err(Error::InvalidGrid(format!(
                "box corners and node counts must share a positive dimension (lo {}, hi {}, nodes {})",
                lo.len(),
                hi.len(),
                nodes.len()
            )));
        }
        for a in 0..d {
            if !(lo[a] < hi[a]) {
                return Err(Error::InvalidGrid(format!("axis {a}: lo must be below hi")));
            }
            if nodes[a] < 3 {
                return Err(Error::InvalidGrid(format!("axis {a}: need at least 3 nodes, got {}", nodes[a])));
            }
        }
        let spacing = (0..d).map(|a| (hi[a] - lo[a]) / count::<S>(nodes[a] - 1)).collect();
        let mut strides = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * nodes[a + 1];
        }
        Ok(Self { lo, hi, nodes, spacing, strides })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[S] {
        &self.lo
    }

    pub fn hi(&self) -> &[S] {
        &self.hi
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[S] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> S {
        self.spacing.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut rem = node;
        (0..self.dim())
            .map(|a| {
                let k = rem / self.strides[a];
                rem %= self.strides[a];
                k
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Index of `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.nodes[axis]
    }

    pub fn coord(&self, node: usize, axis: usize) -> S {
        self.lo[axis] + count::<S>(self.axis_index(node, axis)) * self.spacing[axis]
    }

    pub fn point(&self, node: usize) -> Vec<S> {
        (0..self.dim()).map(|a| self.coord(node, a)).collect()
    }

    /// True when `x` lies in the box shrunk by `margin` on every side.
    pub fn inside_deflated(&self, x: &[S], margin: S) -> bool {
        x.iter()
            .enumerate()
            .all(|(a, &xa)| xa >= self.lo[a] + margin && xa <= self.hi[a] - margin)
    }

    /// Nearest node to `x` (clamped into the box).
    pub fn nearest(&self, x: &[S]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let r = ((x[a] - self.lo[a]) / self.spacing[a]).round();
                let r = r.max(S::zero()).min(count::<S>(self.nodes[a] - 1));
                r.to_usize().unwrap_or(0)
            })
            .collect();
        self.flat_index(&idx)
    }

    /// Multilinear interpolation of nodal `values` at `x`, clamping `x` into
    /// the box (consistent with zero-gradient extrapolation).
    pub fn interpolate(&self, values: &[S], x: &[S]) -> S {
        debug_assert_eq!(values.len(), self.len());
        let d = self.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![S::zero(); d];
        for a in 0..d {
            let n = self.nodes[a];
            let s = ((x[a] - self.lo[a]) / self.spacing[a]).max(S::zero()).min(count::<S>(n - 1));
            let mut k = s.floor().to_usize().unwrap_or(0);
            if k >= n - 1 {
                k = n - 2;
            }
            base[a] = k;
            frac[a] = s - count::<S>(k);
        }
        let mut acc = S::zero();
        for corner in 0..(1usize << d) {
            let mut w = S::one();
            let mut node = 0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w = w * if bit == 1 { frac[a] } else { S::one() - frac[a] };
                node += (base[a] + bit) * self.strides[a];
            }
            if w != S::zero() {
                acc = acc + w * values[node];
            }
        }
        acc
    }

    /// Grid with every cell halved (node count `n -> 2n - 1` per axis).
    pub fn refined(&self) -> Self {
        Self::new(self.lo.clone(), self.hi.clone(), self.nodes.iter().map(|n| 2 * n - 1).collect())
            .expect("refinement of a valid grid is valid")
    }
}

/// Strictly increasing time knots `0 = t_0 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition<S> {
    knots: Vec<S>,
}

impl<S: Real> TimePartition<S> {
    pub fn new(knots: Vec<S>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidGrid("partition needs at least two knots".into()));
        }
        if knots[0] != S::zero() {
            return Err(Error::InvalidGrid("first knot must be 0".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid("knots must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn uniform(horizon: S, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > S::zero()) {
            return Err(Error::InvalidGrid("uniform partition needs steps >= 1 and T > 0".into()));
        }
        let mut knots: Vec<S> = (0..=steps).map(|k| horizon * count::<S>(k) / count::<S>(steps)).collect();
        knots[steps] = horizon;
        Self::new(knots)
    }

    pub fn knots(&self) -> &[S] {
        &self.knots
    }

    pub fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn horizon(&self) -> S {
        *self.knots.last().unwrap()
    }

    pub fn step(&self, k: usize) -> S {
        self.knots[k + 1] - self.knots[k]
    }

    pub fn mesh(&self) -> S {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(S::zero(), S::max)
    }

    /// Knots from index `k` on, shifted to start at zero; used to play the
    /// game from an intermediate knot.
    pub fn tail_from(&self, k: usize) -> Result<Self> {
        let t0 = self.knots[k];
        Self::new(self.knots[k..].iter().map(|&t| t - t0).collect())
    }

    /// Partition with every step split in two.
    pub fn refined(&self) -> Self {
        let mut knots = Vec::with_capacity(2 * self.knots.len() - 1);
        for w in self.knots.windows(2) {
            knots.push(w[0]);
            knots.push((w[0] + w[1]) / count::<S>(2));
        }
        knots.push(self.horizon());
        Self::new(knots).expect("refinement of a valid partition is valid")
    }
}

/// Lattice `{k / K}` points on the probability simplex of dimension `m`.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    dim: usize,
    resolution: usize,
    nodes: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
    lines: Vec<Vec<usize>>,
}

impl PartialEq for SimplexGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.resolution == other.resolution
    }
}

impl SimplexGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("simplex dimension must be at least 1".into()));
        }
        if resolution == 0 {
            return Err(Error::InvalidGrid("simplex resolution must be at least 1".into()));
        }
        let mut nodes = Vec::new();
        let mut cur = vec![0usize; dim];
        compositions(resolution, 0, &mut cur, &mut nodes);
        let lookup: HashMap<Vec<usize>, usize> = nodes.iter().cloned().enumerate().map(|(k, c)| (c, k)).collect();
        let mut lines = Vec::new();
        for a in 0..dim {
            for b in (a + 1)..dim {
                // A line starts where it cannot be extended by `-e_a + e_b`.
                for (start, c) in nodes.iter().enumerate() {
                    if c[a] != 0 || c[b] < 2 {
                        continue;
                    }
                    let mut line = vec![start];
                    let mut cur = c.clone();
                    while cur[b] > 0 {
                        cur[a] += 1;
                        cur[b] -= 1;
                        line.push(lookup[&cur]);
                    }
                    if line.len() >= 3 {
                        lines.push(line);
                    }
                }
            }
        }
        Ok(Self { dim, resolution, nodes, lookup, lines })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integer coordinates (summing to `K`) of node `k`.
    pub fn counts(&self, k: usize) -> &[usize] {
        &self.nodes[k]
    }

    pub fn index_of(&self, counts: &[usize]) -> Option<usize> {
        self.lookup.get(counts).copied()
    }

    pub fn point<S: Real>(&self, k: usize) -> Vec<S> {
        let kk = count::<S>(self.resolution);
        self.nodes[k].iter().map(|&c| count::<S>(c) / kk).collect()
    }

    /// Index of the vertex `e_i`.
    pub fn vertex(&self, i: usize) -> usize {
        let mut c = vec![0; self.dim];
        c[i] = self.resolution;
        self.lookup[&c]
    }

    /// All grid lines of three consecutive lattice points
    /// `(n - e_a + e_b, n, n + e_a - e_b)` for `a < b`.
    pub fn line_triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (mid, c) in self.nodes.iter().enumerate() {
            for a in 0..self.dim {
                for b in (a + 1)..self.dim {
                    if c[a] == 0 || c[b] == 0 {
                        continue;
                    }
                    let mut lo = c.clone();
                    lo[a] -= 1;
                    lo[b] += 1;
                    let mut hi = c.clone();
                    hi[a] += 1;
                    hi[b] -= 1;
                    out.push((self.lookup[&lo], mid, self.lookup[&hi]));
                }
            }
        }
        out
    }

    /// Maximal lattice lines `n, n + e_a - e_b, ...` for `a < b` with at least three nodes.
    pub fn lines(&self) -> &[Vec<usize>] {
        &self.lines
    }

    /// Neighbouring lattice pairs `(n, n + e_a - e_b)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, c) in self.nodes.iter().enumerate() {
            for a in 0..self.dim {
                for b in 0..self.dim {
                    if a == b || c[b] == 0 {
                        continue;
                    }
                    let mut nb = c.clone();
                    nb[a] += 1;
                    nb[b] -= 1;
                    let j = self.lookup[&nb];
                    if k < j {
                        out.push((k, j));
                    }
                }
            }
        }
        out
    }

    /// Grid with doubled resolution (nests the current one).
    pub fn refined(&self) -> Self {
        Self::new(self.dim, 2 * self.resolution).expect("valid")
    }

    /// Index in a refined grid of node `k` of this grid.
    pub fn embed_in(&self, finer: &SimplexGrid, k: usize) -> Option<usize> {
        if finer.resolution % self.resolution != 0 || finer.dim != self.dim {
            return None;
        }
        let f = finer.resolution / self.resolution;
        let c: Vec<usize> = self.nodes[k].iter().map(|&x| x * f).collect();
        finer.index_of(&c)
    }
}

fn compositions(remaining: usize, axis: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let m = cur.len();
    if axis == m - 1 {
        cur[axis] = remaining;
        out.push(cur.clone());
        return;
    }
    for c in (0..=remaining).rev() {
        cur[axis] = c;
        compositions(remaining - c, axis + 1, cur, out);
    }
}

/// `binom(n, k)` for small arguments.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
