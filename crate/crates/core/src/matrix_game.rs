//! Exact solution of finite two-player zero-sum games.
//!
//! Convention used throughout the crate: the **row player minimizes** and
//! the column player maximizes. The value is computed from the row
//! player's linear program, solved by a dense tableau simplex with Bland's
//! lowest-index rule; the column player's optimal mix is read off the dual
//! prices of the same tableau.

use crate::error::{Error, Result};
use crate::model::MixedStrategy;
use crate::scalar::Scalar;

/// `m x n` payoff table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame<S> {
    rows: usize,
    cols: usize,
    entries: Vec<S>,
}

impl<S: Scalar> MatrixGame<S> {
    pub fn new(rows: usize, cols: usize, entries: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidSpec("matrix game needs m, n >= 1".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: entries.len() });
        }
        if entries.iter().any(|e| !e.to_f64_lossy().is_finite()) {
            return Err(Error::InvalidSpec("matrix game entries must be finite".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpec("ragged payoff rows".into()));
        }
        Self::new(m, n, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.cols + j]
    }

    pub fn transposed(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone()).expect("same entries")
    }

    /// `-A^T`: the same game seen from the other player.
    pub fn negated_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| -self.at(j, i).clone()).expect("same entries")
    }

    /// `(A y)_i` for every row.
    pub fn row_payoffs(&self, col_mix: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (j, y) in col_mix.iter().enumerate() {
                    acc = acc + self.at(i, j).clone() * y.clone();
                }
                acc
            })
            .collect()
    }

    /// `(x^T A)_j` for every column.
    pub fn col_payoffs(&self, row_mix: &[S]) -> Vec<S> {
        (0..self.cols)
            .map(|j| {
                let mut acc = S::zero();
                for (i, x) in row_mix.iter().enumerate() {
                    acc = acc + self.at(i, j).clone() * x.clone();
                }
                acc
            })
            .collect()
    }

    fn min_max_entries(&self) -> (S, S) {
        let mut lo = self.entries[0].clone();
        let mut hi = self.entries[0].clone();
        for e in &self.entries[1..] {
            if *e < lo {
                lo = e.clone();
            }
            if *e > hi {
                hi = e.clone();
            }
        }
        (lo, hi)
    }
}

/// Value and optimal mixes of a matrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct Saddle<S: Scalar> {
    pub value: S,
    pub row_mix: MixedStrategy<S>,
    pub col_mix: MixedStrategy<S>,
    /// `max_j (x^T A)_j - min_i (A y)_i`.
    pub certificate_gap: S,
}

fn max_of<S: Scalar>(v: &[S]) -> S {
    v.iter().skip(1).fold(v[0].clone(), |a, b| if *b > a { b.clone() } else { a })
}

fn min_of<S: Scalar>(v: &[S]) -> S {
    v.iter().skip(1).fold(v[0].clone(), |a, b| if *b < a { b.clone() } else { a })
}

/// Guaranteed-payoff gap of a pair of mixes.
pub fn certificate_gap<S: Scalar>(game: &MatrixGame<S>, row_mix: &[S], col_mix: &[S]) -> S {
    max_of(&game.col_payoffs(row_mix)) - min_of(&game.row_payoffs(col_mix))
}

/// `(min_i max_j A_ij, max_j min_i A_ij)` over pure strategies.
pub fn pure_minimax<S: Scalar>(game: &MatrixGame<S>) -> (S, S) {
    let row_max: Vec<S> = (0..game.rows)
        .map(|i| max_of(&game.entries[i * game.cols..(i + 1) * game.cols]))
        .collect();
    let col_min: Vec<S> = (0..game.cols)
        .map(|j| {
            let col: Vec<S> = (0..game.rows).map(|i| game.at(i, j).clone()).collect();
            min_of(&col)
        })
        .collect();
    (min_of(&row_max), max_of(&col_min))
}

/// Solves the game exactly; see the module docs for the convention.
pub fn solve<S: Scalar>(game: &MatrixGame<S>, tol_game: S) -> Result<Saddle<S>> {
    let (m, n) = (game.rows, game.cols);
    let (lo, hi) = game.min_max_entries();
    let range = hi.clone() - lo.clone();
    if range <= S::zero() {
        return Ok(Saddle {
            value: lo,
            row_mix: MixedStrategy::pure(m, 0),
            col_mix: MixedStrategy::pure(n, 0),
            certificate_gap: S::zero(),
        });
    }

    // Normalize entries into [1, 2]: positive, and invariant under positive
    // affine maps of A, so the pivot path depends only on the game's shape.
    // Structural variables are the row player's weights scaled by 1/value,
    // one constraint per column: max sum z s.t. B^T z <= 1.
    let (vars, cons) = (m, n);
    let width = vars + cons + 1;
    let mut tab = vec![S::zero(); (cons + 1) * width];
    for j in 0..cons {
        for i in 0..vars {
            tab[j * width + i] = (game.at(i, j).clone() - lo.clone()) / range.clone() + S::one();
        }
        tab[j * width + vars + j] = S::one();
        tab[j * width + width - 1] = S::one();
    }
    for i in 0..vars {
        tab[cons * width + i] = -S::one();
    }
    let mut basis: Vec<usize> = (vars..vars + cons).collect();

    let eps = S::pivot_eps();
    let ill = eps.clone() * S::from_f64_lossy(1e3);
    let max_pivots = 50 * (m + n) + 100;
    let mut pivots = 0;
    loop {
        let Some(enter) = (0..vars + cons).find(|&c| tab[cons * width + c] < -eps.clone()) else {
            break;
        };
        let mut leave: Option<(usize, S)> = None;
        let mut col_max = S::zero();
        for r in 0..cons {
            let a = tab[r * width + enter].clone();
            if a.abs() > col_max {
                col_max = a.abs();
            }
            if a > eps {
                let ratio = tab[r * width + width - 1].clone() / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        let tie_tol = eps.clone() * (S::one() + best.abs());
                        if ratio < best.clone() - tie_tol.clone() {
                            Some((r, ratio))
                        } else if (ratio.clone() - best.clone()).abs() <= tie_tol && basis[r] < basis[br] {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
        }
        // The feasible region is bounded because every entry is positive.
        let Some((row, _)) = leave else {
            return Err(ill_conditioned(game, &basis, S::zero()));
        };
        let piv = tab[row * width + enter].clone();
        if piv < ill.clone() * col_max {
            return Err(ill_conditioned(game, &basis, piv));
        }
        for c in 0..width {
            tab[row * width + c] = tab[row * width + c].clone() / piv.clone();
        }
        for r in 0..=cons {
            if r == row {
                continue;
            }
            let factor = tab[r * width + enter].clone();
            if factor == S::zero() {
                continue;
            }
            for c in 0..width {
                let delta = factor.clone() * tab[row * width + c].clone();
                tab[r * width + c] = tab[r * width + c].clone() - delta;
            }
        }
        basis[row] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(ill_conditioned(game, &basis, piv));
        }
    }

    let total = tab[cons * width + width - 1].clone();
    if total <= S::zero() {
        return Err(ill_conditioned(game, &basis, total));
    }
    let mut z = vec![S::zero(); vars];
    for (r, &b) in basis.iter().enumerate() {
        if b < vars {
            z[b] = tab[r * width + width - 1].clone();
        }
    }
    let y: Vec<S> = (0..cons).map(|j| tab[cons * width + vars + j].clone()).collect();
    let row_mix = MixedStrategy::from_unnormalized(z)?;
    let col_mix = MixedStrategy::from_unnormalized(y)?;
    let value_b = S::one() / total;
    let value = (value_b - S::one()) * range + lo;
    let gap = certificate_gap(game, row_mix.weights(), col_mix.weights());
    if gap > tol_game || gap < -tol_game.clone() {
        return Err(Error::Certificate { gap: gap.to_f64_lossy(), tol: tol_game.to_f64_lossy() });
    }
    Ok(Saddle { value, row_mix, col_mix, certificate_gap: gap })
}

fn ill_conditioned<S: Scalar>(game: &MatrixGame<S>, basis: &[usize], pivot: S) -> Error {
    let rows: Vec<usize> = basis.iter().copied().filter(|&b| b < game.rows).collect();
    let submatrix = rows
        .iter()
        .map(|&i| (0..game.cols).map(|j| game.at(i, j).to_f64_lossy()).collect())
        .collect();
    Error::IllConditioned { pivot: pivot.to_f64_lossy(), submatrix }
}
