use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::NodeHamiltonian;
use crate::hji::field::{DualField, PdeGrids, Route};
use crate::model::{GameSpec, StateGrid};
use crate::numerics::NumericsConfig;
use crate::scalar::{count, dot, lit, Real};

/// `max_i (p_hat_i - sum_j q_j g_ij(x))`.
pub fn dual_terminal<S: Real>(spec: &GameSpec<S>, x: &[S], p_hat: &[S], q: &[S]) -> S {
    (0..spec.types_p())
        .map(|i| p_hat[i] - (0..spec.types_q()).map(|j| q[j] * spec.payoff(i, j, x)).sum::<S>())
        .fold(S::neg_infinity(), S::max)
}

/// `min_j (q_hat_j - sum_i p_i g_ij(x))`.
pub fn dual_terminal_w<S: Real>(spec: &GameSpec<S>, x: &[S], p: &[S], q_hat: &[S]) -> S {
    (0..spec.types_q())
        .map(|j| q_hat[j] - (0..spec.types_p()).map(|i| p[i] * spec.payoff(i, j, x)).sum::<S>())
        .fold(S::infinity(), S::min)
}

/// Artificial viscosity `sigma_margin * F_max`.
pub fn viscosity<S: Real>(f_max: S, numerics: &NumericsConfig<S>) -> S {
    numerics.sigma_margin * f_max
}

/// Largest stable step `min dx / (2 sigma d)`; infinite when `sigma = 0`.
pub fn cfl_bound<S: Real>(grid: &StateGrid<S>, sigma: S) -> S {
    if sigma <= S::zero() {
        return S::infinity();
    }
    grid.min_spacing() / (lit::<S>(2.0) * sigma * count(grid.dim()))
}

/// One backward Lax–Friedrichs step on a state slice:
/// `out = next + dt [H*(x, (xi- + xi+)/2) + sigma/2 sum_a (xi+_a - xi-_a)]`
/// with one-sided differences `xi-`, `xi+` and zero-gradient ghosts.
///
/// Monotone in `next` whenever `dt <= dx / (sigma d)` and `sigma >= F_max`.
pub fn lf_sweep<S: Real>(
    h: &NodeHamiltonian<S>,
    grid: &StateGrid<S>,
    sigma: S,
    dt: S,
    next: &[S],
    out: &mut [S],
) -> Result<()> {
    let d = grid.dim();
    let half = lit::<S>(0.5);
    let mut xi = vec![S::zero(); d];
    for node in 0..grid.len() {
        let here = next[node];
        let mut visc = S::zero();
        for (a, slot) in xi.iter_mut().enumerate() {
            let stride = grid.stride(a);
            let i = grid.axis_index(node, a);
            let lo = if i > 0 { next[node - stride] } else { here };
            let hi = if i + 1 < grid.nodes_per_axis()[a] { next[node + stride] } else { here };
            let dx = grid.spacing()[a];
            let minus = (here - lo) / dx;
            let plus = (hi - here) / dx;
            *slot = (minus + plus) * half;
            visc = visc + (plus - minus);
        }
        let value = here + dt * (h.h_star(node, &xi)? + sigma * half * visc);
        if !value.is_finite() {
            return Err(Error::NonFinite { knot: 0, node, column: 0 });
        }
        out[node] = value;
    }
    Ok(())
}

/// Marches the dual equation backward for every column of a route.
pub fn solve_dual<S: Real>(
    spec: &GameSpec<S>,
    grids: &PdeGrids<S>,
    numerics: &NumericsConfig<S>,
    route: Route,
) -> Result<DualField<S>> {
    grids.check_spec(spec)?;
    if spec.dim() > numerics.pde_dim_cap {
        return Err(Error::InvalidGrid(format!(
            "state dimension {} exceeds the PDE cap {}",
            spec.dim(),
            numerics.pde_dim_cap
        )));
    }
    let h = NodeHamiltonian::new(spec, &grids.state, numerics)?;
    let sigma = viscosity(h.f_max(), numerics);
    let bound = cfl_bound(&grids.state, sigma);
    for k in 0..grids.time.steps() {
        let dt = grids.time.step(k);
        if dt > bound * (S::one() + lit(1e-9)) {
            return Err(Error::Cfl { step: k, dt: dt.to_f64_lossy(), bound: bound.to_f64_lossy() });
        }
    }

    let state = &grids.state;
    let (ni, nj) = (spec.types_p(), spec.types_q());
    let mut g = vec![S::zero(); state.len() * ni * nj];
    for x in 0..state.len() {
        let pt = state.point(x);
        for i in 0..ni {
            for j in 0..nj {
                g[(x * ni + i) * nj + j] = spec.payoff(i, j, &pt);
            }
        }
    }

    let (n_dual, n_belief) = grids.columns(route);
    let (duals, beliefs): (Vec<Vec<S>>, Vec<Vec<S>>) = match route {
        Route::V => (grids.dual_p.points(), (0..grids.q_grid.len()).map(|b| grids.q_grid.point(b)).collect()),
        Route::W => (grids.dual_q.points(), (0..grids.p_grid.len()).map(|b| grids.p_grid.point(b)).collect()),
    };
    let n_time = grids.time.knots().len();
    let n_state = state.len();
    let mut values = vec![S::zero(); n_time * n_state * n_dual * n_belief];
    let results: Vec<Result<()>> = values
        .par_chunks_mut(n_time * n_state)
        .enumerate()
        .map(|(column, out)| {
            let (dual, belief) = (&duals[column / n_belief], &beliefs[column % n_belief]);
            let last = &mut out[(n_time - 1) * n_state..];
            for (x, slot) in last.iter_mut().enumerate() {
                let gx = &g[x * ni * nj..(x + 1) * ni * nj];
                *slot = match route {
                    Route::V => (0..ni)
                        .map(|i| dual[i] - dot(belief, &gx[i * nj..(i + 1) * nj]))
                        .fold(S::neg_infinity(), S::max),
                    Route::W => (0..nj)
                        .map(|j| dual[j] - (0..ni).map(|i| belief[i] * gx[i * nj + j]).sum::<S>())
                        .fold(S::infinity(), S::min),
                };
            }
            for k in (0..n_time - 1).rev() {
                let (head, tail) = out.split_at_mut((k + 1) * n_state);
                let dt = grids.time.step(k);
                lf_sweep(&h, state, sigma, dt, &tail[..n_state], &mut head[k * n_state..]).map_err(|e| match e {
                    Error::NonFinite { node, .. } => Error::NonFinite { knot: k, node, column },
                    other => other,
                })?;
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<Result<()>>()?;
    DualField::new(route, n_time, n_state, n_dual, n_belief, values)
}

/// V route: `Ṽ` from `max_i (p_hat_i - sum_j q_j g_ij)`.
pub fn solve_dual_v<S: Real>(spec: &GameSpec<S>, grids: &PdeGrids<S>, numerics: &NumericsConfig<S>) -> Result<DualField<S>> {
    solve_dual(spec, grids, numerics, Route::V)
}

/// W route: `W̃` from `min_j (q_hat_j - sum_i p_i g_ij)`.
pub fn solve_dual_w<S: Real>(spec: &GameSpec<S>, grids: &PdeGrids<S>, numerics: &NumericsConfig<S>) -> Result<DualField<S>> {
    solve_dual(spec, grids, numerics, Route::W)
}
