use rayon::prelude::*;

use crate::error::Result;
use crate::fenchel::{convex_envelope_in_place, node_points};
use crate::hji::field::{DualField, PdeGrids, Route, ValueField};
use crate::numerics::NumericsConfig;
use crate::scalar::{count, dot, Real};

/// Primal field and the dual-box diagnostic of the conjugation.
#[derive(Debug, Clone)]
pub struct Recovery<S> {
    pub field: ValueField<S>,
    /// Share of recovered nodes whose optimum over the dual box is attained
    /// only on its boundary (beating every interior node by more than `tol_cvx`).
    pub boundary_fraction: S,
    pub warning: Option<String>,
}

/// `V = max_{p_hat} <p_hat, p> - Ṽ` followed by the concave envelope in `q`
/// (V route), or `W = min_{q_hat} <q_hat, q> - W̃` followed by the convex
/// envelope in `p` (W route).
pub fn recover_primal<S: Real>(dual: &DualField<S>, grids: &PdeGrids<S>, numerics: &NumericsConfig<S>) -> Result<Recovery<S>> {
    let (n_time, n_state, n_dual, n_belief) = dual.shape();
    let (n_p, n_q) = (grids.p_grid.len(), grids.q_grid.len());
    let (dual_box, target_grid, env_grid) = match dual.route {
        Route::V => (&grids.dual_p, &grids.p_grid, &grids.q_grid),
        Route::W => (&grids.dual_q, &grids.q_grid, &grids.p_grid),
    };
    debug_assert_eq!(dual_box.len(), n_dual);
    debug_assert_eq!(env_grid.len(), n_belief);
    let duals = dual_box.points();
    let boundary: Vec<bool> = (0..n_dual).map(|a| dual_box.is_boundary(a)).collect();
    let targets = node_points::<S>(target_grid);
    let margin = numerics.tol_cvx;
    let env_tol = numerics.tol_cvx;
    // The V route maximizes; the W route minimizes, handled by negation.
    let sign = match dual.route {
        Route::V => S::one(),
        Route::W => -S::one(),
    };

    let chunks: Vec<Result<(Vec<S>, usize)>> = (0..n_time * n_state)
        .into_par_iter()
        .map(|kx| {
            let (k, x) = (kx / n_state, kx % n_state);
            let n_target = targets.len();
            // `lines[b * n_target + t]`: conjugate at target node t for belief b.
            let mut lines = vec![S::zero(); n_belief * n_target];
            let mut hits = 0usize;
            for b in 0..n_belief {
                for (t, tp) in targets.iter().enumerate() {
                    let mut inner = S::neg_infinity();
                    let mut outer = S::neg_infinity();
                    for a in 0..n_dual {
                        let v = sign * (dot(&duals[a], tp) - dual.at(k, x, a, b));
                        if boundary[a] {
                            outer = outer.max(v);
                        } else {
                            inner = inner.max(v);
                        }
                    }
                    if outer > inner + margin * (S::one() + inner.abs()) {
                        hits += 1;
                    }
                    lines[b * n_target + t] = sign * inner.max(outer);
                }
            }
            // Envelope across the parameter belief: concave in q (V), convex in p (W).
            let mut col = vec![S::zero(); n_belief];
            for t in 0..n_target {
                for b in 0..n_belief {
                    col[b] = -sign * lines[b * n_target + t];
                }
                convex_envelope_in_place(env_grid, &mut col, env_tol)?;
                for b in 0..n_belief {
                    lines[b * n_target + t] = -sign * col[b];
                }
            }
            let mut out = vec![S::zero(); n_p * n_q];
            for b in 0..n_belief {
                for t in 0..n_target {
                    let (ip, iq) = match dual.route {
                        Route::V => (t, b),
                        Route::W => (b, t),
                    };
                    out[ip * n_q + iq] = lines[b * n_target + t];
                }
            }
            Ok((out, hits))
        })
        .collect();

    let mut values = Vec::with_capacity(n_time * n_state * n_p * n_q);
    let mut hits = 0usize;
    for chunk in chunks {
        let (v, h) = chunk?;
        values.extend(v);
        hits += h;
    }
    let total = n_time * n_state * n_belief * targets.len();
    let boundary_fraction = count::<S>(hits) / count::<S>(total.max(1));
    let warning = (boundary_fraction > numerics.boundary_fraction).then(|| {
        format!(
            "enlarge dual box: {:.1}% of recovered nodes attain their conjugate on the box boundary",
            100.0 * boundary_fraction.to_f64_lossy()
        )
    });
    Ok(Recovery { field: ValueField::new(n_time, n_state, n_p, n_q, values)?, boundary_fraction, warning })
}
