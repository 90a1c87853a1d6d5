use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hji::field::{DualField, PdeGrids, Route, ValueField};
use crate::matrix_game::{solve, MatrixGame};
use crate::model::{integrate, ControlPath, GameSpec};
use crate::numerics::NumericsConfig;
use crate::scalar::Real;

/// State nodes inside the box deflated by `f_max (T - t_k)`.
pub fn certified_mask<S: Real>(grids: &PdeGrids<S>, f_max: S, k: usize) -> Vec<bool> {
    let remaining = grids.time.horizon() - grids.time.knots()[k];
    (0..grids.state.len())
        .map(|x| grids.state.inside_deflated(&grids.state.point(x), f_max * remaining))
        .collect()
}

/// Largest `|V - W|` and where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport<S> {
    pub max_gap: S,
    /// (time knot, state node, p node, q node).
    pub at: (usize, usize, usize, usize),
    pub tol: S,
    pub passed: bool,
}

/// Compares two primal fields node by node, optionally restricted to the
/// `(knot, state node)` pairs accepted by `mask`.
pub fn check_value_agreement<S: Real>(
    vf: &ValueField<S>,
    wf: &ValueField<S>,
    tol: S,
    mask: Option<&dyn Fn(usize, usize) -> bool>,
) -> Result<AgreementReport<S>> {
    if vf.shape() != wf.shape() {
        return Err(Error::DimensionMismatch { expected: vf.values().len(), got: wf.values().len() });
    }
    let (nt, nx, np, nq) = vf.shape();
    let mut max_gap = S::zero();
    let mut at = (0, 0, 0, 0);
    for k in 0..nt {
        for x in 0..nx {
            if mask.is_some_and(|m| !m(k, x)) {
                continue;
            }
            for p in 0..np {
                for q in 0..nq {
                    let gap = (vf.at(k, x, p, q) - wf.at(k, x, p, q)).abs();
                    if gap > max_gap {
                        max_gap = gap;
                        at = (k, x, p, q);
                    }
                }
            }
        }
    }
    Ok(AgreementReport { max_gap, at, tol, passed: max_gap <= tol })
}

/// One node of a dual field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubDppSample {
    pub knot: usize,
    pub node: usize,
    pub dual: usize,
    pub belief: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubDppReport<S> {
    pub max_violation: S,
    pub worst: Option<SubDppSample>,
    pub violations: Vec<S>,
}

/// One-step programming inequality of a dual field.
///
/// With `M_vu` the field at the next knot, interpolated at the endpoint of
/// the constant-control trajectory, the V route must satisfy
/// `Ṽ(t_k, x) <= val M` and the W route `W̃(t_k, x) >= val M`, where `val`
/// is the mixed value with `v` minimizing. Samples at the last knot are skipped.
pub fn check_subdpp<S: Real>(
    dual: &DualField<S>,
    spec: &GameSpec<S>,
    grids: &PdeGrids<S>,
    samples: &[SubDppSample],
    numerics: &NumericsConfig<S>,
) -> Result<SubDppReport<S>> {
    grids.check_spec(spec)?;
    let knots = grids.time.knots();
    let h_ode = numerics.ode_step(grids.time.mesh());
    let (nu, nv) = (spec.u_controls().len(), spec.v_controls().len());
    let violations: Vec<Result<S>> = samples
        .par_iter()
        .map(|s| {
            if s.knot + 1 >= knots.len() {
                return Ok(S::zero());
            }
            let x = grids.state.point(s.node);
            let next = dual.slice(s.knot + 1, s.dual, s.belief);
            let mut m = Vec::with_capacity(nu * nv);
            for v in 0..nv {
                for u in 0..nu {
                    let path = ControlPath::constant(u, v);
                    let end = integrate(spec, knots[s.knot], &x, &path, knots[s.knot + 1], h_ode, numerics.ode_step_cap)?;
                    m.push(grids.state.interpolate(next, &end));
                }
            }
            let value = solve(&MatrixGame::new(nv, nu, m)?, numerics.tol_game)?.value;
            let here = dual.at(s.knot, s.node, s.dual, s.belief);
            Ok(match dual.route {
                Route::V => (here - value).max(S::zero()),
                Route::W => (value - here).max(S::zero()),
            })
        })
        .collect();
    let violations = violations.into_iter().collect::<Result<Vec<S>>>()?;
    let mut max_violation = S::zero();
    let mut worst = None;
    for (s, &v) in samples.iter().zip(&violations) {
        if v > max_violation {
            max_violation = v;
            worst = Some(*s);
        }
    }
    Ok(SubDppReport { max_violation, worst, violations })
}
