//! Fixed-step RK4 integration of the controlled dynamics under
//! piecewise-constant control paths.

use crate::error::{Error, Result};
use crate::model::spec::GameSpec;
use crate::scalar::{count, lit, norm2, Real};

/// Piecewise-constant pair of control indices.
///
/// `controls[k]` is active on `[switches[k - 1], switches[k])`, with the first
/// piece extending to `-inf` and the last to `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath<S> {
    switches: Vec<S>,
    controls: Vec<(usize, usize)>,
}

impl<S: Real> ControlPath<S> {
    pub fn new(switches: Vec<S>, controls: Vec<(usize, usize)>) -> Result<Self> {
        if controls.len() != switches.len() + 1 {
            return Err(Error::InvalidSpec(format!(
                "control path needs {} pieces for {} switch times, got {}",
                switches.len() + 1,
                switches.len(),
                controls.len()
            )));
        }
        if switches.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSpec("switch times must be strictly increasing".into()));
        }
        Ok(Self { switches, controls })
    }

    pub fn constant(u: usize, v: usize) -> Self {
        Self { switches: Vec::new(), controls: vec![(u, v)] }
    }

    /// One control pair per partition interval; `knots` are the interval
    /// endpoints, so interior knots become switch times.
    pub fn along(knots: &[S], u: &[usize], v: &[usize]) -> Result<Self> {
        if knots.len() != u.len() + 1 || u.len() != v.len() || u.is_empty() {
            return Err(Error::InvalidSpec("one (u, v) pair per interval required".into()));
        }
        let switches = knots[1..knots.len() - 1].to_vec();
        Self::new(switches, u.iter().copied().zip(v.iter().copied()).collect())
    }

    pub fn pieces(&self) -> usize {
        self.controls.len()
    }

    fn piece_bounds(&self, k: usize) -> (S, S) {
        let a = if k == 0 { S::neg_infinity() } else { self.switches[k - 1] };
        let b = if k == self.switches.len() { S::infinity() } else { self.switches[k] };
        (a, b)
    }

    pub fn control_at(&self, s: S) -> (usize, usize) {
        let k = self.switches.partition_point(|&w| w <= s);
        self.controls[k]
    }
}

fn rk4_step<S: Real>(
    spec: &GameSpec<S>,
    x: &mut [S],
    u: usize,
    v: usize,
    h: S,
    k: &mut [Vec<S>; 4],
    tmp: &mut [S],
) {
    let half = lit::<S>(0.5);
    let d = x.len();
    spec.f_into(x, u, v, &mut k[0]);
    for a in 0..d {
        tmp[a] = x[a] + half * h * k[0][a];
    }
    spec.f_into(tmp, u, v, &mut k[1]);
    for a in 0..d {
        tmp[a] = x[a] + half * h * k[1][a];
    }
    spec.f_into(tmp, u, v, &mut k[2]);
    for a in 0..d {
        tmp[a] = x[a] + h * k[2][a];
    }
    spec.f_into(tmp, u, v, &mut k[3]);
    let sixth = h / lit(6.0);
    for a in 0..d {
        x[a] = x[a] + sixth * (k[0][a] + lit::<S>(2.0) * k[1][a] + lit::<S>(2.0) * k[2][a] + k[3][a]);
    }
}

/// `X_s^{t,x,u,v}` by explicit RK4 with step at most `h_ode`.
///
/// Each constant-control piece intersected with `[t, s]` is split into
/// `ceil(len / h_ode)` equal steps, so integration is exactly additive across
/// switch times.
pub fn integrate<S: Real>(
    spec: &GameSpec<S>,
    t: S,
    x: &[S],
    path: &ControlPath<S>,
    s: S,
    h_ode: S,
    step_cap: usize,
) -> Result<Vec<S>> {
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x.len() });
    }
    if !(t <= s) {
        return Err(Error::InvalidSpec(format!("integration needs t <= s (t = {t}, s = {s})")));
    }
    if !(h_ode > S::zero()) {
        return Err(Error::InvalidSpec("h_ode must be positive".into()));
    }
    let mut plan = Vec::new();
    let mut total = 0usize;
    for k in 0..path.pieces() {
        let (a, b) = path.piece_bounds(k);
        let lo = a.max(t);
        let hi = b.min(s);
        if !(lo < hi) {
            continue;
        }
        let len = hi - lo;
        let n = (len / h_ode).ceil().to_usize().unwrap_or(usize::MAX).max(1);
        total = total.saturating_add(n);
        if total > step_cap {
            return Err(Error::IntegrationBudget { steps: total, cap: step_cap });
        }
        plan.push((path.controls[k], len / count::<S>(n), n));
    }
    let d = spec.dim();
    let mut state = x.to_vec();
    let mut k = [vec![S::zero(); d], vec![S::zero(); d], vec![S::zero(); d], vec![S::zero(); d]];
    let mut tmp = vec![S::zero(); d];
    for ((u, v), h, n) in plan {
        for _ in 0..n {
            rk4_step(spec, &mut state, u, v, h, &mut k, &mut tmp);
        }
    }
    Ok(state)
}

/// One sample for the trajectory estimates.
#[derive(Debug, Clone)]
pub struct EstimateSample<S> {
    pub t: S,
    pub t2: S,
    pub x: Vec<S>,
    pub x2: Vec<S>,
    pub path: ControlPath<S>,
    pub s: S,
}

/// Fitted constants for `|X_s - x| <= C (s - t)` and
/// `|X_s^{t,x} - X_s^{t',x'}| <= C (|t - t'| + |x - x'|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport<S> {
    pub displacement_c: S,
    pub stability_c: S,
    /// `sup |f|` supplied by the caller.
    pub f_bound: S,
    /// Largest `|X_s - x| - f_bound (s - t)`, which should be <= 0 up to
    /// integrator error.
    pub max_violation: S,
}

impl<S: Real> EstimateReport<S> {
    pub fn fitted_c(&self) -> S {
        self.displacement_c.max(self.stability_c)
    }
}

pub fn verify_estimates<S: Real>(
    spec: &GameSpec<S>,
    samples: &[EstimateSample<S>],
    f_bound: S,
    h_ode: S,
    step_cap: usize,
) -> Result<EstimateReport<S>> {
    let mut disp = S::zero();
    let mut stab = S::zero();
    let mut viol = S::neg_infinity();
    for smp in samples {
        let xs = integrate(spec, smp.t, &smp.x, &smp.path, smp.s, h_ode, step_cap)?;
        let moved: Vec<S> = xs.iter().zip(&smp.x).map(|(&a, &b)| a - b).collect();
        let dist = norm2(&moved);
        let elapsed = smp.s - smp.t;
        if elapsed > S::zero() {
            disp = disp.max(dist / elapsed);
        }
        viol = viol.max(dist - f_bound * elapsed);

        let xs2 = integrate(spec, smp.t2, &smp.x2, &smp.path, smp.s, h_ode, step_cap)?;
        let gap: Vec<S> = xs.iter().zip(&xs2).map(|(&a, &b)| a - b).collect();
        let dx: Vec<S> = smp.x.iter().zip(&smp.x2).map(|(&a, &b)| a - b).collect();
        let denom = (smp.t - smp.t2).abs() + norm2(&dx);
        if denom > S::zero() {
            stab = stab.max(norm2(&gap) / denom);
        }
    }
    if samples.is_empty() {
        viol = S::zero();
    }
    Ok(EstimateReport { displacement_c: disp, stability_c: stab, f_bound, max_violation: viol })
}
