//! Playing a strategy profile: Monte Carlo estimation of the cost functional
//! and exact expectations by enumeration of the control tree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::rng::{inverse_cdf, RandomSource};
use crate::discrete::strategy::{resolve_controls, RandomNadStrategy, StrategyProfile};
use crate::error::{Error, Result};
use crate::model::{integrate, ControlPath, GameSpec, TimePartition};
use crate::numerics::NumericsConfig;

/// How the type pair `(i, j)` enters an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeAveraging {
    /// `(i, j)` drawn from `p x q` with the episode's type variates.
    #[default]
    Sample,
    /// Every type pair is played under the same `omega` and weighted by `p_i q_j`.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub types: TypeAveraging,
}

/// One simulated episode; `i`, `j` are `None` under exact type averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode: u64,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single sample.
    pub stderr: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// Mean and standard error of the payoffs, summed in episode order.
    pub fn from_episodes(episodes: &[Episode]) -> Self {
        let n = episodes.len();
        let nf = n as f64;
        let mean = episodes.iter().map(|e| e.payoff).sum::<f64>() / nf;
        let stderr = if n > 1 {
            let var = episodes.iter().map(|e| (e.payoff - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n_samples: n }
    }
}

/// `X_T` from knot `start` under one control index pair per remaining interval.
pub fn terminal_state(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    u: &[usize],
    v: &[usize],
    numerics: &NumericsConfig<f64>,
) -> Result<Vec<f64>> {
    let knots = &partition.knots()[start..];
    let path = ControlPath::along(knots, u, v)?;
    let h = numerics.ode_step(partition.mesh());
    integrate(spec, knots[0], x, &path, partition.horizon(), h, numerics.ode_step_cap)
}

fn check_start(partition: &TimePartition<f64>, start: usize) -> Result<TimePartition<f64>> {
    if start >= partition.steps() {
        return Err(Error::StrategyMismatch(format!(
            "play must start at a knot before the horizon; knot {start} of {}",
            partition.steps()
        )));
    }
    partition.tail_from(start)
}

fn check_beliefs(spec: &GameSpec<f64>, x: &[f64], p: &[f64], q: &[f64]) -> Result<()> {
    for (len, want) in [(x.len(), spec.dim()), (p.len(), spec.types_p()), (q.len(), spec.types_q())] {
        if len != want {
            return Err(Error::DimensionMismatch { expected: want, got: len });
        }
    }
    Ok(())
}

/// All episodes of a Monte Carlo run, in episode order.
///
/// The game is played from knot `start` of `partition`; every strategy
/// covers the remaining intervals. Episode `e` reads only the variates keyed
/// on `(seed, e)`, so the output is independent of the thread schedule.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    spec: &GameSpec<f64>,
    profile: &StrategyProfile,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    config: &McConfig,
    numerics: &NumericsConfig<f64>,
) -> Result<Vec<Episode>> {
    if config.n_samples == 0 {
        return Err(Error::InvalidSpec("Monte Carlo needs at least one sample".into()));
    }
    check_beliefs(spec, x, p, q)?;
    let tail = check_start(partition, start)?;
    profile.check(spec, &tail)?;
    let play = |i: usize, j: usize, omega: &RandomSource| -> Result<f64> {
        let (u, v) = resolve_controls(&profile.alpha[i], &profile.beta[j], omega, &tail)?;
        Ok(spec.payoff(i, j, &terminal_state(spec, partition, start, x, &u, &v, numerics)?))
    };
    (0..config.n_samples as u64)
        .into_par_iter()
        .map(|e| {
            let omega = RandomSource::new(config.seed, e);
            match config.types {
                TypeAveraging::Sample => {
                    let i = inverse_cdf(p, omega.type_variate(1));
                    let j = inverse_cdf(q, omega.type_variate(2));
                    Ok(Episode { episode: e, i: Some(i), j: Some(j), payoff: play(i, j, &omega)? })
                }
                TypeAveraging::Exact => {
                    let mut acc = 0.0;
                    for (i, &pi) in p.iter().enumerate() {
                        for (j, &qj) in q.iter().enumerate() {
                            if pi * qj > 0.0 {
                                acc += pi * qj * play(i, j, &omega)?;
                            }
                        }
                    }
                    Ok(Episode { episode: e, i: None, j: None, payoff: acc })
                }
            }
        })
        .collect()
}

/// Monte Carlo estimate of `sum_ij p_i q_j E[g_ij(X_T)]` under the profile.
#[allow(clippy::too_many_arguments)]
pub fn payoff_mc(
    spec: &GameSpec<f64>,
    profile: &StrategyProfile,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    config: &McConfig,
    numerics: &NumericsConfig<f64>,
) -> Result<McEstimate> {
    Ok(McEstimate::from_episodes(&simulate(spec, profile, partition, start, x, p, q, config, numerics)?))
}

/// Every control pair path with positive probability, with that probability.
///
/// Both players' mixed actions on interval `l` depend only on the prefixes,
/// so the path law is the product of the per-interval weights.
pub fn path_distribution(
    alpha: &RandomNadStrategy,
    beta: &RandomNadStrategy,
) -> Result<Vec<(Vec<usize>, Vec<usize>, f64)>> {
    alpha.validate()?;
    beta.validate()?;
    let n = alpha.n_intervals();
    if beta.n_intervals() != n {
        return Err(Error::StrategyMismatch(format!(
            "strategies cover {n} and {} intervals",
            beta.n_intervals()
        )));
    }
    let mut out = Vec::new();
    let mut stack = vec![(Vec::with_capacity(n), Vec::with_capacity(n), 1.0)];
    while let Some((u, v, w)) = stack.pop() {
        let l = u.len();
        if l == n {
            out.push((u, v, w));
            continue;
        }
        let a = alpha.mix_at(l, &u, &v).weights();
        let b = beta.mix_at(l, &v, &u).weights();
        for (cu, &wu) in a.iter().enumerate().rev() {
            for (cv, &wv) in b.iter().enumerate().rev() {
                if wu * wv > 0.0 {
                    let (mut u2, mut v2) = (u.clone(), v.clone());
                    u2.push(cu);
                    v2.push(cv);
                    stack.push((u2, v2, w * wu * wv));
                }
            }
        }
    }
    Ok(out)
}

/// `E[g_ij(X_T)]` under `(alpha, beta)` by exact enumeration of the control tree.
#[allow(clippy::too_many_arguments)]
pub fn expected_payoff(
    spec: &GameSpec<f64>,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    alpha: &RandomNadStrategy,
    beta: &RandomNadStrategy,
    i: usize,
    j: usize,
    numerics: &NumericsConfig<f64>,
) -> Result<f64> {
    let tail = check_start(partition, start)?;
    if alpha.n_intervals() != tail.steps() {
        return Err(Error::StrategyMismatch(format!(
            "strategy has {} intervals, {} remain",
            alpha.n_intervals(),
            tail.steps()
        )));
    }
    let mut acc = 0.0;
    for (u, v, w) in path_distribution(alpha, beta)? {
        acc += w * spec.payoff(i, j, &terminal_state(spec, partition, start, x, &u, &v, numerics)?);
    }
    Ok(acc)
}

/// `sum_ij p_i q_j E[g_ij(X_T)]` under the profile, exactly.
#[allow(clippy::too_many_arguments)]
pub fn profile_payoff(
    spec: &GameSpec<f64>,
    profile: &StrategyProfile,
    partition: &TimePartition<f64>,
    start: usize,
    x: &[f64],
    p: &[f64],
    q: &[f64],
    numerics: &NumericsConfig<f64>,
) -> Result<f64> {
    check_beliefs(spec, x, p, q)?;
    profile.check(spec, &check_start(partition, start)?)?;
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        for (j, &qj) in q.iter().enumerate() {
            if pi * qj > 0.0 {
                acc += pi
                    * qj
                    * expected_payoff(spec, partition, start, x, &profile.alpha[i], &profile.beta[j], i, j, numerics)?;
            }
        }
    }
    Ok(acc)
}
