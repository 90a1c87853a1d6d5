//! Random non-anticipative strategies with delay, as finite decision tables.
//!
//! On interval `l` a rule observes the player's own controls and the
//! opponent's controls on intervals `0..l` (never the current one), picks a
//! mixed action, and the control is drawn from it with the fresh variate
//! `zeta_l`. Own past controls are deterministic functions of the own past
//! variates and observations, so the table reads the same information as a
//! map of `(zeta_0, ..., zeta_l)` and the opponent prefix.

use serde::{Deserialize, Serialize};

use crate::discrete::rng::{inverse_cdf, RandomSource};
use crate::error::{Error, Result};
use crate::model::{GameSpec, MixedStrategy, TimePartition};
use crate::scalar::Real;

/// A table entry; `None` matches any history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    #[serde(default)]
    pub own: Option<Vec<usize>>,
    #[serde(default)]
    pub opp: Option<Vec<usize>>,
    pub mix: MixedStrategy<f64>,
}

/// Decision table of one interval: first matching rule wins, else `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRule {
    pub default: MixedStrategy<f64>,
    #[serde(default)]
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomNadStrategy {
    pub controls: usize,
    pub intervals: Vec<IntervalRule>,
}

impl RandomNadStrategy {
    pub fn new(controls: usize, intervals: Vec<IntervalRule>) -> Result<Self> {
        let s = Self { controls, intervals };
        s.validate()?;
        Ok(s)
    }

    /// The same mixed action on every interval, ignoring all observations.
    pub fn constant(controls: usize, n_intervals: usize, mix: MixedStrategy<f64>) -> Result<Self> {
        Self::new(controls, vec![IntervalRule { default: mix, rules: vec![] }; n_intervals])
    }

    /// A fixed open-loop sequence of controls.
    pub fn open_loop(controls: usize, sequence: &[usize]) -> Result<Self> {
        let intervals = sequence
            .iter()
            .map(|&c| {
                if c >= controls {
                    return Err(Error::InvalidMix(format!("control {c} out of range {controls}")));
                }
                Ok(IntervalRule { default: MixedStrategy::pure(controls, c), rules: vec![] })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(controls, intervals)
    }

    pub fn n_intervals(&self) -> usize {
        self.intervals.len()
    }

    /// Shapes of every mix, and the delay property: a rule on interval `l`
    /// keys on histories of length exactly `l`, so it never reads a control
    /// of interval `l` itself.
    pub fn validate(&self) -> Result<()> {
        for (l, table) in self.intervals.iter().enumerate() {
            let mixes = std::iter::once(&table.default).chain(table.rules.iter().map(|r| &r.mix));
            for mix in mixes {
                if mix.len() != self.controls {
                    return Err(Error::InvalidMix(format!(
                        "interval {l}: mix over {} controls, strategy has {}",
                        mix.len(),
                        self.controls
                    )));
                }
            }
            for rule in &table.rules {
                for key in [&rule.own, &rule.opp].into_iter().flatten() {
                    if key.len() > l {
                        return Err(Error::DelayViolation { interval: l, read: key.len(), allowed: l });
                    }
                    if key.len() < l {
                        return Err(Error::StrategyMismatch(format!(
                            "interval {l}: rule keys on {} intervals, expected {l}",
                            key.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Mixed action on interval `l` after observing the prefixes `own[..l]`, `opp[..l]`.
    pub fn mix_at(&self, l: usize, own: &[usize], opp: &[usize]) -> &MixedStrategy<f64> {
        let table = &self.intervals[l];
        table
            .rules
            .iter()
            .find(|r| r.own.as_deref().is_none_or(|k| k == own) && r.opp.as_deref().is_none_or(|k| k == opp))
            .map_or(&table.default, |r| &r.mix)
    }

    /// Control on interval `l` given the prefixes and the variate `zeta_l`.
    pub fn choose(&self, l: usize, own: &[usize], opp: &[usize], zeta: f64) -> usize {
        inverse_cdf(self.mix_at(l, own, opp).weights(), zeta)
    }
}

/// One strategy per type of each player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub alpha: Vec<RandomNadStrategy>,
    pub beta: Vec<RandomNadStrategy>,
}

impl StrategyProfile {
    pub fn new(alpha: Vec<RandomNadStrategy>, beta: Vec<RandomNadStrategy>) -> Self {
        Self { alpha, beta }
    }

    /// Validates counts against `spec` and interval counts against the partition.
    pub fn check<S: Real>(&self, spec: &GameSpec<S>, partition: &TimePartition<S>) -> Result<()> {
        if self.alpha.len() != spec.types_p() || self.beta.len() != spec.types_q() {
            return Err(Error::StrategyMismatch(format!(
                "profile has {} x {} strategies, game has I = {}, J = {}",
                self.alpha.len(),
                self.beta.len(),
                spec.types_p(),
                spec.types_q()
            )));
        }
        for (side, list, controls) in [
            ("alpha", &self.alpha, spec.u_controls().len()),
            ("beta", &self.beta, spec.v_controls().len()),
        ] {
            for (k, s) in list.iter().enumerate() {
                s.validate()?;
                if s.controls != controls {
                    return Err(Error::StrategyMismatch(format!(
                        "{side}[{k}] uses {} controls, game has {controls}",
                        s.controls
                    )));
                }
                if s.n_intervals() != partition.steps() {
                    return Err(Error::StrategyMismatch(format!(
                        "{side}[{k}] has {} intervals, partition has {}",
                        s.n_intervals(),
                        partition.steps()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The control pair with `alpha(omega, v) = u` and `beta(omega, u) = v`.
///
/// Interval `l` only reads prefixes fixed on earlier intervals, so the pair
/// is built interval by interval and is unique.
pub fn resolve_controls<S: Real>(
    alpha: &RandomNadStrategy,
    beta: &RandomNadStrategy,
    omega: &RandomSource,
    partition: &TimePartition<S>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    alpha.validate()?;
    beta.validate()?;
    let n = partition.steps();
    if alpha.n_intervals() != n || beta.n_intervals() != n {
        return Err(Error::StrategyMismatch(format!(
            "strategies cover {} and {} intervals, partition has {n}",
            alpha.n_intervals(),
            beta.n_intervals()
        )));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for l in 0..n {
        let a = alpha.choose(l, &u, &v, omega.zeta(1, l));
        let b = beta.choose(l, &v, &u, omega.zeta(2, l));
        u.push(a);
        v.push(b);
    }
    Ok((u, v))
}
