use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A probability vector over a finite support.
///
/// Used for mixed controls over `U` and `V` as well as for the beliefs
/// `p` over the row player's types and `q` over the column player's types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct MixedStrategy<S: Scalar> {
    weights: Vec<S>,
}

impl<S: Scalar> MixedStrategy<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMix("empty support".into()));
        }
        let mut sum = S::zero();
        for (k, w) in weights.iter().enumerate() {
            if *w < S::zero() {
                return Err(Error::InvalidMix(format!("weight {k} is negative ({w})")));
            }
            sum = sum + w.clone();
        }
        if (sum.clone() - S::one()).abs() > S::simplex_tol() {
            return Err(Error::InvalidMix(format!("weights sum to {sum}")));
        }
        Ok(Self { weights })
    }

    /// Clamps tiny negative round-off to zero and renormalizes.
    pub fn from_unnormalized(mut weights: Vec<S>) -> Result<Self> {
        let mut sum = S::zero();
        for w in weights.iter_mut() {
            if *w < S::zero() {
                *w = S::zero();
            }
            sum = sum + w.clone();
        }
        if sum <= S::zero() {
            return Err(Error::InvalidMix("no positive mass".into()));
        }
        for w in weights.iter_mut() {
            *w = w.clone() / sum.clone();
        }
        Self::new(weights)
    }

    pub fn pure(n: usize, k: usize) -> Self {
        assert!(k < n, "pure strategy index {k} out of range {n}");
        let mut weights = vec![S::zero(); n];
        weights[k] = S::one();
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        let mut denom = S::zero();
        for _ in 0..n {
            denom = denom + S::one();
        }
        Self { weights: vec![S::one() / denom; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> S {
        self.weights[k].clone()
    }

    /// Expectation of `values` under the mix.
    pub fn expect(&self, values: &[S]) -> S {
        assert_eq!(values.len(), self.weights.len());
        let mut acc = S::zero();
        for (w, v) in self.weights.iter().zip(values) {
            acc = acc + w.clone() * v.clone();
        }
        acc
    }
}

impl<S: Scalar> TryFrom<Vec<S>> for MixedStrategy<S> {
    type Error = Error;
    fn try_from(v: Vec<S>) -> Result<Self> {
        Self::new(v)
    }
}

impl<S: Scalar> From<MixedStrategy<S>> for Vec<S> {
    fn from(m: MixedStrategy<S>) -> Vec<S> {
        m.weights
    }
}
