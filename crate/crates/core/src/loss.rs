//! Pairwise surrogate losses for AUC with exact gradients.
//!
//! Pairs are always oriented (positive, negative) with target margin +1:
//! for `delta = phi_pos - phi_neg`, the squared surrogate is
//! `(1 - <w, delta>)^2 + (lambda/2)*||w||^2` and the hinge surrogate is
//! `max(0, 1 - <w, delta>) + (lambda/2)*||w||^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    SquaredAuc,
    HingeAuc,
}

/// A pairwise loss with its l2 regularization coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLoss {
    pub kind: LossKind,
    pub lambda: f64,
}

/// Lipschitz and smoothness constants of a loss over a bounded region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    pub lipschitz_g: f64,
    /// `+inf` for the hinge loss, whose gradient is discontinuous.
    pub smoothness_m: f64,
}

impl PairLoss {
    pub fn new(kind: LossKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(PairLoss { kind, lambda })
    }

    pub fn squared(lambda: f64) -> Result<Self> {
        Self::new(LossKind::SquaredAuc, lambda)
    }

    pub fn hinge(lambda: f64) -> Result<Self> {
        Self::new(LossKind::HingeAuc, lambda)
    }

    fn check_dims(&self, w: &[f64], pos: &[f64], neg: &[f64]) -> Result<()> {
        if pos.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: pos.len(),
            });
        }
        if neg.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: neg.len(),
            });
        }
        Ok(())
    }

    fn margin(w: &[f64], pos: &[f64], neg: &[f64]) -> f64 {
        w.iter()
            .zip(pos.iter().zip(neg))
            .map(|(wi, (p, n))| wi * (p - n))
            .sum()
    }

    /// Loss of `w` on the oriented pair `(phi_pos, phi_neg)`.
    pub fn eval(&self, w: &[f64], phi_pos: &[f64], phi_neg: &[f64]) -> Result<f64> {
        self.check_dims(w, phi_pos, phi_neg)?;
        let m = Self::margin(w, phi_pos, phi_neg);
        let reg = 0.5 * self.lambda * vecops::dot(w, w);
        let val = match self.kind {
            LossKind::SquaredAuc => (1.0 - m) * (1.0 - m),
            LossKind::HingeAuc => (1.0 - m).max(0.0),
        };
        Ok(val + reg)
    }

    /// Writes the (sub)gradient at `w` into `out` (same length as `w`).
    /// The hinge subgradient at the kink is 0.
    pub fn grad_into(
        &self,
        w: &[f64],
        phi_pos: &[f64],
        phi_neg: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.check_dims(w, phi_pos, phi_neg)?;
        if out.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: out.len(),
            });
        }
        let m = Self::margin(w, phi_pos, phi_neg);
        let coeff = match self.kind {
            LossKind::SquaredAuc => -2.0 * (1.0 - m),
            LossKind::HingeAuc => {
                if m < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        };
        for (i, o) in out.iter_mut().enumerate() {
            *o = coeff * (phi_pos[i] - phi_neg[i]) + self.lambda * w[i];
        }
        Ok(())
    }

    pub fn grad(&self, w: &[f64], phi_pos: &[f64], phi_neg: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; w.len()];
        self.grad_into(w, phi_pos, phi_neg, &mut out)?;
        Ok(out)
    }

    /// Lipschitz/smoothness constants over `||w|| <= w_bound` and pair
    /// differences bounded by `feat_bound` (2 for unit-norm mapped features).
    pub fn constants(&self, w_bound: f64, feat_bound: f64) -> LossConstants {
        match self.kind {
            LossKind::SquaredAuc => LossConstants {
                lipschitz_g: 2.0 * (1.0 + w_bound * feat_bound) * feat_bound
                    + self.lambda * w_bound,
                smoothness_m: 2.0 * feat_bound * feat_bound + self.lambda,
            },
            LossKind::HingeAuc => LossConstants {
                lipschitz_g: feat_bound + self.lambda * w_bound,
                smoothness_m: f64::INFINITY,
            },
        }
    }
}
