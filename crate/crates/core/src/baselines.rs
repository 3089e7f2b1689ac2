//! Comparison learners behind the same online-learner interface:
//! last-point OGD and reservoir-buffer OGD. Both run in the same mapped
//! feature space as the main learner by default; an identity mapping is
//! available for raw linear comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{Example, Label, SparseVec};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::learner::{EtaSchedule, OnlineLearner, StepReport};
use crate::loss::{LossKind, PairLoss};
use crate::vecops;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub eta: f64,
    pub eta_schedule: EtaSchedule,
    pub lambda: f64,
    pub loss: LossKind,
    pub seed: u64,
}

impl BaselineConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn eta_at(&self, t: u64) -> f64 {
        match self.eta_schedule {
            EtaSchedule::Constant => self.eta,
            EtaSchedule::InvSqrt => self.eta / (t as f64).sqrt(),
        }
    }
}

fn orient<'a>(label: Label, phi: &'a [f64], other: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    match label {
        Label::Pos => (phi, other),
        Label::Neg => (other, phi),
    }
}

/// OGD pairing each example with the most recent opposite-label example.
#[derive(Debug, Clone)]
pub struct OgdLast {
    cfg: BaselineConfig,
    map: FeatureMap,
    w: Vec<f64>,
    last_pos: Option<Vec<f64>>,
    last_neg: Option<Vec<f64>>,
    t: u64,
    phi_buf: Vec<f64>,
    grad_buf: Vec<f64>,
}

impl OgdLast {
    pub fn init(cfg: BaselineConfig, map: FeatureMap) -> Result<Self> {
        cfg.validate()?;
        let d = map.out_dim();
        if d == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be >= 1".into(),
            ));
        }
        Ok(OgdLast {
            cfg,
            map,
            w: vec![0.0; d],
            last_pos: None,
            last_neg: None,
            t: 0,
            phi_buf: vec![0.0; d],
            grad_buf: vec![0.0; d],
        })
    }

    fn loss(&self) -> PairLoss {
        PairLoss {
            kind: self.cfg.loss,
            lambda: self.cfg.lambda,
        }
    }
}

impl OnlineLearner for OgdLast {
    fn step(&mut self, z: &Example) -> Result<StepReport> {
        let t = self.t + 1;
        self.map.map_into(&z.features, &mut self.phi_buf)?;
        let loss = self.loss();
        let eta = self.cfg.eta_at(t);

        let opp = match z.label {
            Label::Pos => &self.last_neg,
            Label::Neg => &self.last_pos,
        };
        let mut suffered = None;
        if let Some(other) = opp {
            let (p, n) = orient(z.label, &self.phi_buf, other);
            suffered = Some(loss.eval(&self.w, p, n)?);
            loss.grad_into(&self.w, p, n, &mut self.grad_buf)?;
            vecops::axpy(-eta, &self.grad_buf, &mut self.w);
        }
        if !vecops::all_finite(&self.w) || suffered.is_some_and(|l| !l.is_finite()) {
            return Err(Error::NumericalDivergence { step: t });
        }

        let own = match z.label {
            Label::Pos => &mut self.last_pos,
            Label::Neg => &mut self.last_neg,
        };
        match own {
            Some(buf) => buf.copy_from_slice(&self.phi_buf),
            slot => *slot = Some(self.phi_buf.clone()),
        }

        self.t = t;
        Ok(StepReport {
            t,
            avg_loss: suffered,
            rand_loss: None,
            gamma: 0.0,
            avg_skipped: suffered.is_none(),
            rand_skipped: true,
        })
    }

    fn predict(&self, x: &SparseVec) -> Result<f64> {
        let phi = self.map.map(x)?;
        Ok(vecops::dot(&self.w, &phi))
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }

    fn examples_seen(&self) -> u64 {
        self.t
    }
}

/// Classic reservoir update: the n-th arrival (1-based) replaces a uniform
/// slot with probability cap/n once the buffer is full, which retains every
/// past item with equal probability.
fn reservoir_push<T>(buf: &mut Vec<T>, cap: usize, seen: u64, item: T, rng: &mut impl Rng) {
    if buf.len() < cap {
        buf.push(item);
        return;
    }
    let j = rng.random_range(0..seen);
    if (j as usize) < cap {
        buf[j as usize] = item;
    }
}

/// OGD on the buffer-averaged loss over the opposite-label reservoir.
#[derive(Debug, Clone)]
pub struct BufferOgd {
    cfg: BaselineConfig,
    map: FeatureMap,
    capacity: usize,
    w: Vec<f64>,
    pos_buf: Vec<Vec<f64>>,
    neg_buf: Vec<Vec<f64>>,
    seen_pos: u64,
    seen_neg: u64,
    t: u64,
    rng: ChaCha8Rng,
    phi_buf: Vec<f64>,
    grad_buf: Vec<f64>,
    acc_buf: Vec<f64>,
}

impl BufferOgd {
    pub fn init(cfg: BaselineConfig, map: FeatureMap, capacity: usize) -> Result<Self> {
        cfg.validate()?;
        if capacity < 1 {
            return Err(Error::InvalidConfig("buffer capacity must be >= 1".into()));
        }
        let d = map.out_dim();
        if d == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be >= 1".into(),
            ));
        }
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(BufferOgd {
            cfg,
            map,
            capacity,
            w: vec![0.0; d],
            pos_buf: Vec::new(),
            neg_buf: Vec::new(),
            seen_pos: 0,
            seen_neg: 0,
            t: 0,
            rng,
            phi_buf: vec![0.0; d],
            grad_buf: vec![0.0; d],
            acc_buf: vec![0.0; d],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn buffer(&self, label: Label) -> &[Vec<f64>] {
        match label {
            Label::Pos => &self.pos_buf,
            Label::Neg => &self.neg_buf,
        }
    }

    fn loss(&self) -> PairLoss {
        PairLoss {
            kind: self.cfg.loss,
            lambda: self.cfg.lambda,
        }
    }
}

impl OnlineLearner for BufferOgd {
    fn step(&mut self, z: &Example) -> Result<StepReport> {
        let t = self.t + 1;
        self.map.map_into(&z.features, &mut self.phi_buf)?;
        let loss = self.loss();
        let eta = self.cfg.eta_at(t);

        let opp = match z.label {
            Label::Pos => &self.neg_buf,
            Label::Neg => &self.pos_buf,
        };
        let mut suffered = None;
        if !opp.is_empty() {
            self.acc_buf.fill(0.0);
            let mut loss_sum = 0.0;
            for other in opp {
                let (p, n) = orient(z.label, &self.phi_buf, other);
                loss_sum += loss.eval(&self.w, p, n)?;
                loss.grad_into(&self.w, p, n, &mut self.grad_buf)?;
                vecops::axpy(1.0, &self.grad_buf, &mut self.acc_buf);
            }
            let inv = 1.0 / opp.len() as f64;
            suffered = Some(loss_sum * inv);
            vecops::axpy(-eta * inv, &self.acc_buf, &mut self.w);
        }
        if !vecops::all_finite(&self.w) || suffered.is_some_and(|l| !l.is_finite()) {
            return Err(Error::NumericalDivergence { step: t });
        }

        let phi = self.phi_buf.clone();
        match z.label {
            Label::Pos => {
                self.seen_pos += 1;
                reservoir_push(
                    &mut self.pos_buf,
                    self.capacity,
                    self.seen_pos,
                    phi,
                    &mut self.rng,
                );
            }
            Label::Neg => {
                self.seen_neg += 1;
                reservoir_push(
                    &mut self.neg_buf,
                    self.capacity,
                    self.seen_neg,
                    phi,
                    &mut self.rng,
                );
            }
        }

        self.t = t;
        Ok(StepReport {
            t,
            avg_loss: suffered,
            rand_loss: None,
            gamma: 0.0,
            avg_skipped: suffered.is_none(),
            rand_skipped: true,
        })
    }

    fn predict(&self, x: &SparseVec) -> Result<f64> {
        let phi = self.map.map(x)?;
        Ok(vecops::dot(&self.w, &phi))
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }

    fn examples_seen(&self) -> u64 {
        self.t
    }
}
