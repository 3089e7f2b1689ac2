//! The AOGD online learner.
//!
//! Each arriving example is mapped into the random-feature space, then the
//! model takes (1) a gradient step pairing the example with the opposite
//! class's running mean and (2) a correction step pairing it with a
//! Bernoulli-refreshed cached example of the opposite class. The correction
//! step size scales with the running variance of the mapped stream, so it
//! vanishes on low-variance data. Per-class means and caches are kept because
//! only opposite-label pairs are valid for AUC losses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{Example, Label, SparseVec};
use crate::error::{Error, Result};
use crate::features::{rff_sample, RffMap};
use crate::loss::{LossKind, PairLoss};
use crate::vecops;

/// RNG stream id for the learner's Bernoulli draws; stream 0 is implicitly
/// used by the feature sampler seeded from the same master seed.
const LEARNER_RNG_STREAM: u64 = 1;

/// Mapped-feature bound used for adaptive step sizing: unit-norm features
/// keep every pair difference within 2.
const MAPPED_FEAT_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// Constant correction step size.
    Fixed(f64),
    /// `gamma_t = c * Gamma_t * M * eta`, with `Gamma_t` the running
    /// total-variance estimate and `M` the loss smoothness constant.
    Adaptive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaSchedule {
    #[default]
    Constant,
    /// `eta_t = eta / sqrt(t)`.
    InvSqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AogdConfig {
    pub eta: f64,
    pub eta_schedule: EtaSchedule,
    pub gamma: GammaRule,
    /// Bernoulli refresh probability for the cached example, in (0, 1].
    pub p: f64,
    /// Random-feature count D (even, >= 2).
    pub n_features: usize,
    /// Kernel width; a single entry broadcasts over input dimensions.
    pub sigma: Vec<f64>,
    pub lambda: f64,
    pub loss: LossKind,
    pub seed: u64,
}

impl AogdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be > 0, got {}",
                self.eta
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "p must be in (0, 1], got {}",
                self.p
            )));
        }
        if self.n_features < 2 || !self.n_features.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "n_features must be even and >= 2, got {}",
                self.n_features
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if matches!(self.gamma, GammaRule::Adaptive(_)) && self.loss == LossKind::HingeAuc {
            return Err(Error::InvalidConfig(
                "adaptive gamma needs a smooth loss (hinge has unbounded curvature); use a fixed gamma"
                    .into(),
            ));
        }
        if let GammaRule::Fixed(g) = self.gamma {
            if !(g >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "fixed gamma must be >= 0, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Running statistics of one label class in the mapped space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub mean_phi: Vec<f64>,
    pub count: u64,
    /// Bernoulli-refreshed random past example; absent until the class is seen.
    pub cached_phi: Option<Vec<f64>>,
    /// Accumulated squared deviation from the running mean, summed over
    /// coordinates (Welford M2), feeding the total-variance estimate.
    pub trace_var_accum: f64,
}

impl ClassStats {
    fn new(dim: usize) -> Self {
        ClassStats {
            mean_phi: vec![0.0; dim],
            count: 0,
            cached_phi: None,
            trace_var_accum: 0.0,
        }
    }

    /// Welford update of mean and M2 with one mapped example.
    fn update(&mut self, phi: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        let mut corr = 0.0;
        for (m, &x) in self.mean_phi.iter_mut().zip(phi) {
            let d_old = x - *m;
            *m += d_old / n;
            corr += d_old * (x - *m);
        }
        self.trace_var_accum += corr;
    }
}

/// Per-step diagnostics: the two suffered losses, the correction step size,
/// and which steps were skipped for lack of an opposite-class partner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub t: u64,
    pub avg_loss: Option<f64>,
    pub rand_loss: Option<f64>,
    pub gamma: f64,
    pub avg_skipped: bool,
    pub rand_skipped: bool,
}

/// Common interface of the online pairwise learners.
pub trait OnlineLearner {
    fn step(&mut self, z: &Example) -> Result<StepReport>;
    /// Score of an unseen input under the current model.
    fn predict(&self, x: &SparseVec) -> Result<f64>;
    fn weights(&self) -> &[f64];
    fn examples_seen(&self) -> u64;
}

/// AOGD learner state.
#[derive(Debug, Clone)]
pub struct Aogd {
    cfg: AogdConfig,
    rff: RffMap,
    w: Vec<f64>,
    pos: ClassStats,
    neg: ClassStats,
    t: u64,
    rng: ChaCha8Rng,
    phi_buf: Vec<f64>,
    grad_buf: Vec<f64>,
}

/// Resumable snapshot of an [`Aogd`]. Frequencies regenerate from the config
/// seed; the RNG resumes from its recorded word position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub cfg: AogdConfig,
    pub input_dim: usize,
    pub w: Vec<f64>,
    pub pos: ClassStats,
    pub neg: ClassStats,
    pub t: u64,
    pub rng_word_pos: u128,
}

fn learner_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(LEARNER_RNG_STREAM);
    rng
}

impl Aogd {
    /// Fresh state: zero weights, empty class statistics, frequencies frozen
    /// from the config seed.
    pub fn init(cfg: AogdConfig, input_dim: usize) -> Result<Self> {
        cfg.validate()?;
        let rff = rff_sample(input_dim, cfg.n_features, &cfg.sigma, cfg.seed)?;
        let d = cfg.n_features;
        let rng = learner_rng(cfg.seed);
        Ok(Aogd {
            cfg,
            rff,
            w: vec![0.0; d],
            pos: ClassStats::new(d),
            neg: ClassStats::new(d),
            t: 0,
            rng,
            phi_buf: vec![0.0; d],
            grad_buf: vec![0.0; d],
        })
    }

    pub fn config(&self) -> &AogdConfig {
        &self.cfg
    }

    pub fn feature_map(&self) -> &RffMap {
        &self.rff
    }

    pub fn class_stats(&self, label: Label) -> &ClassStats {
        match label {
            Label::Pos => &self.pos,
            Label::Neg => &self.neg,
        }
    }

    fn loss(&self) -> PairLoss {
        PairLoss {
            kind: self.cfg.loss,
            lambda: self.cfg.lambda,
        }
    }

    /// Running total-variance estimate pooled over both classes.
    pub fn gamma_hat(&self) -> f64 {
        let denom = self.t.saturating_sub(1).max(1) as f64;
        (self.pos.trace_var_accum + self.neg.trace_var_accum) / denom
    }

    /// Correction step size under the configured rule.
    pub fn gamma(&self) -> Result<f64> {
        match self.cfg.gamma {
            GammaRule::Fixed(g) => Ok(g),
            GammaRule::Adaptive(c) => {
                let m = self.loss().constants(0.0, MAPPED_FEAT_BOUND).smoothness_m;
                if !m.is_finite() {
                    return Err(Error::InvalidConfig(
                        "adaptive gamma needs a smooth loss; use a fixed gamma".into(),
                    ));
                }
                Ok(c * self.gamma_hat() * m * self.cfg.eta)
            }
        }
    }

    fn eta_at(&self, t: u64) -> f64 {
        match self.cfg.eta_schedule {
            EtaSchedule::Constant => self.cfg.eta,
            EtaSchedule::InvSqrt => self.cfg.eta / (t as f64).sqrt(),
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            cfg: self.cfg.clone(),
            input_dim: self.rff.input_dim(),
            w: self.w.clone(),
            pos: self.pos.clone(),
            neg: self.neg.clone(),
            t: self.t,
            rng_word_pos: self.rng.get_word_pos(),
        }
    }

    pub fn resume(ck: Checkpoint) -> Result<Self> {
        ck.cfg.validate()?;
        let rff = rff_sample(ck.input_dim, ck.cfg.n_features, &ck.cfg.sigma, ck.cfg.seed)?;
        let d = ck.cfg.n_features;
        if ck.w.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ck.w.len(),
            });
        }
        let mut rng = learner_rng(ck.cfg.seed);
        rng.set_word_pos(ck.rng_word_pos);
        Ok(Aogd {
            cfg: ck.cfg,
            rff,
            w: ck.w,
            pos: ck.pos,
            neg: ck.neg,
            t: ck.t,
            rng,
            phi_buf: vec![0.0; d],
            grad_buf: vec![0.0; d],
        })
    }
}

/// Orients `(phi, other)` into a (positive, negative) pair given the label
/// of the example behind `phi`.
fn orient<'a>(label: Label, phi: &'a [f64], other: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    match label {
        Label::Pos => (phi, other),
        Label::Neg => (other, phi),
    }
}

impl OnlineLearner for Aogd {
    fn step(&mut self, z: &Example) -> Result<StepReport> {
        let t = self.t + 1;
        self.rff.map_into(&z.features, &mut self.phi_buf)?;
        let loss = self.loss();
        let eta = self.eta_at(t);
        // Correction step size uses statistics of the stream before this
        // example; it is reported even when the correction step is skipped.
        let gamma = self.gamma()?;

        let opp = match z.label {
            Label::Pos => &self.neg,
            Label::Neg => &self.pos,
        };

        // Average step against the opposite-class running mean.
        let mut avg_loss = None;
        if opp.count >= 1 {
            let (p, n) = orient(z.label, &self.phi_buf, &opp.mean_phi);
            avg_loss = Some(loss.eval(&self.w, p, n)?);
            loss.grad_into(&self.w, p, n, &mut self.grad_buf)?;
            vecops::axpy(-eta, &self.grad_buf, &mut self.w);
        }

        // Correction step against the cached opposite example.
        let mut rand_loss = None;
        if let Some(cached) = &opp.cached_phi {
            let (p, n) = orient(z.label, &self.phi_buf, cached);
            rand_loss = Some(loss.eval(&self.w, p, n)?);
            loss.grad_into(&self.w, p, n, &mut self.grad_buf)?;
            vecops::axpy(-gamma, &self.grad_buf, &mut self.w);
        }

        if !vecops::all_finite(&self.w)
            || avg_loss.is_some_and(|l| !l.is_finite())
            || rand_loss.is_some_and(|l| !l.is_finite())
        {
            return Err(Error::NumericalDivergence { step: t });
        }

        // Fold the example into its own class: mean, variance, cache.
        let own = match z.label {
            Label::Pos => &mut self.pos,
            Label::Neg => &mut self.neg,
        };
        own.update(&self.phi_buf);
        // One draw per step keeps the RNG stream aligned across runs.
        let refresh = self.rng.random::<f64>() < self.cfg.p;
        if refresh || own.cached_phi.is_none() {
            match &mut own.cached_phi {
                Some(buf) => buf.copy_from_slice(&self.phi_buf),
                slot => *slot = Some(self.phi_buf.clone()),
            }
        }

        self.t = t;
        Ok(StepReport {
            t,
            avg_loss,
            rand_loss,
            gamma,
            avg_skipped: avg_loss.is_none(),
            rand_skipped: rand_loss.is_none(),
        })
    }

    fn predict(&self, x: &SparseVec) -> Result<f64> {
        let phi = self.rff.map(x)?;
        Ok(vecops::dot(&self.w, &phi))
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }

    fn examples_seen(&self) -> u64 {
        self.t
    }
}
