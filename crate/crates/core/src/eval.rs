//! Exact AUC, brute-force all-pairs loss oracles, regret curves, and an
//! offline comparator fit. Everything here is oracle-grade: correctness over
//! speed, with the O(T^2) pieces meant for desk-scale diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{Example, Label};
use crate::error::{Error, Result};
use crate::features::{FeatureMap, MappedExample};
use crate::loss::{LossKind, PairLoss};
use crate::vecops;

/// Cutover from O(n^2) pair counting to the rank statistic.
const PAIR_COUNT_LIMIT: usize = 10_000;

fn check_auc_inputs(scores: &[f64], labels: &[Label]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == Label::Pos).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("auc input".into()));
    }
    Ok((n_pos, n_neg))
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting
/// one half. Exact pair counting; O(n_pos * n_neg).
pub fn auc_pair_count(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let (n_pos, n_neg) = check_auc_inputs(scores, labels)?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Pos)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Neg)
        .map(|(&s, _)| s)
        .collect();
    let mut wins = 0.0f64;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// Tie-corrected rank statistic (Mann-Whitney); O(n log n).
pub fn auc_rank(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let (n_pos, n_neg) = check_auc_inputs(scores, labels)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Average 1-based rank of the tie group [i, j).
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == Label::Pos {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p = n_pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// AUC of `scores` against `labels`: exact pair counting for small inputs,
/// rank statistic above the cutover.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() <= PAIR_COUNT_LIMIT {
        auc_pair_count(scores, labels)
    } else {
        auc_rank(scores, labels)
    }
}

/// Maps a slice of examples through `map`, keeping labels.
pub fn map_examples(map: &FeatureMap, examples: &[Example]) -> Result<Vec<MappedExample>> {
    examples
        .iter()
        .map(|e| {
            Ok(MappedExample {
                phi: map.map(&e.features)?,
                label: e.label,
            })
        })
        .collect()
}

/// Exact local loss of `z_t` against its opposite-label history: the plain
/// average of the pair loss over every valid pairing. `None` when the
/// history holds no opposite-label example.
pub fn local_loss_oracle(
    w: &[f64],
    history: &[MappedExample],
    z_t: &MappedExample,
    loss: &PairLoss,
) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for h in history.iter().filter(|h| h.label != z_t.label) {
        let (p, n) = match z_t.label {
            Label::Pos => (&z_t.phi, &h.phi),
            Label::Neg => (&h.phi, &z_t.phi),
        };
        sum += loss.eval(w, p, n)?;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Gradient counterpart of [`local_loss_oracle`].
pub fn local_loss_grad_oracle(
    w: &[f64],
    history: &[MappedExample],
    z_t: &MappedExample,
    loss: &PairLoss,
) -> Result<Option<Vec<f64>>> {
    let mut acc = vec![0.0; w.len()];
    let mut g = vec![0.0; w.len()];
    let mut count = 0usize;
    for h in history.iter().filter(|h| h.label != z_t.label) {
        let (p, n) = match z_t.label {
            Label::Pos => (&z_t.phi, &h.phi),
            Label::Neg => (&h.phi, &z_t.phi),
        };
        loss.grad_into(w, p, n, &mut g)?;
        vecops::axpy(1.0, &g, &mut acc);
        count += 1;
    }
    if count == 0 {
        return Ok(None);
    }
    vecops::scale(1.0 / count as f64, &mut acc);
    Ok(Some(acc))
}

/// Mean of the opposite-class mapped features, if any.
fn opposite_mean(history: &[MappedExample], label: Label, dim: usize) -> Option<Vec<f64>> {
    let mut mean = vec![0.0; dim];
    let mut count = 0usize;
    for h in history.iter().filter(|h| h.label != label) {
        vecops::axpy(1.0, &h.phi, &mut mean);
        count += 1;
    }
    if count == 0 {
        return None;
    }
    vecops::scale(1.0 / count as f64, &mut mean);
    Some(mean)
}

/// All-pairs local loss minus the loss at the opposite-class mean feature.
/// Nonnegative (up to rounding) for convex losses. `None` when the history
/// holds no opposite-label example.
pub fn jensen_gap(
    w: &[f64],
    history: &[MappedExample],
    z_t: &MappedExample,
    loss: &PairLoss,
) -> Result<Option<f64>> {
    let Some(all_pairs) = local_loss_oracle(w, history, z_t, loss)? else {
        return Ok(None);
    };
    let mean = opposite_mean(history, z_t.label, z_t.phi.len())
        .expect("opposite mean exists when the oracle produced a value");
    let (p, n) = match z_t.label {
        Label::Pos => (&z_t.phi[..], &mean[..]),
        Label::Neg => (&mean[..], &z_t.phi[..]),
    };
    let at_mean = loss.eval(w, p, n)?;
    Ok(Some(all_pairs - at_mean))
}

/// Trace of the (population) covariance of the given mapped features; the
/// exact counterpart of the learner's running total-variance estimate.
pub fn covariance_trace(phis: &[&[f64]]) -> f64 {
    if phis.is_empty() {
        return 0.0;
    }
    let n = phis.len() as f64;
    let dim = phis[0].len();
    let mut mean = vec![0.0; dim];
    for phi in phis {
        vecops::axpy(1.0, phi, &mut mean);
    }
    vecops::scale(1.0 / n, &mut mean);
    let mut trace = 0.0;
    for phi in phis {
        trace += phi
            .iter()
            .zip(&mean)
            .map(|(x, m)| (x - m) * (x - m))
            .sum::<f64>();
    }
    trace / n
}

/// Per-step cumulative local losses of a model sequence and a fixed
/// comparator, and their running difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    /// Step indices, 2..=T.
    pub step: Vec<u64>,
    pub learner_cum: Vec<f64>,
    pub comparator_cum: Vec<f64>,
    pub regret: Vec<f64>,
}

impl RegretCurve {
    /// Regret at wall step `t` (0 before the curve starts).
    pub fn regret_at(&self, t: u64) -> f64 {
        match self.step.binary_search(&t) {
            Ok(i) => self.regret[i],
            Err(0) => 0.0,
            Err(i) => self.regret[i - 1],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,learner_cum_loss,comparator_cum_loss,regret\n");
        for i in 0..self.step.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.step[i], self.learner_cum[i], self.comparator_cum[i], self.regret[i]
            ));
        }
        out
    }
}

/// Cumulative local-loss comparison of the learner's per-step models against
/// a fixed comparator, on the stream the models were trained on.
/// `models_before[t-1]` is the weight vector before consuming example `t`.
/// Steps with no valid (opposite-label) pair contribute 0. O(T^2 * D).
pub fn regret_curve(
    models_before: &[Vec<f64>],
    stream: &[MappedExample],
    comparator: &[f64],
    loss: &PairLoss,
) -> Result<RegretCurve> {
    if models_before.len() != stream.len() {
        return Err(Error::DimensionMismatch {
            expected: stream.len(),
            got: models_before.len(),
        });
    }
    let t_max = stream.len();
    let per_step: Vec<(f64, f64)> = (2..=t_max)
        .into_par_iter()
        .map(|t| {
            let z_t = &stream[t - 1];
            let history = &stream[..t - 1];
            let l = local_loss_oracle(&models_before[t - 1], history, z_t, loss)
                .expect("dims fixed by construction")
                .unwrap_or(0.0);
            let c = local_loss_oracle(comparator, history, z_t, loss)
                .expect("dims fixed by construction")
                .unwrap_or(0.0);
            (l, c)
        })
        .collect();

    let mut curve = RegretCurve {
        step: Vec::with_capacity(per_step.len()),
        learner_cum: Vec::with_capacity(per_step.len()),
        comparator_cum: Vec::with_capacity(per_step.len()),
        regret: Vec::with_capacity(per_step.len()),
    };
    let (mut lc, mut cc) = (0.0, 0.0);
    for (i, (l, c)) in per_step.iter().enumerate() {
        lc += l;
        cc += c;
        curve.step.push((i + 2) as u64);
        curve.learner_cum.push(lc);
        curve.comparator_cum.push(cc);
        curve.regret.push(lc - cc);
    }
    Ok(curve)
}

/// All-pairs average loss over every (positive, negative) cross pair.
/// Plain double loop; the reference objective for the comparator fit.
pub fn all_pairs_loss(w: &[f64], mapped: &[MappedExample], loss: &PairLoss) -> Result<f64> {
    let pos: Vec<&MappedExample> = mapped.iter().filter(|m| m.label == Label::Pos).collect();
    let neg: Vec<&MappedExample> = mapped.iter().filter(|m| m.label == Label::Neg).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("all-pairs loss".into()));
    }
    let mut sum = 0.0;
    for p in &pos {
        for n in &neg {
            sum += loss.eval(w, &p.phi, &n.phi)?;
        }
    }
    Ok(sum / (pos.len() * neg.len()) as f64)
}

/// One class's mapped features, flattened row-major for cache-friendly
/// sweeps during the comparator fit.
struct FlatClass {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl FlatClass {
    fn new(items: &[&MappedExample], dim: usize) -> Self {
        let mut data = Vec::with_capacity(items.len() * dim);
        for m in items {
            data.extend_from_slice(&m.phi);
        }
        FlatClass {
            data,
            n: items.len(),
            dim,
        }
    }

    /// Margins of every row against `w`.
    fn margins(&self, w: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.dim)
            .map(|row| vecops::dot(w, row))
            .collect()
    }

    fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for row in self.data.chunks(self.dim) {
            vecops::axpy(1.0, row, &mut out);
        }
        vecops::scale(1.0 / self.n as f64, &mut out);
        out
    }

    /// Adds `(1/n) * sum_k row_k row_k'` into the row-major `acc` matrix;
    /// parallel over fixed row blocks with an ordered reduction.
    fn add_second_moment(&self, acc: &mut [f64]) {
        const CHUNK: usize = 128;
        let dim = self.dim;
        let partials: Vec<Vec<f64>> = self
            .data
            .par_chunks(CHUNK * dim)
            .map(|block| {
                let mut m = vec![0.0; dim * dim];
                for row in block.chunks(dim) {
                    for (i, &ri) in row.iter().enumerate() {
                        vecops::axpy(ri, row, &mut m[i * dim..(i + 1) * dim]);
                    }
                }
                m
            })
            .collect();
        let inv = 1.0 / self.n as f64;
        for p in partials {
            vecops::axpy(inv, &p, acc);
        }
    }

    /// `sum_k coef[k] * row_k`.
    fn weighted_sum(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, row) in self.data.chunks(self.dim).enumerate() {
            vecops::axpy(coef[k], row, &mut out);
        }
        out
    }
}

/// Gradient of [`all_pairs_loss`] in O((P+N) * D) via margin decomposition.
fn all_pairs_grad(w: &[f64], pos: &FlatClass, neg: &FlatClass, loss: &PairLoss, out: &mut [f64]) {
    let p_cnt = pos.n as f64;
    let n_cnt = neg.n as f64;
    let a = pos.margins(w);
    let b = neg.margins(w);
    out.fill(0.0);
    let (pos_coef, neg_coef): (Vec<f64>, Vec<f64>) = match loss.kind {
        LossKind::SquaredAuc => {
            // d/dw mean_{ij} (1 - a_i + b_j)^2
            //   = (2/PN) * (-sum_i c_i phi_p_i + sum_j d_j phi_n_j)
            // with c_i = N(1 - a_i) + sum(b), d_j = P(1 + b_j) - sum(a).
            let sum_a: f64 = a.iter().sum();
            let sum_b: f64 = b.iter().sum();
            (
                a.iter()
                    .map(|ai| -2.0 * (n_cnt * (1.0 - ai) + sum_b) / (p_cnt * n_cnt))
                    .collect(),
                b.iter()
                    .map(|bj| 2.0 * (p_cnt * (1.0 + bj) - sum_a) / (p_cnt * n_cnt))
                    .collect(),
            )
        }
        LossKind::HingeAuc => {
            // Active pairs have a_i - b_j < 1; count per row/column by
            // binary search over the sorted opposite margins.
            let mut b_sorted = b.clone();
            b_sorted.sort_by(f64::total_cmp);
            let mut a_sorted = a.clone();
            a_sorted.sort_by(f64::total_cmp);
            (
                a.iter()
                    .map(|ai| {
                        let le = b_sorted.partition_point(|&x| x <= ai - 1.0);
                        -((neg.n - le) as f64) / (p_cnt * n_cnt)
                    })
                    .collect(),
                b.iter()
                    .map(|bj| {
                        let active = a_sorted.partition_point(|&x| x < bj + 1.0);
                        active as f64 / (p_cnt * n_cnt)
                    })
                    .collect(),
            )
        }
    };
    vecops::axpy(1.0, &pos.weighted_sum(&pos_coef), out);
    vecops::axpy(1.0, &neg.weighted_sum(&neg_coef), out);
    vecops::axpy(loss.lambda, w, out);
}

/// Full-batch gradient descent on the all-pairs loss, to gradient norm
/// <= 1e-6 or 10^4 iterations. Deterministic.
pub fn fit_comparator(mapped: &[MappedExample], loss: &PairLoss) -> Result<Vec<f64>> {
    let pos_items: Vec<&MappedExample> = mapped.iter().filter(|m| m.label == Label::Pos).collect();
    let neg_items: Vec<&MappedExample> = mapped.iter().filter(|m| m.label == Label::Neg).collect();
    if pos_items.is_empty() || neg_items.is_empty() {
        return Err(Error::SingleClass("comparator fit".into()));
    }
    let dim = mapped[0].phi.len();
    let pos = FlatClass::new(&pos_items, dim);
    let neg = FlatClass::new(&neg_items, dim);
    match loss.kind {
        LossKind::SquaredAuc => Ok(fit_quadratic(&pos, &neg, loss.lambda)),
        LossKind::HingeAuc => {
            let max_norm = mapped
                .iter()
                .map(|m| vecops::norm2(&m.phi))
                .fold(0.0f64, f64::max)
                .max(1e-12);
            // Curvature bound: 2 * max ||phi_p - phi_n||^2 + lambda.
            let lipschitz = 2.0 * (2.0 * max_norm) * (2.0 * max_norm) + loss.lambda;
            let step = 1.0 / lipschitz;
            let mut w = vec![0.0; dim];
            let mut grad = vec![0.0; dim];
            for _ in 0..10_000 {
                all_pairs_grad(&w, &pos, &neg, loss, &mut grad);
                if vecops::norm2(&grad) <= 1e-6 {
                    break;
                }
                vecops::axpy(-step, &grad, &mut w);
            }
            Ok(w)
        }
    }
}

/// Gradient descent on the squared all-pairs loss via its exact quadratic
/// form: the gradient is `2*S*w + lambda*w - 2*(mu_p - mu_n)` with
/// `S = E[phi phi' | pos] + E[phi phi' | neg] - mu_p mu_n' - mu_n mu_p'`,
/// so each iteration is one O(D^2) symmetric matvec.
fn fit_quadratic(pos: &FlatClass, neg: &FlatClass, lambda: f64) -> Vec<f64> {
    let dim = pos.dim;
    let mu_p = pos.mean();
    let mu_n = neg.mean();
    let mut s = vec![0.0; dim * dim];
    pos.add_second_moment(&mut s);
    neg.add_second_moment(&mut s);
    for i in 0..dim {
        let row = &mut s[i * dim..(i + 1) * dim];
        vecops::axpy(-mu_p[i], &mu_n, row);
        vecops::axpy(-mu_n[i], &mu_p, row);
    }
    let b: Vec<f64> = mu_p.iter().zip(&mu_n).map(|(p, n)| 2.0 * (p - n)).collect();
    // Spectral norm of S is at most its trace (PSD), giving a safe step.
    let trace: f64 = (0..dim).map(|i| s[i * dim + i]).sum();
    let step = 1.0 / (2.0 * trace.max(1e-12) + lambda);

    let mut w = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    for _ in 0..10_000 {
        for (i, g) in grad.iter_mut().enumerate() {
            *g = 2.0 * vecops::dot(&s[i * dim..(i + 1) * dim], &w) + lambda * w[i] - b[i];
        }
        if vecops::norm2(&grad) <= 1e-6 {
            break;
        }
        vecops::axpy(-step, &grad, &mut w);
    }
    w
}
