//! Experiment runner: stratified splits, grid search with k-fold
//! cross-validation, repeated trials with derived seeds, and trace/curve
//! emission. Everything a run reports is determined by (config, master seed);
//! wall-clock columns are zero unless timing is explicitly enabled.

mod config;
mod report;

pub use config::{
    DatasetSpec, ExperimentConfig, FileSpec, GammaSpec, LearnerSpec, MappingSpec, OrderKind,
    SigmaSpec, SyntheticSpec,
};
pub use report::{report, run_id, ReportFormat, ResultRow, RESULT_CSV_HEADER};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineConfig, BufferOgd, OgdLast};
use crate::dataio::{self, Dataset, Label, ParseOptions};
use crate::error::{Error, Result};
use crate::eval;
use crate::features::{rff_sample, FeatureMap};
use crate::learner::{Aogd, AogdConfig, OnlineLearner, StepReport};
use crate::loss::{LossKind, PairLoss};
use crate::vecops::mix_seed;

// Seed-derivation salts; each consumer of randomness gets its own stream.
const SALT_REPEAT: u64 = 0x0100;
const SALT_SPLIT: u64 = 0x0201;
const SALT_FOLDS: u64 = 0x0302;
const SALT_MEDIAN: u64 = 0x0403;
const SALT_STREAM: u64 = 0x0504;
const SALT_LEARNER: u64 = 0x0605;
const SALT_EPOCH: u64 = 0x0706;

/// The dataset's display name, without loading anything.
pub fn dataset_label(cfg: &ExperimentConfig) -> String {
    match &cfg.dataset {
        DatasetSpec::File(f) => f.name.clone().filter(|n| !n.is_empty()).unwrap_or_else(|| {
            std::path::Path::new(&f.path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string())
        }),
        DatasetSpec::Synthetic { synthetic } => dataio::synthetic_name(
            synthetic.n_per_class,
            synthetic.dim,
            synthetic.separation,
            synthetic.data_seed.unwrap_or(cfg.seed),
        ),
    }
}

/// Loads (or generates) and normalizes the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetSpec::File(f) => {
            let mut opts = ParseOptions::default();
            if let Some(name) = &f.name {
                opts.name = name.clone();
            }
            opts.positive_labels = f.positive_labels.clone();
            let ds = dataio::load_path(&f.path, &opts)?;
            dataio::normalize(&ds, f.normalization)
        }
        DatasetSpec::Synthetic { synthetic } => {
            let seed = synthetic.data_seed.unwrap_or(cfg.seed);
            let ds = dataio::make_synthetic_gaussians(
                synthetic.n_per_class,
                synthetic.dim,
                synthetic.separation,
                seed,
            )?;
            dataio::normalize(&ds, synthetic.normalization)
        }
    }
}

/// Stratified index split; both sides keep at least one example per class.
fn stratified_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in ds.examples().iter().enumerate() {
        by_class[(ex.label == Label::Pos) as usize].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, SALT_SPLIT));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in by_class.iter_mut() {
        if class.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least two examples per class to split train/test".into(),
            ));
        }
        class.shuffle(&mut rng);
        let n_train =
            ((class.len() as f64 * train_fraction).round() as usize).clamp(1, class.len() - 1);
        train.extend_from_slice(&class[..n_train]);
        test.extend_from_slice(&class[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified fold assignment over a train set; every fold sees both classes.
fn stratified_folds(train: &Dataset, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in train.examples().iter().enumerate() {
        by_class[(ex.label == Label::Pos) as usize].push(i);
    }
    if by_class.iter().any(|c| c.len() < folds) {
        return Err(Error::InvalidInput(format!(
            "too few examples of one class for {folds}-fold cross-validation"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, SALT_FOLDS));
    let mut assignment = vec![Vec::new(); folds];
    for class in by_class.iter_mut() {
        class.shuffle(&mut rng);
        for (k, &i) in class.iter().enumerate() {
            assignment[k % folds].push(i);
        }
    }
    for fold in assignment.iter_mut() {
        fold.sort_unstable();
    }
    Ok(assignment)
}

/// Median squared pairwise distance over a deterministic pair sample,
/// feeding the `median_scaled` sigma rule.
fn median_sq_distance(ds: &Dataset, seed: u64) -> f64 {
    let n = ds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, SALT_MEDIAN));
    let n_pairs = 2000.min(n * (n - 1) / 2).max(1);
    let mut dists = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        dists.push(
            ds.examples()[i]
                .features
                .sq_distance(&ds.examples()[j].features),
        );
    }
    dists.sort_by(f64::total_cmp);
    let med = dists[dists.len() / 2];
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// One resolved grid point: absolute values, ready to train with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub eta: f64,
    pub lambda: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOutcome {
    pub point: GridPoint,
    /// Mean validation AUC across folds; `None` marks a failed (diverged)
    /// grid point, excluded from selection.
    pub mean_auc: Option<f64>,
}

/// Best outcome by mean validation AUC; ties prefer smaller eta, then
/// smaller lambda, then smaller sigma. Independent of slice order.
pub fn select_best(outcomes: &[GridOutcome]) -> Option<GridPoint> {
    let mut best: Option<(f64, GridPoint)> = None;
    for o in outcomes {
        let Some(auc) = o.mean_auc else { continue };
        let replace = match &best {
            None => true,
            Some((b_auc, b_pt)) => {
                auc > *b_auc
                    || (auc == *b_auc
                        && (o.point.eta, o.point.lambda, o.point.sigma)
                            < (b_pt.eta, b_pt.lambda, b_pt.sigma))
            }
        };
        if replace {
            best = Some((auc, o.point));
        }
    }
    best.map(|(_, pt)| pt)
}

fn resolve_sigmas(cfg: &ExperimentConfig, train: &Dataset, repeat_seed: u64) -> Vec<f64> {
    match &cfg.sigma {
        SigmaSpec::Fixed { fixed } => fixed.clone(),
        SigmaSpec::MedianScaled { median_scaled } => {
            let med_sq = median_sq_distance(train, repeat_seed);
            median_scaled.iter().map(|m| m / med_sq).collect()
        }
    }
}

fn grid_points(cfg: &ExperimentConfig, sigmas: &[f64]) -> Vec<GridPoint> {
    let mut etas = cfg.eta_grid.clone();
    let mut lambdas = cfg.lambda_grid.clone();
    let mut sigmas = sigmas.to_vec();
    etas.sort_by(f64::total_cmp);
    lambdas.sort_by(f64::total_cmp);
    sigmas.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(etas.len() * lambdas.len() * sigmas.len());
    for &eta in &etas {
        for &lambda in &lambdas {
            for &sigma in &sigmas {
                out.push(GridPoint { eta, lambda, sigma });
            }
        }
    }
    out
}

fn build_learner(
    cfg: &ExperimentConfig,
    point: GridPoint,
    d_features: usize,
    input_dim: usize,
    learner_seed: u64,
) -> Result<Box<dyn OnlineLearner + Send>> {
    match cfg.learner {
        LearnerSpec::Aogd => {
            let acfg = AogdConfig {
                eta: point.eta,
                eta_schedule: cfg.eta_schedule,
                gamma: cfg.gamma.to_rule(),
                p: cfg.p,
                n_features: d_features,
                sigma: vec![point.sigma],
                lambda: point.lambda,
                loss: cfg.loss,
                seed: learner_seed,
            };
            Ok(Box::new(Aogd::init(acfg, input_dim)?))
        }
        LearnerSpec::OgdLast | LearnerSpec::BufferOgd { .. } => {
            let map = match cfg.mapping {
                MappingSpec::Rff => FeatureMap::Rff(rff_sample(
                    input_dim,
                    d_features,
                    &[point.sigma],
                    learner_seed,
                )?),
                MappingSpec::Linear => FeatureMap::Identity { dim: input_dim },
            };
            let bcfg = BaselineConfig {
                eta: point.eta,
                eta_schedule: cfg.eta_schedule,
                lambda: point.lambda,
                loss: cfg.loss,
                seed: learner_seed,
            };
            match cfg.learner {
                LearnerSpec::OgdLast => Ok(Box::new(OgdLast::init(bcfg, map)?)),
                LearnerSpec::BufferOgd { buffer_size } => {
                    Ok(Box::new(BufferOgd::init(bcfg, map, buffer_size)?))
                }
                LearnerSpec::Aogd => unreachable!(),
            }
        }
    }
}

/// Streams `train` through the learner for the configured number of epochs.
/// Returns learner-loop wall-clock seconds (0 when timing is off).
fn train_learner(
    learner: &mut dyn OnlineLearner,
    train: &Dataset,
    cfg: &ExperimentConfig,
    stream_seed: u64,
) -> Result<f64> {
    let mut seconds = 0.0;
    for epoch in 0..cfg.epochs {
        let order = cfg
            .order
            .to_stream_order(mix_seed(stream_seed, SALT_EPOCH + epoch as u64));
        let idx = dataio::stream_indices(train, order);
        let start = cfg.record_timing.then(Instant::now);
        for i in idx {
            learner.step(&train.examples()[i])?;
        }
        if let Some(start) = start {
            seconds += start.elapsed().as_secs_f64();
        }
    }
    Ok(seconds)
}

/// AUC of the learner's scores on a held-out set.
pub fn test_auc(learner: &dyn OnlineLearner, test: &Dataset) -> Result<f64> {
    let mut scores = Vec::with_capacity(test.len());
    let mut labels = Vec::with_capacity(test.len());
    for ex in test.examples() {
        scores.push(learner.predict(&ex.features)?);
        labels.push(ex.label);
    }
    eval::auc(&scores, &labels)
}

/// Builds each fold's (fit, validate) datasets once; grid points share them.
fn fold_splits(train: &Dataset, folds: &[Vec<usize>]) -> Result<Vec<(Dataset, Dataset)>> {
    folds
        .iter()
        .map(|fold| {
            let mut in_fold = vec![false; train.len()];
            for &i in fold {
                in_fold[i] = true;
            }
            let fit_idx: Vec<usize> = (0..train.len()).filter(|&i| !in_fold[i]).collect();
            Ok((train.subset(&fit_idx)?, train.subset(fold)?))
        })
        .collect()
}

/// Trains on the fold complement and validates on the fold, for each fold.
/// Divergence anywhere marks the grid point failed.
fn evaluate_grid_point(
    cfg: &ExperimentConfig,
    input_dim: usize,
    splits: &[(Dataset, Dataset)],
    point: GridPoint,
    d_features: usize,
    repeat_seed: u64,
) -> Result<Option<f64>> {
    let mut sum = 0.0;
    for (k, (fit_ds, val_ds)) in splits.iter().enumerate() {
        let learner_seed = mix_seed(repeat_seed, SALT_LEARNER + k as u64);
        let stream_seed = mix_seed(repeat_seed, SALT_STREAM + k as u64);
        let mut learner = build_learner(cfg, point, d_features, input_dim, learner_seed)?;
        match train_learner(learner.as_mut(), fit_ds, cfg, stream_seed) {
            Ok(_) => {}
            Err(Error::NumericalDivergence { step }) => {
                eprintln!(
                    "[pairstream] grid point eta={} lambda={} sigma={} diverged at step {step}; excluded",
                    point.eta, point.lambda, point.sigma
                );
                return Ok(None);
            }
            Err(other) => return Err(other),
        }
        sum += test_auc(learner.as_ref(), val_ds)?;
    }
    Ok(Some(sum / splits.len() as f64))
}

/// Full protocol: per repeat, stratified 80/20 split, k-fold CV over the grid
/// inside the train split, retrain with the selected point, test AUC.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultRow> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let mut repeat_aucs = Vec::with_capacity(cfg.repeats);
    let mut chosen_points: Vec<GridPoint> = Vec::with_capacity(cfg.repeats);
    let mut chosen_d = 0usize;
    let mut seconds = 0.0;
    let mut failed_points = 0usize;

    for r in 0..cfg.repeats {
        let repeat_seed = mix_seed(cfg.seed, SALT_REPEAT + r as u64);
        let (train_idx, test_idx) = stratified_split(&ds, cfg.train_fraction, repeat_seed)?;
        let train = ds.subset(&train_idx)?;
        let test = ds.subset(&test_idx)?;
        let d_features = cfg.resolve_d_features(train.len());
        chosen_d = d_features;
        let sigmas = resolve_sigmas(cfg, &train, repeat_seed);
        let grid = grid_points(cfg, &sigmas);

        let best = if grid.len() > 1 {
            let folds = stratified_folds(&train, cfg.folds, repeat_seed)?;
            let splits = fold_splits(&train, &folds)?;
            let outcomes: Vec<GridOutcome> = grid
                .par_iter()
                .map(|&point| {
                    evaluate_grid_point(cfg, train.dim(), &splits, point, d_features, repeat_seed)
                        .map(|mean_auc| GridOutcome { point, mean_auc })
                })
                .collect::<Result<Vec<_>>>()?;
            failed_points += outcomes.iter().filter(|o| o.mean_auc.is_none()).count();
            select_best(&outcomes).ok_or_else(|| {
                Error::InvalidInput("every grid point diverged; widen the grids".into())
            })?
        } else {
            grid[0]
        };

        let learner_seed = mix_seed(repeat_seed, SALT_LEARNER + cfg.folds as u64 + 1);
        let stream_seed = mix_seed(repeat_seed, SALT_STREAM + cfg.folds as u64 + 1);
        let mut learner = build_learner(cfg, best, d_features, ds.dim(), learner_seed)?;
        seconds += train_learner(learner.as_mut(), &train, cfg, stream_seed)?;
        repeat_aucs.push(test_auc(learner.as_ref(), &test)?);
        chosen_points.push(best);
    }

    let n = repeat_aucs.len() as f64;
    let mean = repeat_aucs.iter().sum::<f64>() / n;
    let std_err = if repeat_aucs.len() > 1 {
        let var = repeat_aucs
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let headline = most_frequent_point(&chosen_points);

    Ok(ResultRow {
        dataset: ds.name().to_string(),
        learner: cfg.learner.name(),
        loss: match cfg.loss {
            LossKind::SquaredAuc => "squared_auc".into(),
            LossKind::HingeAuc => "hinge_auc".into(),
        },
        order: cfg.order.to_string(),
        eta: headline.eta,
        lambda: headline.lambda,
        sigma: headline.sigma,
        d_features: chosen_d,
        gamma: cfg.gamma.label(),
        p: cfg.p,
        folds: cfg.folds,
        repeats: cfg.repeats,
        train_fraction: cfg.train_fraction,
        seed: cfg.seed,
        mean_auc: mean,
        std_err,
        seconds,
        failed_grid_points: failed_points,
        trace_path: None,
    })
}

/// The grid point selected most often across repeats (first-seen on ties).
fn most_frequent_point(points: &[GridPoint]) -> GridPoint {
    let key = |p: &GridPoint| (p.eta.to_bits(), p.lambda.to_bits(), p.sigma.to_bits());
    let mut best = points[0];
    let mut best_count = 0;
    for p in points {
        let count = points.iter().filter(|q| key(q) == key(p)).count();
        if count > best_count {
            best = *p;
            best_count = count;
        }
    }
    best
}

/// Per-iteration diagnostics for a single training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub avg_loss: Option<f64>,
    pub rand_loss: Option<f64>,
    pub gamma: f64,
    /// Learner-loop seconds elapsed up to this step (0 when timing is off).
    pub seconds: f64,
    /// Held-out AUC, evaluated at checkpoint steps only.
    pub test_auc: Option<f64>,
}

pub fn trace_csv(records: &[TraceRecord]) -> String {
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("t,avg_loss,rand_loss,gamma,seconds,test_auc\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t,
            fmt_opt(r.avg_loss),
            fmt_opt(r.rand_loss),
            r.gamma,
            r.seconds,
            fmt_opt(r.test_auc)
        ));
    }
    out
}

/// AUC-vs-time checkpoint during a single online pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub seconds: f64,
    pub examples_seen: u64,
    pub auc: f64,
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("seconds,examples_seen,auc\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.seconds, p.examples_seen, p.auc));
    }
    out
}

/// Roughly log-spaced checkpoints ending exactly at `t_max`.
pub fn default_checkpoints(t_max: usize, count: usize) -> Vec<usize> {
    if t_max == 0 {
        return Vec::new();
    }
    let count = count.max(2);
    let mut out = Vec::with_capacity(count);
    let lo = 1.0f64;
    let hi = t_max as f64;
    for k in 0..count {
        let f = k as f64 / (count - 1) as f64;
        let v = (lo.ln() + f * (hi.ln() - lo.ln())).exp().round() as usize;
        out.push(v.clamp(1, t_max));
    }
    out.dedup();
    out
}

fn singleton_point(cfg: &ExperimentConfig, train: &Dataset, repeat_seed: u64) -> Result<GridPoint> {
    if cfg.grid_size() != 1 {
        return Err(Error::InvalidConfig(
            "this command needs singleton eta/lambda/sigma grids; run `grid` to search".into(),
        ));
    }
    let sigmas = resolve_sigmas(cfg, train, repeat_seed);
    Ok(GridPoint {
        eta: cfg.eta_grid[0],
        lambda: cfg.lambda_grid[0],
        sigma: sigmas[0],
    })
}

pub struct TrainOutput {
    pub row: ResultRow,
    pub trace: Vec<TraceRecord>,
}

/// Trains one resolved configuration on the repeat-0 split, tracing every
/// step and checkpointing held-out AUC.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let repeat_seed = mix_seed(cfg.seed, SALT_REPEAT);
    let (train_idx, test_idx) = stratified_split(&ds, cfg.train_fraction, repeat_seed)?;
    let train = ds.subset(&train_idx)?;
    let test = ds.subset(&test_idx)?;
    let point = singleton_point(cfg, &train, repeat_seed)?;
    let d_features = cfg.resolve_d_features(train.len());
    let learner_seed = mix_seed(repeat_seed, SALT_LEARNER);
    let stream_seed = mix_seed(repeat_seed, SALT_STREAM);
    let mut learner = build_learner(cfg, point, d_features, ds.dim(), learner_seed)?;

    let total_steps = train.len() * cfg.epochs;
    let checkpoints = default_checkpoints(total_steps, 25);
    let mut trace = Vec::with_capacity(total_steps);
    let mut seconds = 0.0;
    let mut step_no = 0usize;
    for epoch in 0..cfg.epochs {
        let order = cfg
            .order
            .to_stream_order(mix_seed(stream_seed, SALT_EPOCH + epoch as u64));
        let idx = dataio::stream_indices(&train, order);
        for i in idx {
            let start = cfg.record_timing.then(Instant::now);
            let rep: StepReport = learner.step(&train.examples()[i])?;
            if let Some(start) = start {
                seconds += start.elapsed().as_secs_f64();
            }
            step_no += 1;
            let auc = if checkpoints.contains(&step_no) {
                Some(test_auc(learner.as_ref(), &test)?)
            } else {
                None
            };
            trace.push(TraceRecord {
                t: step_no as u64,
                avg_loss: rep.avg_loss,
                rand_loss: rep.rand_loss,
                gamma: rep.gamma,
                seconds,
                test_auc: auc,
            });
        }
    }
    let final_auc = test_auc(learner.as_ref(), &test)?;

    let row = ResultRow {
        dataset: ds.name().to_string(),
        learner: cfg.learner.name(),
        loss: match cfg.loss {
            LossKind::SquaredAuc => "squared_auc".into(),
            LossKind::HingeAuc => "hinge_auc".into(),
        },
        order: cfg.order.to_string(),
        eta: point.eta,
        lambda: point.lambda,
        sigma: point.sigma,
        d_features,
        gamma: cfg.gamma.label(),
        p: cfg.p,
        folds: cfg.folds,
        repeats: 1,
        train_fraction: cfg.train_fraction,
        seed: cfg.seed,
        mean_auc: final_auc,
        std_err: 0.0,
        seconds,
        failed_grid_points: 0,
        trace_path: None,
    };
    Ok(TrainOutput { row, trace })
}

/// Single online pass emitting (seconds, examples seen, test AUC) at each
/// checkpoint.
pub fn run_curve(cfg: &ExperimentConfig, checkpoints: &[usize]) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let repeat_seed = mix_seed(cfg.seed, SALT_REPEAT);
    let (train_idx, test_idx) = stratified_split(&ds, cfg.train_fraction, repeat_seed)?;
    let train = ds.subset(&train_idx)?;
    let test = ds.subset(&test_idx)?;
    let point = singleton_point(cfg, &train, repeat_seed)?;
    let d_features = cfg.resolve_d_features(train.len());
    let learner_seed = mix_seed(repeat_seed, SALT_LEARNER);
    let stream_seed = mix_seed(repeat_seed, SALT_STREAM);
    let mut learner = build_learner(cfg, point, d_features, ds.dim(), learner_seed)?;

    let total_steps = train.len() * cfg.epochs;
    let checkpoints: Vec<usize> = if checkpoints.is_empty() {
        default_checkpoints(total_steps, 20)
    } else {
        let mut cp: Vec<usize> = checkpoints.iter().copied().filter(|&c| c >= 1).collect();
        cp.sort_unstable();
        cp.dedup();
        cp
    };

    let mut out = Vec::with_capacity(checkpoints.len());
    let mut seconds = 0.0;
    let mut step_no = 0usize;
    for epoch in 0..cfg.epochs {
        let order = cfg
            .order
            .to_stream_order(mix_seed(stream_seed, SALT_EPOCH + epoch as u64));
        let idx = dataio::stream_indices(&train, order);
        for i in idx {
            let start = cfg.record_timing.then(Instant::now);
            learner.step(&train.examples()[i])?;
            if let Some(start) = start {
                seconds += start.elapsed().as_secs_f64();
            }
            step_no += 1;
            if checkpoints.binary_search(&step_no).is_ok() {
                out.push(CurvePoint {
                    seconds,
                    examples_seen: step_no as u64,
                    auc: test_auc(learner.as_ref(), &test)?,
                });
            }
        }
    }
    Ok(out)
}

/// Jensen-gap measurement at one step of a trained trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenRecord {
    pub t: u64,
    pub gap: f64,
    /// Half the exact opposite-class covariance trace times the loss
    /// smoothness constant.
    pub bound: f64,
}

pub fn jensen_csv(records: &[JensenRecord]) -> String {
    let mut out = String::from("t,gap,bound\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.t, r.gap, r.bound));
    }
    out
}

pub struct OracleOutput {
    pub regret: eval::RegretCurve,
    pub jensen: Vec<JensenRecord>,
}

/// Desk-scale diagnostics: trains the configured learner while recording the
/// model before every step, fits the offline comparator in the same feature
/// space, and measures the exact regret curve and per-step Jensen gaps.
/// O(T^2) in the stream length.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<OracleOutput> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let repeat_seed = mix_seed(cfg.seed, SALT_REPEAT);
    let (train_idx, _) = stratified_split(&ds, cfg.train_fraction, repeat_seed)?;
    let train = ds.subset(&train_idx)?;
    let point = singleton_point(cfg, &train, repeat_seed)?;
    let d_features = cfg.resolve_d_features(train.len());
    let learner_seed = mix_seed(repeat_seed, SALT_LEARNER);
    let stream_seed = mix_seed(repeat_seed, SALT_STREAM);
    run_oracle_on(cfg, &train, point, d_features, learner_seed, stream_seed)
}

/// Trained trajectory plus everything the exact oracles need: per-step
/// models, the mapped stream in arrival order, and the loss.
struct Trajectory {
    models_before: Vec<Vec<f64>>,
    mapped: Vec<crate::features::MappedExample>,
    loss: PairLoss,
}

fn run_trajectory(
    cfg: &ExperimentConfig,
    train: &Dataset,
    point: GridPoint,
    d_features: usize,
    learner_seed: u64,
    stream_seed: u64,
) -> Result<Trajectory> {
    let mut learner = build_learner(cfg, point, d_features, train.dim(), learner_seed)?;
    let order = cfg.order.to_stream_order(mix_seed(stream_seed, SALT_EPOCH));
    let idx = dataio::stream_indices(train, order);

    let mut models_before: Vec<Vec<f64>> = Vec::with_capacity(idx.len());
    for &i in &idx {
        models_before.push(learner.weights().to_vec());
        learner.step(&train.examples()[i])?;
    }

    // The oracle maps the stream with the same frozen features the learner
    // used (regenerated from the shared seed).
    let map = match cfg.mapping {
        MappingSpec::Rff => FeatureMap::Rff(rff_sample(
            train.dim(),
            d_features,
            &[point.sigma],
            learner_seed,
        )?),
        MappingSpec::Linear => FeatureMap::Identity { dim: train.dim() },
    };
    let ordered: Vec<_> = idx.iter().map(|&i| train.examples()[i].clone()).collect();
    let mapped = eval::map_examples(&map, &ordered)?;
    let loss = PairLoss {
        kind: cfg.loss,
        lambda: point.lambda,
    };
    Ok(Trajectory {
        models_before,
        mapped,
        loss,
    })
}

/// Exact regret curve of a training run against the offline comparator
/// fitted in the same feature space. O(T^2 * D).
pub fn run_regret_on(
    cfg: &ExperimentConfig,
    train: &Dataset,
    point: GridPoint,
    d_features: usize,
    learner_seed: u64,
    stream_seed: u64,
) -> Result<eval::RegretCurve> {
    let tr = run_trajectory(cfg, train, point, d_features, learner_seed, stream_seed)?;
    let comparator = eval::fit_comparator(&tr.mapped, &tr.loss)?;
    eval::regret_curve(&tr.models_before, &tr.mapped, &comparator, &tr.loss)
}

/// Oracle diagnostics on an explicit train set and grid point; shared by
/// [`run_oracle`] and the regret acceptance checks.
pub fn run_oracle_on(
    cfg: &ExperimentConfig,
    train: &Dataset,
    point: GridPoint,
    d_features: usize,
    learner_seed: u64,
    stream_seed: u64,
) -> Result<OracleOutput> {
    let tr = run_trajectory(cfg, train, point, d_features, learner_seed, stream_seed)?;
    let comparator = eval::fit_comparator(&tr.mapped, &tr.loss)?;
    let regret = eval::regret_curve(&tr.models_before, &tr.mapped, &comparator, &tr.loss)?;

    let feat_bound = match cfg.mapping {
        MappingSpec::Rff => 2.0,
        MappingSpec::Linear => {
            2.0 * tr
                .mapped
                .iter()
                .map(|m| crate::vecops::norm2(&m.phi))
                .fold(0.0f64, f64::max)
        }
    };
    let smoothness = tr.loss.constants(0.0, feat_bound).smoothness_m;
    let mapped = &tr.mapped;
    let models = &tr.models_before;
    let loss = &tr.loss;
    let jensen: Vec<JensenRecord> = (2..=mapped.len())
        .into_par_iter()
        .map(|t| -> Result<Option<JensenRecord>> {
            let z_t = &mapped[t - 1];
            let history = &mapped[..t - 1];
            let Some(gap) = eval::jensen_gap(&models[t - 1], history, z_t, loss)? else {
                return Ok(None);
            };
            let opp: Vec<&[f64]> = history
                .iter()
                .filter(|m| m.label != z_t.label)
                .map(|m| m.phi.as_slice())
                .collect();
            let bound = 0.5 * eval::covariance_trace(&opp) * smoothness;
            Ok(Some(JensenRecord {
                t: t as u64,
                gap,
                bound,
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(OracleOutput { regret, jensen })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "dataset": {"synthetic": {"n_per_class": 40, "dim": 3, "separation": 4.0}},
                "eta_grid": [0.0625, 0.125],
                "lambda_grid": [1e-6, 1e-3],
                "sigma": {"median_scaled": [1.0]},
                "folds": 2,
                "repeats": 2,
                "d_features": 32,
                "seed": 11
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let ds = dataio::make_synthetic_gaussians(25, 2, 1.0, 3).unwrap();
        let (train, test) = stratified_split(&ds, 0.8, 7).unwrap();
        assert_eq!(train.len() + test.len(), ds.len());
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        let count = |idx: &[usize], label| {
            idx.iter()
                .filter(|&&i| ds.examples()[i].label == label)
                .count()
        };
        assert_eq!(count(&train, Label::Pos), 20);
        assert_eq!(count(&test, Label::Pos), 5);
        assert_eq!(count(&train, Label::Neg), 20);
    }

    #[test]
    fn folds_partition_and_stratify() {
        let ds = dataio::make_synthetic_gaussians(30, 2, 1.0, 5).unwrap();
        let folds = stratified_folds(&ds, 3, 9).unwrap();
        let total: usize = folds.iter().map(Vec::len).sum();
        assert_eq!(total, ds.len());
        for fold in &folds {
            assert!(fold.iter().any(|&i| ds.examples()[i].label == Label::Pos));
            assert!(fold.iter().any(|&i| ds.examples()[i].label == Label::Neg));
        }
    }

    #[test]
    fn selection_prefers_auc_then_smaller_hyperparameters() {
        let pt = |eta, lambda, sigma| GridPoint { eta, lambda, sigma };
        let outcomes = vec![
            GridOutcome {
                point: pt(0.5, 0.1, 1.0),
                mean_auc: Some(0.9),
            },
            GridOutcome {
                point: pt(0.25, 0.1, 1.0),
                mean_auc: Some(0.9),
            },
            GridOutcome {
                point: pt(0.25, 0.01, 1.0),
                mean_auc: Some(0.9),
            },
            GridOutcome {
                point: pt(0.5, 0.5, 1.0),
                mean_auc: Some(0.95),
            },
            GridOutcome {
                point: pt(0.125, 0.001, 1.0),
                mean_auc: None,
            },
        ];
        let best = select_best(&outcomes).unwrap();
        assert_eq!(best, pt(0.5, 0.5, 1.0));

        // Invariant to evaluation order.
        let mut reversed = outcomes.clone();
        reversed.reverse();
        assert_eq!(select_best(&reversed), Some(best));

        // Drop the winner: ties broken towards smaller eta, then lambda.
        let tied: Vec<GridOutcome> = outcomes
            .iter()
            .filter(|o| o.mean_auc != Some(0.95))
            .copied()
            .collect();
        assert_eq!(select_best(&tied).unwrap(), pt(0.25, 0.01, 1.0));

        assert_eq!(
            select_best(&[GridOutcome {
                point: pt(0.5, 0.1, 1.0),
                mean_auc: None
            }]),
            None
        );
    }

    #[test]
    fn run_experiment_is_deterministic() {
        let cfg = tiny_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            report(std::slice::from_ref(&a), ReportFormat::Csv).unwrap(),
            report(std::slice::from_ref(&b), ReportFormat::Csv).unwrap()
        );
    }

    #[test]
    fn run_experiment_learns_separable_synthetic_data() {
        let row = run_experiment(&tiny_cfg()).unwrap();
        assert!(row.mean_auc > 0.9, "mean AUC {}", row.mean_auc);
        assert!(row.std_err >= 0.0);
        assert_eq!(row.repeats, 2);
        assert_eq!(row.seconds, 0.0, "timing off by default");
    }

    #[test]
    fn run_train_emits_full_trace() {
        let mut cfg = tiny_cfg();
        cfg.eta_grid = vec![0.125];
        cfg.lambda_grid = vec![1e-6];
        let out = run_train(&cfg).unwrap();
        assert_eq!(out.trace.len(), 64); // 80% of 80 examples
        assert!(out.trace.iter().any(|r| r.test_auc.is_some()));
        assert!(out.row.mean_auc > 0.5);
        let csv = trace_csv(&out.trace);
        assert!(csv.starts_with("t,avg_loss,rand_loss,gamma,seconds,test_auc\n"));
    }

    #[test]
    fn run_train_rejects_non_singleton_grids() {
        let cfg = tiny_cfg();
        assert!(matches!(run_train(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn curve_checkpoints_shape_and_range() {
        let mut cfg = tiny_cfg();
        cfg.eta_grid = vec![0.125];
        cfg.lambda_grid = vec![1e-6];
        let points = run_curve(&cfg, &[10, 30, 64]).unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[2].examples_seen, 64);
        for p in &points {
            assert!((0.0..=1.0).contains(&p.auc), "auc {}", p.auc);
        }
    }

    #[test]
    fn curve_reaches_high_auc_on_wide_separation() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "dataset": {"synthetic": {"n_per_class": 150, "dim": 3, "separation": 10.0}},
                "eta_grid": [0.125],
                "lambda_grid": [1e-6],
                "sigma": {"median_scaled": [1.0]},
                "d_features": 64,
                "seed": 19
            }"#,
        )
        .unwrap();
        let points = run_curve(&cfg, &[]).unwrap();
        let last = points.last().unwrap();
        assert!(last.auc >= 0.95, "final AUC {}", last.auc);
    }

    #[test]
    fn oracle_runs_at_desk_scale() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "dataset": {"synthetic": {"n_per_class": 60, "dim": 3, "separation": 4.0}},
                "eta_grid": [0.125],
                "lambda_grid": [1e-6],
                "sigma": {"median_scaled": [1.0]},
                "d_features": 32,
                "seed": 23
            }"#,
        )
        .unwrap();
        let out = run_oracle(&cfg).unwrap();
        assert_eq!(out.regret.step.len(), 95); // T-1 rows for T=96
        assert!(out.regret.regret.iter().all(|r| r.is_finite()));
        // Convexity: gaps are nonnegative and within the variance bound.
        assert!(!out.jensen.is_empty());
        for j in &out.jensen {
            assert!(j.gap >= -1e-9, "gap {}", j.gap);
            assert!(j.gap <= j.bound + 1e-6, "gap {} bound {}", j.gap, j.bound);
        }
        let csv = jensen_csv(&out.jensen);
        assert!(csv.starts_with("t,gap,bound\n"));
    }

    #[test]
    fn baseline_learners_run_through_harness() {
        for learner in [
            r#"{"kind": "ogd_last"}"#,
            r#"{"kind": "buffer_ogd", "buffer_size": 8}"#,
        ] {
            let cfg = ExperimentConfig::from_json(&format!(
                r#"{{
                    "dataset": {{"synthetic": {{"n_per_class": 40, "dim": 3, "separation": 4.0}}}},
                    "learner": {learner},
                    "eta_grid": [0.125],
                    "lambda_grid": [1e-6],
                    "sigma": {{"median_scaled": [1.0]}},
                    "d_features": 32,
                    "repeats": 1,
                    "seed": 29
                }}"#
            ))
            .unwrap();
            let row = run_experiment(&cfg).unwrap();
            assert!(row.mean_auc > 0.8, "{} AUC {}", row.learner, row.mean_auc);
        }
    }

    #[test]
    fn linear_mapping_works_for_baselines() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "dataset": {"synthetic": {"n_per_class": 40, "dim": 3, "separation": 6.0,
                             "normalization": "unit_l2"}},
                "learner": {"kind": "ogd_last"},
                "mapping": "linear",
                "eta_grid": [0.125],
                "lambda_grid": [1e-6],
                "sigma": {"fixed": [1.0]},
                "repeats": 1,
                "seed": 31
            }"#,
        )
        .unwrap();
        let row = run_experiment(&cfg).unwrap();
        assert!(row.mean_auc > 0.9, "AUC {}", row.mean_auc);
    }

    #[test]
    fn multi_epoch_mode_replays_the_stream() {
        let mut cfg = tiny_cfg();
        cfg.eta_grid = vec![0.125];
        cfg.lambda_grid = vec![1e-6];
        cfg.epochs = 2;
        let out = run_train(&cfg).unwrap();
        assert_eq!(out.trace.len(), 128); // two passes over the 64-example train split
        assert_eq!(out.trace.last().unwrap().t, 128);
    }

    #[test]
    fn single_class_dataset_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one_class.libsvm");
        std::fs::write(&path, "+1 1:1.0\n+1 2:1.0\n+1 3:1.0\n").unwrap();
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"dataset": {{"path": {path:?}}}, "eta_grid": [0.1], "lambda_grid": [1e-6],
                 "sigma": {{"fixed": [1.0]}}, "repeats": 1, "seed": 1}}"#
        ))
        .unwrap();
        assert!(matches!(run_experiment(&cfg), Err(Error::SingleClass(_))));
    }

    #[test]
    fn dataset_label_matches_loaded_name() {
        let cfg = ExperimentConfig::from_json(
            r#"{"dataset": {"synthetic": {"n_per_class": 5, "dim": 2, "separation": 1.0}},
                "eta_grid": [0.1], "lambda_grid": [1e-6], "sigma": {"fixed": [1.0]}, "seed": 3}"#,
        )
        .unwrap();
        let ds = load_dataset(&cfg).unwrap();
        assert_eq!(dataset_label(&cfg), ds.name());
    }

    #[test]
    fn timing_flag_populates_seconds() {
        let mut cfg = tiny_cfg();
        cfg.record_timing = true;
        let row = run_experiment(&cfg).unwrap();
        assert!(row.seconds > 0.0);
    }

    #[test]
    fn default_checkpoints_are_increasing_and_end_at_t() {
        let cp = default_checkpoints(1000, 10);
        assert!(cp.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*cp.last().unwrap(), 1000);
        assert_eq!(cp[0], 1);
    }
}
