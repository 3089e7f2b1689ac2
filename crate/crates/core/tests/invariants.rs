//! Cross-module properties: parsing round trips, stream permutations,
//! feature-map identities, kernel PSD-ness, Monte-Carlo error decay, and the
//! Jensen domination of the class-mean gradient step.

use proptest::prelude::*;

use pairstream::dataio::{
    make_synthetic_gaussians, normalize, parse_libsvm, stream, Dataset, Example, Label, NormScheme,
    ParseOptions, SparseVec, StreamOrder,
};
use pairstream::eval;
use pairstream::features::{exact_gaussian, pairwise_kernel, rff_error_profile, rff_sample};
use pairstream::learner::{Aogd, AogdConfig, EtaSchedule, GammaRule, OnlineLearner};
use pairstream::loss::{LossKind, PairLoss};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_example() -> impl Strategy<Value = Example> {
    let features = proptest::collection::btree_map(1u32..60, -10.0f64..10.0, 0..8)
        .prop_map(|m| SparseVec::from_pairs(m.into_iter().collect()).unwrap());
    (features, any::<bool>()).prop_map(|(features, pos)| Example {
        features,
        label: if pos { Label::Pos } else { Label::Neg },
    })
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    proptest::collection::vec(arb_example(), 0..30).prop_map(|mut examples| {
        // Both classes must be present.
        examples.push(Example {
            features: SparseVec::from_pairs(vec![(1, 1.0)]).unwrap(),
            label: Label::Pos,
        });
        examples.push(Example {
            features: SparseVec::from_pairs(vec![(2, -1.0)]).unwrap(),
            label: Label::Neg,
        });
        Dataset::new("prop", examples).unwrap()
    })
}

fn arb_order() -> impl Strategy<Value = StreamOrder> {
    prop_oneof![
        Just(StreamOrder::AsIs),
        Just(StreamOrder::SortedByLabel),
        any::<u64>().prop_map(StreamOrder::Shuffled),
        (1usize..10, any::<u64>())
            .prop_map(|(block_size, seed)| StreamOrder::BlockAlternating { block_size, seed }),
    ]
}

proptest! {
    #[test]
    fn libsvm_serialization_round_trips(ds in arb_dataset()) {
        let text = ds.to_libsvm_string();
        let back = parse_libsvm(std::io::Cursor::new(text), &ParseOptions::named("prop")).unwrap();
        prop_assert_eq!(back.examples(), ds.examples());
    }

    #[test]
    fn stream_is_a_permutation(ds in arb_dataset(), order in arb_order()) {
        let mut yielded: Vec<String> =
            stream(&ds, order).map(|e| format!("{e:?}")).collect();
        let mut original: Vec<String> =
            ds.examples().iter().map(|e| format!("{e:?}")).collect();
        yielded.sort();
        original.sort();
        prop_assert_eq!(yielded, original);
    }

    #[test]
    fn unit_l2_normalization_yields_unit_norms(ds in arb_dataset()) {
        let out = normalize(&ds, NormScheme::UnitL2).unwrap();
        for ex in out.examples() {
            let norm = ex.features.l2_norm();
            if norm > 0.0 {
                prop_assert!((norm - 1.0).abs() < 1e-12, "norm {}", norm);
            }
        }
    }

    #[test]
    fn feature_map_self_inner_product_is_one(
        entries in proptest::collection::btree_map(1u32..6, -5.0f64..5.0, 0..5),
        n_half in 1usize..32,
        seed in any::<u64>(),
    ) {
        let x = SparseVec::from_pairs(entries.into_iter().collect()).unwrap();
        let map = rff_sample(5, 2 * n_half, &[0.5], seed).unwrap();
        let phi = map.map(&x).unwrap();
        let ip: f64 = phi.iter().map(|v| v * v).sum();
        prop_assert!((ip - 1.0).abs() < 1e-9, "inner product {}", ip);
    }
}

#[test]
fn rff_inner_products_are_unbiased() {
    // Average <r(x), r(x')> over 100 independent maps and compare with the
    // exact kernel within three standard errors.
    let d = 3;
    let sigma = vec![0.9; d];
    let x = SparseVec::from_pairs(vec![(1, 0.4), (3, -0.6)]).unwrap();
    let y = SparseVec::from_pairs(vec![(2, 0.8), (3, 0.1)]).unwrap();
    let exact = exact_gaussian(&x.to_dense(d), &y.to_dense(d), &sigma);

    let n_maps = 100;
    let samples: Vec<f64> = (0..n_maps)
        .map(|k| {
            let map = rff_sample(d, 64, &sigma, 9000 + k).unwrap();
            let rx = map.map(&x).unwrap();
            let ry = map.map(&y).unwrap();
            rx.iter().zip(&ry).map(|(a, b)| a * b).sum()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n_maps as f64;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n_maps - 1) as f64;
    let stderr = (var / n_maps as f64).sqrt();
    assert!(
        (mean - exact).abs() <= 3.0 * stderr,
        "mean {mean} exact {exact} stderr {stderr}"
    );
}

/// Cholesky of A + eps*I succeeding certifies the minimum eigenvalue of A
/// is above -eps.
fn cholesky_ok(a: &[Vec<f64>], eps: f64) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j] + if i == j { eps } else { 0.0 };
            sum -= (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    true
}

#[test]
fn pairwise_kernel_gram_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let d = 4;
    let sigma = vec![1.2; d];
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
        .map(|_| {
            let a: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            (a, b)
        })
        .collect();
    let mut gram = vec![vec![0.0f64; 10]; 10];
    for i in 0..10 {
        for j in 0..10 {
            gram[i][j] =
                pairwise_kernel(&pairs[i].0, &pairs[i].1, &pairs[j].0, &pairs[j].1, &sigma);
        }
    }
    assert!(
        cholesky_ok(&gram, 1e-8),
        "pairwise Gram not PSD within 1e-8"
    );
}

#[test]
fn monte_carlo_error_rate_is_one_over_sqrt_d() {
    // mean_abs_error(D) * sqrt(D) stays within a constant band across the
    // sweep 2^6..2^14.
    let rows = rff_error_profile(&[64, 256, 1024, 4096, 16384], 300, &[1.0; 4], 5).unwrap();
    let products: Vec<f64> = rows
        .iter()
        .map(|r| r.mean_abs_error * (r.n_features as f64).sqrt())
        .collect();
    let max = products.iter().cloned().fold(f64::MIN, f64::max);
    let min = products.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min <= 3.0,
        "error decay off the 1/sqrt(D) rate: products {products:?}"
    );
}

#[test]
fn rank_and_pair_count_auc_agree_on_small_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..60 {
        let n = 2 + rng.random_range(0..2000);
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..40) as f64) / 8.0)
            .collect();
        let mut labels: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.4 {
                    Label::Pos
                } else {
                    Label::Neg
                }
            })
            .collect();
        labels[0] = Label::Pos;
        labels[n - 1] = Label::Neg;
        let a = eval::auc_pair_count(&scores, &labels).unwrap();
        let b = eval::auc_rank(&scores, &labels).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn class_mean_step_dominates_all_pairs_loss_within_variance_bound() {
    // Train on a synthetic stream and check, at every step with history, that
    // the loss at the opposite-class mean lower-bounds the all-pairs loss and
    // that the gap obeys the running-variance bound.
    let cfg = AogdConfig {
        eta: 0.05,
        eta_schedule: EtaSchedule::Constant,
        gamma: GammaRule::Adaptive(1.0),
        p: 0.2,
        n_features: 32,
        sigma: vec![0.5],
        lambda: 0.0,
        loss: LossKind::SquaredAuc,
        seed: 55,
    };
    let ds = make_synthetic_gaussians(60, 3, 5.0, 66).unwrap();
    let mut learner = Aogd::init(cfg, 3).unwrap();
    let map = learner.feature_map().clone();
    let loss = PairLoss::squared(0.0).unwrap();
    let mapped =
        eval::map_examples(&pairstream::features::FeatureMap::Rff(map), ds.examples()).unwrap();

    for (i, ex) in ds.examples().iter().enumerate() {
        if i >= 2 {
            let w = learner.weights().to_vec();
            let z_t = &mapped[i];
            let history = &mapped[..i];
            if let Some(gap) = eval::jensen_gap(&w, history, z_t, &loss).unwrap() {
                assert!(
                    gap >= -1e-9,
                    "Jensen domination violated at step {i}: {gap}"
                );
                let m = loss.constants(0.0, 2.0).smoothness_m;
                let bound = 0.5 * learner.gamma_hat() * m;
                assert!(
                    gap <= bound + 1e-6,
                    "gap {gap} exceeds variance bound {bound} at step {i}"
                );
            }
        }
        learner.step(ex).unwrap();
    }
}
