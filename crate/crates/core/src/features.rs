//! Random Fourier features for the Gaussian kernel, plus exact-kernel oracles.
//!
//! The feature map is `r(x)[2i] = sqrt(2/D)*cos(u_i'x)`,
//! `r(x)[2i+1] = sqrt(2/D)*sin(u_i'x)` with frequencies `u_i ~ N(0, diag(sigma))`,
//! so that `<r(x), r(x')>` is an unbiased Monte-Carlo estimate of
//! `exp(-1/2 * sum_j sigma_j (x_j - x'_j)^2)` and `<r(x), r(x)> = 1` exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataio::{Label, SparseVec};
use crate::error::{Error, Result};
use crate::vecops;

/// Frozen random-feature projection. Regenerating with the same
/// `(d, n_features, sigma, seed)` is bit-identical, so serialization only
/// keeps those four fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "RffSpec", try_from = "RffSpec")]
pub struct RffMap {
    /// Row-major (D/2) x d frequency matrix.
    freqs: Vec<f64>,
    d: usize,
    n_features: usize,
    sigma: Vec<f64>,
    seed: u64,
}

/// Serialized form of [`RffMap`]: the frequencies are regenerable.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RffSpec {
    d: usize,
    n_features: usize,
    sigma: Vec<f64>,
    seed: u64,
}

impl From<RffMap> for RffSpec {
    fn from(m: RffMap) -> Self {
        RffSpec {
            d: m.d,
            n_features: m.n_features,
            sigma: m.sigma,
            seed: m.seed,
        }
    }
}

impl TryFrom<RffSpec> for RffMap {
    type Error = Error;
    fn try_from(s: RffSpec) -> Result<Self> {
        rff_sample(s.d, s.n_features, &s.sigma, s.seed)
    }
}

/// Expands a width parameter to length `d`: a single entry broadcasts.
fn broadcast_sigma(sigma: &[f64], d: usize) -> Result<Vec<f64>> {
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidConfig(
            "kernel width sigma must be positive".into(),
        ));
    }
    match sigma.len() {
        1 => Ok(vec![sigma[0]; d]),
        n if n == d => Ok(sigma.to_vec()),
        n => Err(Error::DimensionMismatch {
            expected: d,
            got: n,
        }),
    }
}

/// Samples D/2 i.i.d. Gaussian frequency rows; deterministic under `seed`.
pub fn rff_sample(d: usize, n_features: usize, sigma: &[f64], seed: u64) -> Result<RffMap> {
    if d == 0 {
        return Err(Error::InvalidConfig("input dimension must be >= 1".into()));
    }
    if n_features < 2 || !n_features.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "feature count must be even and >= 2, got {n_features}"
        )));
    }
    let sigma = broadcast_sigma(sigma, d)?;
    let std: Vec<f64> = sigma.iter().map(|s| s.sqrt()).collect();
    let rows = n_features / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut freqs = Vec::with_capacity(rows * d);
    for _ in 0..rows {
        for sd in &std {
            let z: f64 = StandardNormal.sample(&mut rng);
            freqs.push(z * sd);
        }
    }
    Ok(RffMap {
        freqs,
        d,
        n_features,
        sigma,
        seed,
    })
}

impl RffMap {
    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[cfg(test)]
    pub(crate) fn freq_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.freqs.chunks(self.d)
    }

    /// Maps a sparse input into the feature space. `out` must have length D.
    pub fn map_into(&self, x: &SparseVec, out: &mut [f64]) -> Result<()> {
        if out.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: out.len(),
            });
        }
        let max_idx = x.max_index();
        if max_idx as usize > self.d {
            return Err(Error::IndexOutOfRange {
                index: max_idx,
                dim: self.d,
            });
        }
        let scale = (2.0 / self.n_features as f64).sqrt();
        for (row, chunk) in self.freqs.chunks(self.d).enumerate() {
            let t: f64 = x.iter().map(|(i, v)| chunk[(i - 1) as usize] * v).sum();
            let (sin, cos) = t.sin_cos();
            out[2 * row] = scale * cos;
            out[2 * row + 1] = scale * sin;
        }
        Ok(())
    }

    pub fn map(&self, x: &SparseVec) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_features];
        self.map_into(x, &mut out)?;
        Ok(out)
    }
}

/// A mapped example: feature vector plus its label. Random Fourier maps
/// produce unit-norm vectors; the identity map passes raw features through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedExample {
    pub phi: Vec<f64>,
    pub label: Label,
}

/// The feature space a learner operates in: random Fourier features or the
/// raw input space (used by the baselines' linear mode).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FeatureMap {
    Rff(RffMap),
    Identity { dim: usize },
}

impl FeatureMap {
    pub fn out_dim(&self) -> usize {
        match self {
            FeatureMap::Rff(m) => m.n_features(),
            FeatureMap::Identity { dim } => *dim,
        }
    }

    pub fn map_into(&self, x: &SparseVec, out: &mut [f64]) -> Result<()> {
        match self {
            FeatureMap::Rff(m) => m.map_into(x, out),
            FeatureMap::Identity { dim } => {
                if out.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: out.len(),
                    });
                }
                let max_idx = x.max_index();
                if max_idx as usize > *dim {
                    return Err(Error::IndexOutOfRange {
                        index: max_idx,
                        dim: *dim,
                    });
                }
                out.fill(0.0);
                for (i, v) in x.iter() {
                    out[(i - 1) as usize] = v;
                }
                Ok(())
            }
        }
    }

    pub fn map(&self, x: &SparseVec) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.out_dim()];
        self.map_into(x, &mut out)?;
        Ok(out)
    }
}

/// Gaussian kernel `exp(-1/2 * sum_j sigma_j (x_j - y_j)^2)`, normalized so
/// that k(x,x) = 1, matching the expectation of the feature inner product.
pub fn exact_gaussian(x: &[f64], y: &[f64], sigma: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let sigma_at = |j: usize| if sigma.len() == 1 { sigma[0] } else { sigma[j] };
    let q: f64 = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(j, (a, b))| sigma_at(j) * (a - b) * (a - b))
        .sum();
    (-0.5 * q).exp()
}

/// Pairwise kernel built from the Gaussian kernel `G`:
/// `G(x1,x1') + G(x2,x2') - G(x1,x2') - G(x2,x1')`.
pub fn pairwise_kernel(x1: &[f64], x2: &[f64], x1p: &[f64], x2p: &[f64], sigma: &[f64]) -> f64 {
    exact_gaussian(x1, x1p, sigma) + exact_gaussian(x2, x2p, sigma)
        - exact_gaussian(x1, x2p, sigma)
        - exact_gaussian(x2, x1p, sigma)
}

/// One row of a kernel-approximation error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffErrorRow {
    pub n_features: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
}

/// Measures `|k_hat - k|` of the pairwise kernel over random quadruples from
/// the unit cube, for each feature count in `sizes`. The same quadruples are
/// used for every size so the sweep isolates D.
pub fn rff_error_profile(
    sizes: &[usize],
    n_pairs: usize,
    sigma: &[f64],
    seed: u64,
) -> Result<Vec<RffErrorRow>> {
    if n_pairs < 1 {
        return Err(Error::InvalidInput("n_pairs must be >= 1".into()));
    }
    if sigma.is_empty() {
        return Err(Error::InvalidConfig("sigma must be nonempty".into()));
    }
    let d = sigma.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quads: Vec<[Vec<f64>; 4]> = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let mut quad: [Vec<f64>; 4] = Default::default();
        for v in quad.iter_mut() {
            *v = (0..d).map(|_| rng.random::<f64>()).collect();
        }
        quads.push(quad);
    }
    let exact: Vec<f64> = quads
        .iter()
        .map(|[a, b, c, e]| pairwise_kernel(a, b, c, e, sigma))
        .collect();

    let mut out = Vec::with_capacity(sizes.len());
    for &n_features in sizes {
        let map = rff_sample(
            d,
            n_features,
            sigma,
            vecops::mix_seed(seed, n_features as u64),
        )?;
        let mut max_err = 0.0f64;
        let mut sum_err = 0.0f64;
        let mut diff = vec![0.0; n_features];
        let mut diff_p = vec![0.0; n_features];
        for ([a, b, c, e], &k) in quads.iter().zip(&exact) {
            let ra = map.map(&SparseVec::from_dense(a))?;
            let rb = map.map(&SparseVec::from_dense(b))?;
            let rc = map.map(&SparseVec::from_dense(c))?;
            let re = map.map(&SparseVec::from_dense(e))?;
            for i in 0..n_features {
                diff[i] = ra[i] - rb[i];
                diff_p[i] = rc[i] - re[i];
            }
            let k_hat = vecops::dot(&diff, &diff_p);
            let err = (k_hat - k).abs();
            max_err = max_err.max(err);
            sum_err += err;
        }
        out.push(RffErrorRow {
            n_features,
            max_abs_error: max_err,
            mean_abs_error: sum_err / n_pairs as f64,
        });
    }
    Ok(out)
}
