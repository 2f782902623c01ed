//! Distances between the input distributions of two tasks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::DistanceParams;
use crate::error::{Error, Result};
use crate::rng;
use crate::tasks::TaskDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMetric {
    /// Normalized Euclidean distance between flattened design matrices.
    Feature,
    /// RBF-kernel MMD through random Fourier features.
    Mmd,
    /// `||mu_u - mu_v|| + ||Sigma_u - Sigma_v||_F`.
    GaussMeanCov,
    /// `1 - linear CKA`.
    Cka,
}

/// Frequencies and phases shared by every pair of one distance computation,
/// so all tasks live in the same embedding.
#[derive(Debug, Clone)]
pub struct FourierFeatures {
    omega: DMatrix<f64>,
    phase: DVector<f64>,
}

impl FourierFeatures {
    pub fn new(dim: usize, features: usize, seed: u64) -> Self {
        let mut r = rng::rng_for(seed, "distances/rff");
        let omega = DMatrix::from_row_iterator(
            features,
            dim,
            (0..features * dim).map(|_| r.sample::<f64, _>(StandardNormal)),
        );
        let uniform = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
        let phase = DVector::from_iterator(features, (0..features).map(|_| r.sample(uniform)));
        FourierFeatures { omega, phase }
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    /// Mean of `sqrt(2/D) cos(omega x / bandwidth + phase)` over the rows of `x`.
    pub fn mean_embedding(&self, x: &DMatrix<f64>, bandwidth: f64) -> DVector<f64> {
        let features = self.len();
        let scale = (2.0 / features as f64).sqrt();
        let mut acc = DVector::zeros(features);
        // projections: n x D
        let proj = x * self.omega.transpose() / bandwidth;
        for i in 0..x.nrows() {
            for k in 0..features {
                acc[k] += (proj[(i, k)] + self.phase[k]).cos();
            }
        }
        acc * (scale / x.nrows().max(1) as f64)
    }

    pub fn mmd(&self, xu: &DMatrix<f64>, xv: &DMatrix<f64>) -> f64 {
        let bandwidth = median_bandwidth(xu, xv);
        (self.mean_embedding(xu, bandwidth) - self.mean_embedding(xv, bandwidth)).norm()
    }
}

/// Median pairwise Euclidean distance over the pooled rows of both samples;
/// `1.0` when the median is zero.
pub fn median_bandwidth(xu: &DMatrix<f64>, xv: &DMatrix<f64>) -> f64 {
    let rows: Vec<_> = xu.row_iter().chain(xv.row_iter()).collect();
    let mut dists = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            dists.push((rows[i] - rows[j]).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mu = column_means(x);
    let mut z = x.clone();
    for (j, mut col) in z.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mu[j]);
    }
    z
}

fn mean_variance_embedding(x: &DMatrix<f64>) -> DVector<f64> {
    let mu = column_means(x);
    let n = x.nrows().max(1) as f64;
    let var = x
        .column_iter()
        .enumerate()
        .map(|(j, c)| c.iter().map(|v| (v - mu[j]).powi(2)).sum::<f64>() / n);
    DVector::from_iterator(2 * x.ncols(), mu.iter().copied().chain(var))
}

fn normalized_euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
    (sq / a.len() as f64).sqrt()
}

/// Normalized Euclidean distance of flattened designs, or of mean/variance
/// embeddings when the shapes differ.
pub fn flat_feature_distance(xu: &DMatrix<f64>, xv: &DMatrix<f64>) -> f64 {
    if xu.shape() == xv.shape() {
        normalized_euclidean(xu.as_slice(), xv.as_slice())
    } else {
        normalized_euclidean(
            mean_variance_embedding(xu).as_slice(),
            mean_variance_embedding(xv).as_slice(),
        )
    }
}

fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let z = centered(x);
    z.tr_mul(&z) / (x.nrows() as f64 - 1.0)
}

pub fn gauss_meancov_distance(xu: &DMatrix<f64>, xv: &DMatrix<f64>) -> Result<f64> {
    require_samples(xu, xv, 2)?;
    let mean_gap = (column_means(xu) - column_means(xv)).norm();
    let cov_gap = (sample_covariance(xu) - sample_covariance(xv)).norm();
    Ok(mean_gap + cov_gap)
}

/// Linear CKA between the row-paired representations; rows beyond the
/// shorter sample are dropped.
pub fn cka_similarity(xu: &DMatrix<f64>, xv: &DMatrix<f64>) -> Result<f64> {
    require_samples(xu, xv, 2)?;
    let n = xu.nrows().min(xv.nrows());
    let zu = centered(&xu.rows(0, n).into_owned());
    let zv = centered(&xv.rows(0, n).into_owned());
    // tr(K_u K_v) = ||Z_u^T Z_v||_F^2 for centered Z
    let cross = zu.tr_mul(&zv).norm_squared();
    let self_u = zu.tr_mul(&zu).norm_squared();
    let self_v = zv.tr_mul(&zv).norm_squared();
    let similarity = match (self_u > 0.0, self_v > 0.0) {
        (true, true) => cross / (self_u * self_v).sqrt(),
        (false, false) => 1.0,
        _ => 0.0,
    };
    Ok(similarity.clamp(0.0, 1.0))
}

fn require_samples(xu: &DMatrix<f64>, xv: &DMatrix<f64>, min: usize) -> Result<()> {
    let n = xu.nrows().min(xv.nrows());
    if n < min {
        return Err(Error::Shape(format!(
            "need at least {min} samples per task, got {n}"
        )));
    }
    Ok(())
}

pub(crate) fn feature_distance_with(
    xu: &DMatrix<f64>,
    xv: &DMatrix<f64>,
    metric: FeatureMetric,
    rff: Option<&FourierFeatures>,
) -> Result<f64> {
    match metric {
        FeatureMetric::Feature => Ok(flat_feature_distance(xu, xv)),
        FeatureMetric::Mmd => Ok(rff.expect("MMD needs Fourier features").mmd(xu, xv)),
        FeatureMetric::GaussMeanCov => gauss_meancov_distance(xu, xv),
        FeatureMetric::Cka => Ok(1.0 - cka_similarity(xu, xv)?),
    }
}

/// Distance between the training inputs of `u` and `v`.
pub fn feature_family_distance(
    u: &TaskDataset,
    v: &TaskDataset,
    metric: FeatureMetric,
    params: &DistanceParams,
) -> Result<f64> {
    params.validate()?;
    if u.dim() != v.dim() {
        return Err(Error::Shape(format!(
            "feature dimensions differ: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    let rff = (metric == FeatureMetric::Mmd)
        .then(|| FourierFeatures::new(u.dim(), params.rff_dim, params.seed));
    feature_distance_with(&u.x_train, &v.x_train, metric, rff.as_ref())
}
