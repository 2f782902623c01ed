//! Distances between the target vectors of two tasks.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::DistanceParams;
use crate::error::{Error, Result};
use crate::tasks::TaskDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetMetric {
    /// `||y_u - y_v||`, requires equal lengths.
    Target,
    /// Symmetrized KL divergence of smoothed histograms.
    SymKl,
    /// Jensen-Shannon distance of smoothed histograms.
    Js,
    /// Exact 1-Wasserstein distance of the empirical distributions.
    Wasserstein,
}

/// Smoothed histograms of both samples over their joint `[min, max]` range.
pub fn histogram_pair(yu: &[f64], yv: &[f64], bins: usize, smoothing: f64) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = yu
        .iter()
        .chain(yv)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let width = hi - lo;
    let hist = |y: &[f64]| {
        let mut counts = vec![0.0; bins];
        for &v in y {
            let k = if width > 0.0 {
                (((v - lo) / width) * bins as f64) as usize
            } else {
                0
            };
            counts[k.min(bins - 1)] += 1.0;
        }
        let n = y.len().max(1) as f64;
        let smoothed: Vec<f64> = counts.iter().map(|c| c / n + smoothing).collect();
        let total: f64 = smoothed.iter().sum();
        smoothed
            .into_iter()
            .map(|p| p / total)
            .collect::<Vec<f64>>()
    };
    (hist(yu), hist(yv))
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

fn symmetric_kl(p: &[f64], q: &[f64]) -> f64 {
    (0.5 * (kl(p, q) + kl(q, p))).max(0.0)
}

fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl(p, &m) + 0.5 * kl(q, &m)).max(0.0).sqrt()
}

/// Exact W1 between two empirical measures on the line: the integral of
/// `|F_u - F_v|` over the merged support.
pub fn wasserstein_1d(yu: &[f64], yv: &[f64]) -> f64 {
    if yu.is_empty() || yv.is_empty() {
        return 0.0;
    }
    let mut a = yu.to_vec();
    let mut b = yv.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let cdf_gap = (i as f64 / na - j as f64 / nb).abs();
        total += cdf_gap * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

pub(crate) fn target_distance_with(
    yu: &DVector<f64>,
    yv: &DVector<f64>,
    metric: TargetMetric,
    params: &DistanceParams,
) -> Result<f64> {
    let (u, v) = (yu.as_slice(), yv.as_slice());
    match metric {
        TargetMetric::Target => {
            if u.len() != v.len() {
                return Err(Error::Shape(format!(
                    "target distance needs equal lengths, got {} and {}",
                    u.len(),
                    v.len()
                )));
            }
            Ok((yu - yv).norm())
        }
        TargetMetric::SymKl => {
            let (p, q) = histogram_pair(u, v, params.hist_bins, params.hist_smoothing);
            Ok(symmetric_kl(&p, &q))
        }
        TargetMetric::Js => {
            let (p, q) = histogram_pair(u, v, params.hist_bins, params.hist_smoothing);
            Ok(jensen_shannon(&p, &q))
        }
        TargetMetric::Wasserstein => Ok(wasserstein_1d(u, v)),
    }
}

/// Distance between the training targets of `u` and `v`.
pub fn target_family_distance(
    u: &TaskDataset,
    v: &TaskDataset,
    metric: TargetMetric,
    params: &DistanceParams,
) -> Result<f64> {
    params.validate()?;
    target_distance_with(&u.y_train, &v.y_train, metric, params)
}
