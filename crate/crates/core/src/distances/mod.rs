//! Pairwise task distances, grouped by the information they use: input
//! features, targets, or optimization quantities (gradients and fitted
//! models). All of them are used only as nonnegative edge weights, so
//! divergences are admitted alongside true metrics.

mod feature;
mod matrix;
mod optimization;
mod target;

pub use feature::{
    cka_similarity, feature_family_distance, median_bandwidth, FeatureMetric, FourierFeatures,
};
pub use matrix::{compute_distance_matrix, read_distance_csv, write_distance_csv, DistanceMatrix};
pub use optimization::{optimization_family_distance, OptimizationMetric};
pub use target::{histogram_pair, target_family_distance, wasserstein_1d, TargetMetric};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Hyperparameters the metrics need but leave open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceParams {
    /// Random Fourier feature count for MMD.
    pub rff_dim: usize,
    pub hist_bins: usize,
    /// Probability mass added to every histogram bin before renormalizing.
    pub hist_smoothing: f64,
    /// Ridge penalty for the model distance; `None` picks `1e-3 * tr(X^T X) / d` per task.
    pub ridge_lambda: Option<f64>,
    pub normalize_gradients: bool,
    /// Z-score features with collection-wide column statistics before feature metrics.
    pub standardize_features: bool,
    pub seed: u64,
}

impl Default for DistanceParams {
    fn default() -> Self {
        DistanceParams {
            rff_dim: 256,
            hist_bins: 32,
            hist_smoothing: 1e-6,
            ridge_lambda: None,
            normalize_gradients: true,
            standardize_features: false,
            seed: 0,
        }
    }
}

impl DistanceParams {
    pub fn validate(&self) -> crate::Result<()> {
        if self.rff_dim == 0 || self.hist_bins == 0 {
            return Err(Error::Config(
                "rff_dim and hist_bins must be positive".into(),
            ));
        }
        if !(self.hist_smoothing > 0.0 && self.hist_smoothing.is_finite()) {
            return Err(Error::Config("hist_smoothing must be positive".into()));
        }
        if let Some(l) = self.ridge_lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config("ridge_lambda must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Every supported task distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Metric {
    Feature(FeatureMetric),
    Target(TargetMetric),
    Optimization(OptimizationMetric),
}

impl Metric {
    pub const NAMES: [&'static str; 10] = [
        "feature",
        "mmd",
        "gauss_meancov",
        "cka",
        "target",
        "sym_kl",
        "js",
        "wasserstein",
        "gradient",
        "model",
    ];

    pub fn all() -> Vec<Metric> {
        Self::NAMES
            .iter()
            .map(|n| n.parse().expect("known name"))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Feature(FeatureMetric::Feature) => "feature",
            Metric::Feature(FeatureMetric::Mmd) => "mmd",
            Metric::Feature(FeatureMetric::GaussMeanCov) => "gauss_meancov",
            Metric::Feature(FeatureMetric::Cka) => "cka",
            Metric::Target(TargetMetric::Target) => "target",
            Metric::Target(TargetMetric::SymKl) => "sym_kl",
            Metric::Target(TargetMetric::Js) => "js",
            Metric::Target(TargetMetric::Wasserstein) => "wasserstein",
            Metric::Optimization(OptimizationMetric::Gradient) => "gradient",
            Metric::Optimization(OptimizationMetric::Model) => "model",
        }
    }

    /// Whether the metric ignores the order of samples within a task.
    pub fn is_order_invariant(self) -> bool {
        !matches!(
            self,
            Metric::Feature(FeatureMetric::Feature | FeatureMetric::Cka)
                | Metric::Target(TargetMetric::Target)
        )
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "feature" => Metric::Feature(FeatureMetric::Feature),
            "mmd" => Metric::Feature(FeatureMetric::Mmd),
            "gauss_meancov" => Metric::Feature(FeatureMetric::GaussMeanCov),
            "cka" => Metric::Feature(FeatureMetric::Cka),
            "target" => Metric::Target(TargetMetric::Target),
            "sym_kl" => Metric::Target(TargetMetric::SymKl),
            "js" => Metric::Target(TargetMetric::Js),
            "wasserstein" => Metric::Target(TargetMetric::Wasserstein),
            "gradient" => Metric::Optimization(OptimizationMetric::Gradient),
            "model" => Metric::Optimization(OptimizationMetric::Model),
            other => return Err(Error::UnknownMetric(other.to_string())),
        })
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for Metric {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.name().to_string()
    }
}
