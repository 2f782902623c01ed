//! Error-propagation bounds along root-to-leaf paths and their empirical
//! verification on synthetic linear chains.

mod verify;

pub use verify::{
    random_chain_configs, verify_bounds, ChainConfig, RandomChains, VerificationReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A path `v_0 -> ... -> v_m`; entry `i` of each sequence describes `v_{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub rhos: Vec<f64>,
    pub budgets: Vec<u64>,
    /// Distance between consecutive optima.
    pub deltas: Vec<f64>,
    /// Error at `v_0` after its own refinement.
    pub init_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySpec {
    pub path: PathSpec,
    pub sigmas: Vec<f64>,
    /// Frobenius norm of `(X^T X)^{-1} X^T` per task.
    pub a_frob: Vec<f64>,
}

impl PathSpec {
    pub fn len(&self) -> usize {
        self.rhos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhos.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.rhos.len();
        if self.budgets.len() != m || self.deltas.len() != m {
            return Err(Error::Shape(format!(
                "path of length {m} needs {m} budgets and distances"
            )));
        }
        let finite = self
            .rhos
            .iter()
            .chain(&self.deltas)
            .chain([&self.init_error])
            .all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(Error::Config(
                "path quantities must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// `rho_i ^ b_i`.
    fn factors(&self) -> Vec<f64> {
        self.rhos
            .iter()
            .zip(&self.budgets)
            .map(|(r, &b)| r.powf(b as f64))
            .collect()
    }

    /// `P_{i:m}` for `i = 1..=m+1` (0-based index `i-1`); the last entry is the
    /// empty product.
    pub fn attenuation(&self) -> Vec<f64> {
        let f = self.factors();
        let mut p = vec![1.0; f.len() + 1];
        for i in (0..f.len()).rev() {
            p[i] = p[i + 1] * f[i];
        }
        p
    }
}

/// `P_{1:m} * init_error + sum_i P_{i:m} * delta_i`.
pub fn path_bound(spec: &PathSpec) -> Result<f64> {
    spec.validate()?;
    let p = spec.attenuation();
    Ok(p[0] * spec.init_error
        + spec
            .deltas
            .iter()
            .zip(&p)
            .map(|(d, pi)| pi * d)
            .sum::<f64>())
}

/// Adds `sum_i P_{i+1:m} * sigma_i * (1 + rho_i^b_i) * ||A_i||_F` to the
/// noiseless bound.
pub fn noisy_path_bound(spec: &NoisySpec) -> Result<f64> {
    let base = path_bound(&spec.path)?;
    let m = spec.path.len();
    if spec.sigmas.len() != m || spec.a_frob.len() != m {
        return Err(Error::Shape(format!(
            "path of length {m} needs {m} noise scales and operator norms"
        )));
    }
    if spec
        .sigmas
        .iter()
        .chain(&spec.a_frob)
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::Config(
            "noise quantities must be finite and nonnegative".into(),
        ));
    }
    let p = spec.path.attenuation();
    let f = spec.path.factors();
    let noise: f64 = (0..m)
        .map(|i| p[i + 1] * spec.sigmas[i] * (1.0 + f[i]) * spec.a_frob[i])
        .sum();
    Ok(base + noise)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtlVsTl {
    /// Worst case with every edge at `delta_max`.
    pub ctl_bound: f64,
    /// Direct transfer from the root over distance `d_sv`.
    pub tl_bound: f64,
    pub ctl_tighter: bool,
}

/// Compares an `m`-edge cascade against one-hop transfer with equal per-node
/// budgets `b`.
pub fn ctl_vs_tl(delta_max: f64, rho_max: f64, m: u32, b: u64, d_sv: f64) -> CtlVsTl {
    let rb = rho_max.powf(b as f64);
    let ctl_bound = (1..=m)
        .map(|i| rho_max.powf(((m - i + 1) as u64 * b) as f64) * delta_max)
        .sum();
    let tl_bound = rb * d_sv;
    let ctl_tighter = delta_max * (1.0 - rho_max.powf(m as f64 * b as f64)) < d_sv * (1.0 - rb);
    CtlVsTl {
        ctl_bound,
        tl_bound,
        ctl_tighter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn spec(rhos: &[f64], budgets: &[u64], deltas: &[f64], init_error: f64) -> PathSpec {
        PathSpec {
            rhos: rhos.to_vec(),
            budgets: budgets.to_vec(),
            deltas: deltas.to_vec(),
            init_error,
        }
    }

    fn random_spec(rng: &mut impl Rng, m: usize) -> PathSpec {
        PathSpec {
            rhos: (0..m).map(|_| rng.random_range(0.05..0.99)).collect(),
            budgets: (0..m).map(|_| rng.random_range(0..10)).collect(),
            deltas: (0..m).map(|_| rng.random_range(0.0..3.0)).collect(),
            init_error: rng.random_range(0.0..3.0),
        }
    }

    #[test]
    fn single_edge() {
        assert_eq!(path_bound(&spec(&[0.5], &[2], &[1.0], 0.0)).unwrap(), 0.25);
    }

    #[test]
    fn pure_contraction() {
        let s = spec(&[0.5, 0.8, 0.9], &[1, 2, 3], &[0.0; 3], 2.0);
        let p = 0.5 * 0.8f64.powi(2) * 0.9f64.powi(3);
        assert!((path_bound(&s).unwrap() - 2.0 * p).abs() < 1e-15);
    }

    #[test]
    fn path_bound_matches_recurrence() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = random_spec(&mut rng, 3);
            let e = (0..3).fold(s.init_error, |e, i| {
                s.rhos[i].powi(s.budgets[i] as i32) * (e + s.deltas[i])
            });
            assert!((path_bound(&s).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_examples() {
        let base = spec(&[0.5], &[1], &[0.0], 0.0);
        let n = NoisySpec {
            path: base.clone(),
            sigmas: vec![1.0],
            a_frob: vec![2.0],
        };
        assert_eq!(noisy_path_bound(&n).unwrap(), 3.0);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = random_spec(&mut rng, 4);
            let quiet = NoisySpec {
                path: s.clone(),
                sigmas: vec![0.0; 4],
                a_frob: vec![1.5; 4],
            };
            assert_eq!(noisy_path_bound(&quiet).unwrap(), path_bound(&s).unwrap());
        }
    }

    #[test]
    fn noisy_bound_matches_recurrence() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = random_spec(&mut rng, 3);
            let sig: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
            let e = (0..3).fold(s.init_error, |e, i| {
                let f = s.rhos[i].powi(s.budgets[i] as i32);
                f * (e + s.deltas[i]) + (1.0 + f) * sig[i] * a[i]
            });
            let n = NoisySpec {
                path: s,
                sigmas: sig,
                a_frob: a,
            };
            assert!((noisy_path_bound(&n).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        assert!(path_bound(&spec(&[0.5], &[1, 2], &[1.0], 0.0)).is_err());
        assert!(path_bound(&spec(&[0.5], &[1], &[f64::NAN], 0.0)).is_err());
        let n = NoisySpec {
            path: spec(&[0.5], &[1], &[1.0], 0.0),
            sigmas: vec![],
            a_frob: vec![1.0],
        };
        assert!(noisy_path_bound(&n).is_err());
    }

    #[test]
    fn ctl_vs_tl_examples() {
        let r = ctl_vs_tl(1.0, 0.5, 2, 1, 2.0);
        assert!(r.ctl_tighter);
        assert!((r.ctl_bound - (0.25 + 0.5)).abs() < 1e-15);
        assert_eq!(r.tl_bound, 1.0);
        assert!(!ctl_vs_tl(1.3, 0.7, 1, 3, 1.3).ctl_tighter);
    }

    #[test]
    fn ctl_vs_tl_matches_geometric_series() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let (rho, b, m) = (
                rng.random_range(0.01f64..0.99),
                rng.random_range(1..10u64),
                rng.random_range(1..8u32),
            );
            let (dmax, dsv) = (rng.random_range(0.0f64..5.0), rng.random_range(0.0..5.0));
            let rb = rho.powf(b as f64);
            let geometric = dmax * rb * (1.0 - rho.powf((m as u64 * b) as f64)) / (1.0 - rb);
            let r = ctl_vs_tl(dmax, rho, m, b, dsv);
            assert_eq!(r.ctl_tighter, geometric < rb * dsv);
            assert!((r.ctl_bound - geometric).abs() <= 1e-12 * (1.0 + geometric));
        }
    }

    proptest! {
        #[test]
        fn path_bound_is_monotone(seed in any::<u64>(), m in 1usize..6, idx in 0usize..6, bump in 0.0f64..2.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let s = random_spec(&mut rng, m);
            let i = idx % m;
            let base = path_bound(&s).unwrap();
            let mut more_delta = s.clone();
            more_delta.deltas[i] += bump;
            prop_assert!(path_bound(&more_delta).unwrap() >= base);
            let mut more_init = s.clone();
            more_init.init_error += bump;
            prop_assert!(path_bound(&more_init).unwrap() >= base);
            let mut more_steps = s.clone();
            more_steps.budgets[i] += 1;
            prop_assert!(path_bound(&more_steps).unwrap() <= base);
        }

        #[test]
        fn ctl_condition_is_scale_invariant(rho in 0.01f64..0.99, b in 1u64..10, m in 1u32..8, dmax in 0.01f64..5.0, dsv in 0.01f64..5.0, c in 0.01f64..100.0) {
            let a = ctl_vs_tl(dmax, rho, m, b, dsv);
            let s = ctl_vs_tl(c * dmax, rho, m, b, c * dsv);
            let lhs = dmax * (1.0 - rho.powf(m as f64 * b as f64));
            let rhs = dsv * (1.0 - rho.powf(b as f64));
            // Rounding may flip the scaled comparison only at near-equality.
            prop_assume!((lhs - rhs).abs() > 1e-9 * (lhs + rhs));
            prop_assert_eq!(a.ctl_tighter, s.ctl_tighter);
        }
    }
}
