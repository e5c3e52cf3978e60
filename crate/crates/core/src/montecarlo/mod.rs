//! Seeded trajectory ensembles and their statistics.
//!
//! Trajectory `i` of an ensemble draws its noise from ChaCha8 stream
//! `first_substream + i` of `seed`. Per-trajectory results are collected in
//! index order and reduced sequentially with compensated summation, so an
//! estimate does not depend on the number of workers.

mod fit;
mod pipelines;

pub use fit::{fit_rate, RateFit};
pub use pipelines::{
    estimate_clt_error, estimate_clt_ladder, estimate_mdp_tail, estimate_moment, TailEstimate,
    TailPoint,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    pub seed: u64,
    pub first_substream: u64,
    /// `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl EnsembleSpec {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            seed,
            first_substream: 0,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_first_substream(mut self, first: u64) -> Self {
        self.first_substream = first;
        self
    }

    pub fn seed_range(&self) -> SeedRange {
        SeedRange {
            seed: self.seed,
            first_substream: self.first_substream,
            count: self.n_traj as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub seed: u64,
    pub first_substream: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleEstimate {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `1.96 sqrt(variance / n)`.
    pub ci95_halfwidth: f64,
    pub n_samples: usize,
    pub seed_range: SeedRange,
}

impl EnsembleEstimate {
    pub fn from_samples(samples: &[f64], seed_range: SeedRange) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "an ensemble estimate needs at least 2 samples, got {n}"
            )));
        }
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let variance = if samples.iter().all(|v| *v == samples[0]) {
            0.0
        } else {
            neumaier_sum(samples.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64
        };
        let est = Self {
            mean,
            variance,
            ci95_halfwidth: 1.96 * (variance / n as f64).sqrt(),
            n_samples: n,
            seed_range,
        };
        if !(est.mean.is_finite() && est.variance.is_finite()) {
            return Err(Error::InvalidInput(
                "ensemble samples are not finite".into(),
            ));
        }
        Ok(est)
    }

    pub fn ci95(&self) -> (f64, f64) {
        (
            self.mean - self.ci95_halfwidth,
            self.mean + self.ci95_halfwidth,
        )
    }

    pub fn overlaps(&self, other: &EnsembleEstimate) -> bool {
        let (a, b) = (self.ci95(), other.ci95());
        a.0 <= b.1 && b.0 <= a.1
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Evaluates `f(substream)` for every trajectory of `spec`, in index order.
///
/// The first failing trajectory (by index) is reported, wrapped with its
/// substream so it can be replayed alone.
pub fn run_ensemble<T, F>(spec: &EnsembleSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let first = spec.first_substream;
    let job = |i: usize| {
        let sub = first + i as u64;
        f(sub).map_err(|e| match e {
            Error::Trajectory { .. } => e,
            other => Error::Trajectory {
                substream: sub,
                source: Box::new(other),
            },
        })
    };
    let results: Vec<Result<T>> = match spec.workers {
        Some(0) => return Err(Error::InvalidInput("workers must be at least 1".into())),
        Some(1) => (0..spec.n_traj).map(job).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start {k} workers: {e}")))?
            .install(|| (0..spec.n_traj).into_par_iter().map(job).collect()),
        None => (0..spec.n_traj).into_par_iter().map(job).collect(),
    };
    results.into_iter().collect()
}

/// Mean of a scalar trajectory functional over the ensemble.
pub fn estimate_functional<F>(spec: &EnsembleSpec, f: F) -> Result<EnsembleEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    check_ensemble(spec)?;
    let samples = run_ensemble(spec, f)?;
    EnsembleEstimate::from_samples(&samples, spec.seed_range())
}

pub(crate) fn check_ensemble(spec: &EnsembleSpec) -> Result<()> {
    if spec.n_traj < 2 {
        return Err(Error::InvalidInput(format!(
            "n_traj must be at least 2, got {}",
            spec.n_traj
        )));
    }
    Ok(())
}
