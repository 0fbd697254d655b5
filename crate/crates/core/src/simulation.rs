//! Scenario generators and the Monte Carlo engine for size and power studies.
//!
//! Scenarios follow the identity-null design: independent components with
//! mean 2 and unit variance under the null, and two diagonal alternatives
//! that modify the first `⌊v₀p⌋` components.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CovTestError, Result};
use crate::rng::{replication_rng, split};
use crate::score_test::{NullSpec, TestStatistic};
use crate::stats::DataMatrix;

/// Shape and scale of the null Gamma components (mean 2, variance 1).
pub const GAMMA_NULL: (f64, f64) = (4.0, 0.5);
/// Shape and scale of the first-alternative Gamma components (mean 2, variance 2).
pub const GAMMA_ALT1: (f64, f64) = (2.0, 1.0);
pub const DEFAULT_MU0: f64 = 2.0;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Gamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Gamma => "gamma",
        }
    }

    /// Excess kurtosis β of the standardized null components.
    pub fn true_beta(self) -> f64 {
        match self {
            Family::Gaussian => 0.0,
            Family::Gamma => 6.0 / GAMMA_NULL.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "v0", rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    /// First ⌊v₀p⌋ variances doubled.
    Alt1(f64),
    /// First ⌊v₀p⌋ variances inflated by `1 + 20/√(np)`.
    Alt2(f64),
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Null => "null",
            Hypothesis::Alt1(_) => "alt1",
            Hypothesis::Alt2(_) => "alt2",
        }
    }

    pub fn v0(self) -> f64 {
        match self {
            Hypothesis::Null => 0.0,
            Hypothesis::Alt1(v) | Hypothesis::Alt2(v) => v,
        }
    }

    /// Same alternative family with a different `v₀`.
    pub fn with_v0(self, v0: f64) -> Self {
        match self {
            Hypothesis::Null | Hypothesis::Alt1(_) => Hypothesis::Alt1(v0),
            Hypothesis::Alt2(_) => Hypothesis::Alt2(v0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub hypothesis: Hypothesis,
    pub mu0: f64,
}

impl ScenarioSpec {
    pub fn new(family: Family, n: usize, p: usize, hypothesis: Hypothesis) -> Result<Self> {
        let spec = Self {
            family,
            n,
            p,
            hypothesis,
            mu0: DEFAULT_MU0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_mu0(mut self, mu0: f64) -> Result<Self> {
        self.mu0 = mu0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(CovTestError::InvalidInput(format!(
                "scenario needs n >= 2 and p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        let v0 = self.hypothesis.v0();
        if !(0.0..=1.0).contains(&v0) {
            return Err(CovTestError::InvalidInput(format!(
                "v0 must lie in [0, 1], got {v0}"
            )));
        }
        if !self.mu0.is_finite() {
            return Err(CovTestError::InvalidInput("mu0 must be finite".into()));
        }
        Ok(())
    }

    /// `⌊v₀p⌋`, the number of modified leading components.
    pub fn modified_count(&self) -> usize {
        // The small offset keeps products like 0.29·100 from truncating to 28.
        let raw = (self.hypothesis.v0() * self.p as f64 + 1e-9).floor() as usize;
        raw.min(self.p)
    }

    /// Alternative-2 inflation factor `1 + 20/√(np)`.
    pub fn alt2_factor(&self) -> f64 {
        1.0 + 20.0 / ((self.n * self.p) as f64).sqrt()
    }

    /// Variance of component `k` under this scenario.
    pub fn component_variance(&self, k: usize) -> f64 {
        if k >= self.modified_count() {
            return 1.0;
        }
        match self.hypothesis {
            Hypothesis::Null => 1.0,
            Hypothesis::Alt1(_) => 2.0,
            Hypothesis::Alt2(_) => self.alt2_factor(),
        }
    }

    /// Gamma (shape, scale) of component `k` for the Gamma family.
    pub fn gamma_parameters(&self, k: usize) -> (f64, f64) {
        if k >= self.modified_count() {
            return GAMMA_NULL;
        }
        match self.hypothesis {
            Hypothesis::Null => GAMMA_NULL,
            Hypothesis::Alt1(_) => GAMMA_ALT1,
            Hypothesis::Alt2(_) => {
                let c = self.alt2_factor();
                (4.0 / c, c / 2.0)
            }
        }
    }
}

/// One sample of `n` independent columns for `spec`, drawn from the
/// replication stream seeded with `rep_seed`.
pub fn generate_sample(spec: &ScenarioSpec, rep_seed: u64) -> DataMatrix {
    let mut rng = replication_rng(rep_seed);
    let (p, n) = (spec.p, spec.n);
    let values = match spec.family {
        Family::Gaussian => {
            let sd: Vec<f64> = (0..p).map(|k| spec.component_variance(k).sqrt()).collect();
            DMatrix::from_fn(p, n, |k, _| {
                spec.mu0 + sd[k] * rng.sample::<f64, _>(StandardNormal)
            })
        }
        Family::Gamma => {
            let dists: Vec<Gamma<f64>> = (0..p)
                .map(|k| {
                    let (shape, scale) = spec.gamma_parameters(k);
                    Gamma::new(shape, scale).expect("validated gamma parameters")
                })
                .collect();
            DMatrix::from_fn(p, n, |k, _| rng.sample(dists[k]))
        }
    };
    DataMatrix::new(values).expect("scenario generators produce finite p x n data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub spec: ScenarioSpec,
    pub test_name: String,
    pub alpha: f64,
    pub replications: u64,
    pub rejections: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
    pub master_seed: u64,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub elapsed: f64,
}

impl SimulationReport {
    /// Half-width of the 95% Wilson interval.
    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci95.1 - self.ci95.0)
    }

    /// Copy with the timing zeroed, for byte-level comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            elapsed: 0.0,
            ..self.clone()
        }
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Worker count from `COVTEST_THREADS` (0 or unset means one per core).
pub fn threads_from_env() -> usize {
    std::env::var("COVTEST_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

/// Empirical rejection rate of `test` for the identity null under `spec`.
pub fn run_monte_carlo(
    spec: &ScenarioSpec,
    test: &dyn TestStatistic,
    alpha: f64,
    reps: u64,
    master_seed: u64,
) -> Result<SimulationReport> {
    run_monte_carlo_threads(spec, test, alpha, reps, master_seed, threads_from_env())
}

/// As [`run_monte_carlo`] with an explicit worker count (0 = automatic).
pub fn run_monte_carlo_threads(
    spec: &ScenarioSpec,
    test: &dyn TestStatistic,
    alpha: f64,
    reps: u64,
    master_seed: u64,
    threads: usize,
) -> Result<SimulationReport> {
    spec.validate()?;
    if reps < 1 {
        return Err(CovTestError::InvalidInput("reps must be at least 1".into()));
    }
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(CovTestError::InvalidInput(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let start = Instant::now();
    let null = NullSpec::Identity;
    let one = |r: u64| -> Result<u64> {
        let x = generate_sample(spec, split(master_seed, r));
        Ok(u64::from(test.compute(&x, &null)?.reject_at(alpha)))
    };
    let count = || -> Result<u64> {
        (0..reps)
            .into_par_iter()
            .map(one)
            .try_reduce(|| 0, |a, b| Ok(a + b))
    };
    let rejections = if threads == 1 {
        (0..reps).map(one).sum::<Result<u64>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CovTestError::Config(format!("thread pool: {e}")))?
            .install(count)?
    };
    Ok(SimulationReport {
        spec: *spec,
        test_name: test.name().to_string(),
        alpha,
        replications: reps,
        rejections,
        rate: rejections as f64 / reps as f64,
        ci95: wilson_interval(rejections, reps),
        master_seed,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// One report per `v₀` in `grid`, all sharing `master_seed`. The template's
/// alternative kind is kept (a `Null` template is treated as the first
/// alternative); `v₀ = 0` reproduces the null generator.
pub fn power_curve(
    template: &ScenarioSpec,
    test: &dyn TestStatistic,
    grid: &[f64],
    alpha: f64,
    reps: u64,
    master_seed: u64,
) -> Result<Vec<SimulationReport>> {
    let mut out = Vec::with_capacity(grid.len());
    power_curve_each(template, test, grid, alpha, reps, master_seed, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Streaming form of [`power_curve`]: `sink` sees each report as it completes.
pub fn power_curve_each<F>(
    template: &ScenarioSpec,
    test: &dyn TestStatistic,
    grid: &[f64],
    alpha: f64,
    reps: u64,
    master_seed: u64,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(&SimulationReport) -> Result<()>,
{
    if grid.is_empty() {
        return Err(CovTestError::InvalidInput("v0 grid is empty".into()));
    }
    for &v0 in grid {
        let spec = ScenarioSpec {
            hypothesis: template.hypothesis.with_v0(v0),
            ..*template
        };
        let report = run_monte_carlo(&spec, test, alpha, reps, master_seed)?;
        sink(&report)?;
    }
    Ok(())
}
