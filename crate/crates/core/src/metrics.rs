//! Monte Carlo evaluation: RMSE, track loss, bias norm, ANEES and relative
//! execution time. Diverged runs are excluded through a mask where `true`
//! means "excluded".

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filter::GaussianBelief;
use crate::moments::cholesky;
use crate::special::chi2_quantile;
use crate::Vector4;

/// Terminal position error above which a run counts as lost (km).
pub const TRACK_LOSS_BOUND: f64 = 0.2;

/// Per-step estimation errors `x̂ - x` of one run, with NEES values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunErrors {
    pub errors: Vec<Vector4>,
    /// NaN where the covariance was not positive definite.
    pub nees: Vec<f64>,
}

impl RunErrors {
    pub fn position_error(&self, k: usize) -> f64 {
        libm::hypot(self.errors[k][0], self.errors[k][1])
    }

    pub fn velocity_error(&self, k: usize) -> f64 {
        libm::hypot(self.errors[k][2], self.errors[k][3])
    }

    pub fn terminal_position_error(&self) -> f64 {
        self.errors.last().map_or(f64::NAN, |_| self.position_error(self.errors.len() - 1))
    }
}

/// Results of one filter variant over an ensemble of runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnsembleResult {
    /// Terminal position error of every run (km).
    pub terminal_position_error: Vec<f64>,
    /// Runs whose update failed numerically.
    pub numerical_failure: Vec<bool>,
    /// Wall time of the filter loop per run (s).
    pub wall_time: Vec<f64>,
    /// Per-step records for the runs that feed RMSE, bias and ANEES; a
    /// prefix of the runs above.
    pub traces: Vec<RunErrors>,
}

impl EnsembleResult {
    pub fn len(&self) -> usize {
        self.terminal_position_error.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal_position_error.is_empty()
    }

    pub fn push(&mut self, terminal: f64, failed: bool, wall_time: f64, trace: Option<RunErrors>) {
        self.terminal_position_error.push(terminal);
        self.numerical_failure.push(failed);
        self.wall_time.push(wall_time);
        if let Some(t) = trace {
            self.traces.push(t);
        }
    }

    /// Divergence mask for the traced runs.
    pub fn trace_mask(&self, bound: f64) -> Vec<bool> {
        (0..self.traces.len())
            .map(|i| self.numerical_failure[i] || !(self.terminal_position_error[i] <= bound))
            .collect()
    }

    pub fn track_loss_pct(&self, bound: f64) -> f64 {
        let terminal: Vec<f64> = self
            .terminal_position_error
            .iter()
            .zip(&self.numerical_failure)
            .map(|(e, f)| if *f { f64::INFINITY } else { *e })
            .collect();
        track_loss_pct(&terminal, bound)
    }

    pub fn mean_wall_time(&self) -> f64 {
        self.wall_time.iter().sum::<f64>() / self.wall_time.len().max(1) as f64
    }
}

fn survivors(len: usize, mask: &[bool]) -> Result<usize> {
    if mask.len() != len {
        return Err(Error::InvalidArgument("mask length differs from run count"));
    }
    let n = mask.iter().filter(|m| !**m).count();
    if n == 0 {
        return Err(Error::NoSurvivors);
    }
    Ok(n)
}

fn check_steps<T>(runs: &[Vec<T>]) -> Result<usize> {
    let steps = runs.first().map_or(0, |r| r.len());
    if runs.iter().any(|r| r.len() != steps) {
        return Err(Error::InvalidArgument("runs differ in step count"));
    }
    Ok(steps)
}

/// Per-step `√(mean of squared errors)` over surviving runs, given scalar
/// error magnitudes `errors[run][step]`.
pub fn rmse(errors: &[Vec<f64>], mask: &[bool]) -> Result<Vec<f64>> {
    let n = survivors(errors.len(), mask)?;
    let steps = check_steps(errors)?;
    let mut acc = alloc::vec![0.0; steps];
    for (run, _) in errors.iter().zip(mask).filter(|(_, m)| !**m) {
        for (a, e) in acc.iter_mut().zip(run) {
            *a += e * e;
        }
    }
    Ok(acc.into_iter().map(|s| libm::sqrt(s / n as f64)).collect())
}

/// Percentage of runs whose terminal error is strictly above `bound`.
/// Non-finite errors count as lost.
pub fn track_loss_pct(terminal_errors: &[f64], bound: f64) -> f64 {
    if terminal_errors.is_empty() {
        return 0.0;
    }
    let lost = terminal_errors.iter().filter(|e| !(**e <= bound)).count();
    100.0 * lost as f64 / terminal_errors.len() as f64
}

/// Per-step `‖mean(x̂) - mean(x)‖₂` over surviving runs.
pub fn bias_norm(estimates: &[Vec<Vector4>], truths: &[Vec<Vector4>], mask: &[bool]) -> Result<Vec<f64>> {
    if estimates.len() != truths.len() {
        return Err(Error::InvalidArgument("estimate and truth run counts differ"));
    }
    let errors: Vec<Vec<Vector4>> = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| e.iter().zip(t).map(|(a, b)| a - b).collect())
        .collect();
    mean_error_norm(&errors, mask)
}

/// Per-step norm of the mean error vector over surviving runs.
pub fn mean_error_norm(errors: &[Vec<Vector4>], mask: &[bool]) -> Result<Vec<f64>> {
    let n = survivors(errors.len(), mask)?;
    let steps = check_steps(errors)?;
    let mut acc = alloc::vec![Vector4::zeros(); steps];
    for (run, _) in errors.iter().zip(mask).filter(|(_, m)| !**m) {
        for (a, e) in acc.iter_mut().zip(run) {
            *a += e;
        }
    }
    Ok(acc.into_iter().map(|s| (s / n as f64).norm()).collect())
}

/// `(x - x̂)ᵀ P⁻¹ (x - x̂)`.
pub fn nees(truth: &Vector4, belief: &GaussianBelief) -> Result<f64> {
    let s = cholesky(&belief.cov)?;
    let e = truth - belief.mean;
    let z = s
        .solve_lower_triangular(&e)
        .ok_or(Error::NotPositiveDefinite { pivot: 0 })?;
    Ok(z.norm_squared())
}

/// Two-sided 95% region of the ANEES for `n`-dimensional states over `m`
/// runs.
pub fn anees_bounds(n: usize, m: usize) -> Result<(f64, f64)> {
    let dof = (n * m) as f64;
    Ok((chi2_quantile(0.025, dof)? / dof, chi2_quantile(0.975, dof)? / dof))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AneesSeries {
    pub values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    /// Runs that contributed.
    pub runs: usize,
}

impl AneesSeries {
    pub fn fraction_inside(&self) -> f64 {
        let inside = self.values.iter().filter(|v| **v >= self.lower && **v <= self.upper).count();
        inside as f64 / self.values.len().max(1) as f64
    }
}

/// Per-step `ΣNEES / (n M)` over surviving runs. Runs with any non-finite
/// NEES value are excluded as well.
pub fn anees(nees: &[Vec<f64>], n: usize, mask: &[bool]) -> Result<AneesSeries> {
    if n == 0 {
        return Err(Error::InvalidArgument("state dimension must be at least 1"));
    }
    survivors(nees.len(), mask)?;
    let steps = check_steps(nees)?;
    let mut acc = alloc::vec![0.0; steps];
    let mut m = 0;
    for (run, _) in nees.iter().zip(mask).filter(|(r, x)| !**x && r.iter().all(|v| v.is_finite())) {
        m += 1;
        for (a, v) in acc.iter_mut().zip(run) {
            *a += v;
        }
    }
    if m == 0 {
        return Err(Error::NoSurvivors);
    }
    let (lower, upper) = anees_bounds(n, m)?;
    let denom = (n * m) as f64;
    Ok(AneesSeries { values: acc.into_iter().map(|s| s / denom).collect(), lower, upper, runs: m })
}

/// Mean wall time of each entry divided by the baseline's mean.
pub fn relative_execution_time<K: PartialEq + Clone>(times: &[(K, Vec<f64>)], baseline: &K) -> Result<Vec<(K, f64)>> {
    let mean = |t: &[f64]| t.iter().sum::<f64>() / t.len().max(1) as f64;
    let base = times
        .iter()
        .find(|(k, _)| k == baseline)
        .map(|(_, t)| mean(t))
        .ok_or(Error::MissingBaseline)?;
    if !(base > 0.0) {
        return Err(Error::MissingBaseline);
    }
    Ok(times.iter().map(|(k, t)| (k.clone(), mean(t) / base)).collect())
}
