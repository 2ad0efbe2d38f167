//! MAP running-mean estimate of the measurement-noise mean and sliding-window
//! residual estimate of its variance.

use alloc::collections::VecDeque;

use crate::error::{Error, Result};
use crate::filter::{correct, GaussianBelief};
use crate::measurement::MeasurementModel;
use crate::moments::{propagate, MomentRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapMleConfig {
    /// Residual window length `L`.
    pub window: usize,
    /// Subtract the current mean estimate from residuals before squaring.
    pub mean_removed: bool,
    /// When false the initial guesses are used at every step.
    pub adapt: bool,
}

impl Default for MapMleConfig {
    fn default() -> Self {
        Self { window: 20, mean_removed: false, adapt: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapMleState {
    /// Number of innovations folded into `r_hat`.
    pub k: usize,
    pub r_hat: f64,
    pub r_cov: f64,
    pub window: VecDeque<f64>,
    pub config: MapMleConfig,
}

impl MapMleState {
    /// Starts from guesses of the noise mean and variance.
    pub fn new(r_guess: f64, cov_guess: f64, config: MapMleConfig) -> Result<Self> {
        if !(cov_guess > 0.0) || !r_guess.is_finite() {
            return Err(Error::InvalidArgument("variance guess must be positive"));
        }
        if config.window == 0 {
            return Err(Error::InvalidConfig("window length must be at least 1"));
        }
        Ok(Self {
            k: 0,
            r_hat: r_guess,
            r_cov: cov_guess,
            window: VecDeque::with_capacity(config.window),
            config,
        })
    }

    fn push_residual(&mut self, residual: f64) {
        if self.window.len() == self.config.window {
            self.window.pop_front();
        }
        self.window.push_back(residual);
    }
}

/// Folds one wrapped innovation into the running mean and returns it.
pub fn update_noise_mean(state: &mut MapMleState, innovation: f64) -> f64 {
    state.k += 1;
    state.r_hat += (innovation - state.r_hat) / state.k as f64;
    state.r_hat
}

/// `Ĉ_v + spread`, with `Ĉ_v` the mean squared residual over the window.
pub fn estimate_r_residual(state: &MapMleState, posterior_spread: f64) -> Result<f64> {
    if state.window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let offset = if state.config.mean_removed { state.r_hat } else { 0.0 };
    let c_v = state.window.iter().map(|e| (e - offset) * (e - offset)).sum::<f64>()
        / state.window.len() as f64;
    Ok(c_v + posterior_spread)
}

/// Innovation-based variant `Ĉ − spread⁻`. It can go negative, which is
/// why the filter uses the residual form.
pub fn estimate_r_innovation(innovations: &[f64], prior_spread: f64) -> Result<f64> {
    if innovations.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let c = innovations.iter().map(|e| e * e).sum::<f64>() / innovations.len() as f64;
    Ok(c - prior_spread)
}

/// Known-statistics update with the current estimates, followed by the
/// estimate refresh from this step's innovation and post-fit residual.
pub fn mapmle_measurement_update<M: MeasurementModel>(
    prior: &GaussianBelief,
    y: f64,
    state: &MapMleState,
    model: &M,
    rule: &MomentRule,
) -> Result<(GaussianBelief, MapMleState)> {
    if !(state.r_cov > 0.0) {
        return Err(Error::InvalidArgument("measurement variance must be positive"));
    }
    let moments = propagate(prior, rule, model)?;
    let residual = model.residual(y, moments.y_hat + state.r_hat);
    let (post, _) = correct(prior, &moments, residual, state.r_cov)?;

    let mut next = state.clone();
    if next.config.adapt {
        update_noise_mean(&mut next, model.residual(y, moments.y_hat));
        let post_moments = propagate(&post, rule, model)?;
        next.push_residual(model.residual(y, post_moments.y_hat));
        next.r_cov = estimate_r_residual(&next, post_moments.spread)?;
    }
    Ok((post, next))
}
