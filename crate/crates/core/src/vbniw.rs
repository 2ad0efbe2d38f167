//! Variational-Bayes measurement update with a normal-inverse-Wishart prior
//! on the measurement-noise mean and variance, plus the likelihood-grid
//! tuning of the confidence parameter and the initial degrees of freedom.
//!
//! The measurement is scalar (`m = 1`), so every Wishart quantity is a
//! positive scalar.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filter::{correct, GaussianBelief};
use crate::measurement::MeasurementModel;
use crate::moments::{propagate, MomentResult, MomentRule};

/// Measurement dimension.
const M: f64 = 1.0;

/// Denominator used when turning the inverse-Wishart scale into a variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Denominator {
    /// `U / (u - m - 1)`, the inverse-Wishart mean.
    #[default]
    Mean,
    /// `U / (u + m + 1)`, the inverse-Wishart mode. Only meant for
    /// sensitivity checks.
    Mode,
}

/// Parameters of the normal-inverse-Wishart noise prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiwBelief {
    /// Location of the noise mean (rad).
    pub mu_prime: f64,
    /// Confidence parameter scaling the noise-mean covariance.
    pub alpha_prime: f64,
    /// Degrees of freedom.
    pub u_prime: f64,
    /// Scale (rad²).
    pub u_scale: f64,
}

impl NiwBelief {
    pub fn new(mu_prime: f64, alpha_prime: f64, u_prime: f64, u_scale: f64) -> Result<Self> {
        let niw = Self { mu_prime, alpha_prime, u_prime, u_scale };
        niw.validate()?;
        Ok(niw)
    }

    /// Prior whose expected variance equals `r_guess`:
    /// `U = (u - m - 1) r_guess`.
    pub fn from_guess(mu_prime: f64, alpha_prime: f64, u_prime: f64, r_guess: f64) -> Result<Self> {
        Self::new(mu_prime, alpha_prime, u_prime, (u_prime - M - 1.0) * r_guess)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_prime > 0.0) || !self.alpha_prime.is_finite() {
            return Err(Error::InvalidArgument("confidence parameter must be positive"));
        }
        if !(self.u_prime > M + 1.0) {
            return Err(Error::DegreesOfFreedom { dof: self.u_prime, bound: M + 1.0 });
        }
        if !(self.u_scale > 0.0) || !self.u_scale.is_finite() || !self.mu_prime.is_finite() {
            return Err(Error::InvalidArgument("scale must be positive and finite"));
        }
        Ok(())
    }

    pub fn expected_r(&self) -> Result<f64> {
        expected_r(self.u_prime, self.u_scale)
    }
}

/// Scalar inverse-Wishart density `IW(b; λ, ψ)`.
pub fn iw_density(b: f64, lambda: f64, psi: f64) -> Result<f64> {
    if !(b > 0.0) || !(psi > 0.0) {
        return Err(Error::InvalidArgument("inverse-Wishart argument and scale must be positive"));
    }
    if !(lambda > M + 1.0) {
        return Err(Error::DegreesOfFreedom { dof: lambda, bound: M + 1.0 });
    }
    let half = lambda / 2.0;
    let log_p = half * libm::log(psi / 2.0) - libm::lgamma(half) - (half + 1.0) * libm::log(b)
        - psi / (2.0 * b);
    Ok(libm::exp(log_p))
}

/// Joint density of noise mean `r` and variance `b` under
/// `N(r; μ', α' b) · IW(b; u', U')`.
pub fn niw_density(r: f64, b: f64, niw: &NiwBelief) -> Result<f64> {
    niw.validate()?;
    let iw = iw_density(b, niw.u_prime, niw.u_scale)?;
    Ok(normal_density(r - niw.mu_prime, niw.alpha_prime * b) * iw)
}

fn normal_density(residual: f64, variance: f64) -> f64 {
    libm::exp(-0.5 * residual * residual / variance) / libm::sqrt(2.0 * PI * variance)
}

/// Expected noise variance `U / (u - m - 1)`.
pub fn expected_r(u: f64, u_scale: f64) -> Result<f64> {
    expected_r_with(u, u_scale, Denominator::Mean)
}

fn expected_r_with(u: f64, u_scale: f64, denominator: Denominator) -> Result<f64> {
    if !(u_scale > 0.0) {
        return Err(Error::InvalidArgument("scale must be positive"));
    }
    match denominator {
        Denominator::Mean if !(u > M + 1.0) => Err(Error::DegreesOfFreedom { dof: u, bound: M + 1.0 }),
        Denominator::Mean => Ok(u_scale / (u - M - 1.0)),
        Denominator::Mode => Ok(u_scale / (u + M + 1.0)),
    }
}

/// Noise-mean update `(μ' + α' e) / (α' + 1)` for a wrapped innovation `e`.
pub fn update_mu(mu_prime: f64, alpha_prime: f64, innovation: f64) -> f64 {
    (mu_prime + alpha_prime * innovation) / (alpha_prime + 1.0)
}

pub fn update_alpha(alpha_prime: f64) -> f64 {
    alpha_prime / (alpha_prime + 1.0)
}

/// `B = ε² + spread + α R`, with `ε` the wrapped residual
/// `y - h(x̂) - μ` at the current iterate.
pub fn compute_b(residual: f64, posterior_spread: f64, alpha: f64, r: f64) -> f64 {
    residual * residual + posterior_spread + alpha * r
}

/// `D = R + (μ - μ')² / α'`.
pub fn compute_d(r: f64, alpha_prime: f64, mu: f64, mu_prime: f64) -> f64 {
    let drift = mu - mu_prime;
    r + drift * drift / alpha_prime
}

/// Gaussian density of an (already wrapped) residual under `N(0, p_yy)`.
pub fn measurement_likelihood(residual: f64, p_yy: f64) -> f64 {
    normal_density(residual, p_yy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbOptions {
    /// Stop when the posterior mean moves less than this (∞-norm).
    pub zeta: f64,
    pub max_iter: usize,
    pub denominator: Denominator,
}

impl Default for VbOptions {
    fn default() -> Self {
        Self { zeta: 1e-3, max_iter: 50, denominator: Denominator::Mean }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbUpdateResult {
    pub posterior: GaussianBelief,
    /// Noise prior for the next step: the terminal `û`, `Û` with `μ'`
    /// moved to the terminal `μ`.
    pub niw: NiwBelief,
    pub r_hat: f64,
    pub mu_hat: f64,
    pub alpha_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Innovation variance at the terminal iterate.
    pub p_yy: f64,
    /// Wrapped `y - ŷ⁻ - μ` at the terminal iterate.
    pub innovation: f64,
    /// Wrapped `y - ŷ⁻`.
    pub prediction_residual: f64,
    /// Set when an iterate failed and the previous one was kept.
    pub fault: Option<Error>,
}

impl VbUpdateResult {
    /// Likelihood of the measurement under `N(ŷ⁻, P_yy)` at the terminal
    /// iterate; the tuning score.
    pub fn likelihood(&self) -> f64 {
        measurement_likelihood(self.prediction_residual, self.p_yy)
    }
}

/// One VB measurement update by fixed-point iteration.
pub fn vb_measurement_update<M: MeasurementModel>(
    prior: &GaussianBelief,
    y: f64,
    niw: &NiwBelief,
    model: &M,
    rule: &MomentRule,
    opts: &VbOptions,
) -> Result<VbUpdateResult> {
    let moments = propagate(prior, rule, model)?;
    vb_update_with_moments(prior, &moments, y, niw, model, rule, opts)
}

/// As [`vb_measurement_update`] with the prior moments already computed.
pub fn vb_update_with_moments<M: MeasurementModel>(
    prior: &GaussianBelief,
    prior_moments: &MomentResult,
    y: f64,
    niw: &NiwBelief,
    model: &M,
    rule: &MomentRule,
    opts: &VbOptions,
) -> Result<VbUpdateResult> {
    niw.validate()?;
    if !(opts.zeta > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("zeta must be positive and max_iter at least 1"));
    }
    let alpha = update_alpha(niw.alpha_prime);
    let u_next = niw.u_prime + 2.0;

    // iterate i
    let mut post = *prior;
    let mut post_moments = prior_moments.clone();
    let mut u_i = niw.u_prime;
    let mut scale_i = niw.u_scale;

    let mut out = VbUpdateResult {
        posterior: *prior,
        niw: *niw,
        r_hat: expected_r_with(u_i, scale_i, opts.denominator)?,
        mu_hat: niw.mu_prime,
        alpha_hat: alpha,
        iterations: 0,
        converged: false,
        p_yy: prior_moments.spread,
        innovation: model.residual(y, prior_moments.y_hat + niw.mu_prime),
        prediction_residual: model.residual(y, prior_moments.y_hat),
        fault: None,
    };

    for i in 0..opts.max_iter {
        let r = expected_r_with(u_i, scale_i, opts.denominator)?;
        let mu = update_mu(niw.mu_prime, niw.alpha_prime, model.residual(y, post_moments.y_hat));
        let residual = model.residual(y, model.h(&post.mean)? + mu);
        let b = compute_b(residual, post_moments.spread, alpha, r);
        let d = compute_d(r, niw.alpha_prime, mu, niw.mu_prime);
        let scale_next = niw.u_scale + b + d;
        if !scale_next.is_finite() || !r.is_finite() {
            out.fault = Some(Error::NonFinite("noise scale"));
            break;
        }

        let innovation = model.residual(y, prior_moments.y_hat + mu);
        let (next, p_yy) = match correct(prior, prior_moments, innovation, r) {
            Ok(v) => v,
            Err(e) => {
                out.fault = Some(e);
                break;
            }
        };
        let step = (next.mean - post.mean).amax();

        out.posterior = next;
        out.niw = NiwBelief { mu_prime: mu, alpha_prime: niw.alpha_prime, u_prime: u_next, u_scale: scale_next };
        out.r_hat = r;
        out.mu_hat = mu;
        out.iterations = i + 1;
        out.p_yy = p_yy;
        out.innovation = innovation;

        post = next;
        u_i = u_next;
        scale_i = scale_next;
        if step < opts.zeta {
            out.converged = true;
            break;
        }
        match propagate(&post, rule, model) {
            Ok(m) => post_moments = m,
            Err(e) => {
                out.fault = Some(e);
                break;
            }
        }
    }
    if out.iterations == 0 {
        return Err(out.fault.unwrap_or(Error::NonFinite("variational update")));
    }
    Ok(out)
}

/// Integer candidate grids for the likelihood tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuningGrid {
    pub dof_min: u32,
    pub dof_max: u32,
    pub alpha_min: u32,
    pub alpha_max: u32,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self { dof_min: 3, dof_max: 23, alpha_min: 1, alpha_max: 20 }
    }
}

/// Runs the full update for each candidate and keeps the one whose
/// terminal predictive gives the measurement the highest likelihood.
/// Ties go to the earliest (smallest) candidate.
fn best_of<M, I>(
    prior: &GaussianBelief,
    moments: &MomentResult,
    y: f64,
    candidates: I,
    model: &M,
    rule: &MomentRule,
    opts: &VbOptions,
) -> Result<(f64, VbUpdateResult)>
where
    M: MeasurementModel,
    I: Iterator<Item = (f64, NiwBelief)>,
{
    let mut best: Option<(f64, f64, VbUpdateResult)> = None;
    for (value, niw) in candidates {
        let Ok(res) = vb_update_with_moments(prior, moments, y, &niw, model, rule, opts) else {
            continue;
        };
        let l = res.likelihood();
        if !l.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |(bl, _, _)| l > *bl) {
            best = Some((l, value, res));
        }
    }
    best.map(|(_, v, r)| (v, r)).ok_or(Error::NonFinite("every tuning candidate"))
}

/// Picks `û'₀` at the first step with `α' = 1`; `Û'₀ = (û'₀ - m - 1) r_guess`.
#[allow(clippy::too_many_arguments)]
pub fn tune_dof<M: MeasurementModel>(
    prior: &GaussianBelief,
    moments: &MomentResult,
    y: f64,
    mu_guess: f64,
    r_guess: f64,
    grid: &TuningGrid,
    model: &M,
    rule: &MomentRule,
    opts: &VbOptions,
) -> Result<(f64, VbUpdateResult)> {
    let candidates = (grid.dof_min..=grid.dof_max).filter_map(|u| {
        NiwBelief::from_guess(mu_guess, 1.0, u as f64, r_guess).ok().map(|n| (u as f64, n))
    });
    best_of(prior, moments, y, candidates, model, rule, opts)
}

/// Picks `α'` for the current step, holding the other prior parameters.
#[allow(clippy::too_many_arguments)]
pub fn tune_alpha<M: MeasurementModel>(
    prior: &GaussianBelief,
    moments: &MomentResult,
    y: f64,
    niw: &NiwBelief,
    grid: &TuningGrid,
    model: &M,
    rule: &MomentRule,
    opts: &VbOptions,
) -> Result<(f64, VbUpdateResult)> {
    let candidates = (grid.alpha_min..=grid.alpha_max)
        .map(|a| (a as f64, NiwBelief { alpha_prime: a as f64, ..*niw }));
    best_of(prior, moments, y, candidates, model, rule, opts)
}

/// Outcome of [`tune_parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tuned {
    /// Selected initial degrees of freedom, when they were tuned.
    pub dof: Option<f64>,
    pub alpha_prime: f64,
    pub result: VbUpdateResult,
}

/// Tune-then-update for one step. With `niw = None` (first step) the
/// degrees of freedom are chosen first from `mu_guess`/`r_guess`; the
/// confidence parameter is then chosen on every call.
#[allow(clippy::too_many_arguments)]
pub fn tune_parameters<M: MeasurementModel>(
    prior: &GaussianBelief,
    y: f64,
    niw: Option<&NiwBelief>,
    mu_guess: f64,
    r_guess: f64,
    grid: &TuningGrid,
    model: &M,
    rule: &MomentRule,
    opts: &VbOptions,
) -> Result<Tuned> {
    let moments = propagate(prior, rule, model)?;
    let (dof, base) = match niw {
        Some(n) => (None, *n),
        None => {
            let (u0, _) = tune_dof(prior, &moments, y, mu_guess, r_guess, grid, model, rule, opts)?;
            (Some(u0), NiwBelief::from_guess(mu_guess, 1.0, u0, r_guess)?)
        }
    };
    let (alpha_prime, result) = tune_alpha(prior, &moments, y, &base, grid, model, rule, opts)?;
    Ok(Tuned { dof, alpha_prime, result })
}
